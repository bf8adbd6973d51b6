// Drives the photocount executable end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "photocount/io.hpp"
#include "photocount/pipeline.hpp"

namespace fs = std::filesystem;
using photocount::Json;
using photocount::read_file;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "photocount_cli_test";

struct Run {
  int exit_code;
  std::string out;
  std::string err;
};

Run run(const std::string& args) {
  fs::create_directories(kRoot);
  const auto out = kRoot / "stdout.txt";
  const auto err = kRoot / "stderr.txt";
  const std::string cmd = std::string("\"") + PHOTOCOUNT_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

fs::path dir(const std::string& name) {
  const auto d = kRoot / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const std::string& name, const Json& j) {
  fs::create_directories(kRoot);
  const auto path = kRoot / (name + ".json");
  photocount::write_file_atomic(path, j.dump(2));
  return path;
}

Json small_pdc(double mu = 0.2253) {
  return Json{{"source", {{"kind", "pdc_pairs"}, {"mean", mu}, {"cutoff", 14}}},
              {"detector", {{"eta", 0.67}, {"dark_mean", 4e-4}}},
              {"n_gates", 300000},
              {"cutoff", 10},
              {"seed", 11}};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void check_error_document(const std::string& err, const std::string& kind) {
  const auto doc = Json::parse(err.substr(0, err.find('\n')));
  CHECK(doc.at("error").at("kind") == kind);
  CHECK(doc.at("schema_version") == photocount::kSchemaVersion);
}

}  // namespace

TEST_CASE("shipped configs load") {
  for (const auto& entry : fs::directory_iterator(PHOTOCOUNT_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(photocount::load_config(entry.path()));
  }
}

TEST_CASE("every command is byte-identical across reruns and shard counts") {
  const auto cfg = write_config("det", small_pdc());
  const auto a = dir("det_a"), b = dir("det_b"), c = dir("det_c");
  REQUIRE(run("simulate --config " + q(cfg) + " --out " + q(a)).exit_code == 0);
  REQUIRE(run("simulate --config " + q(cfg) + " --out " + q(b)).exit_code == 0);
  REQUIRE(run("simulate --config " + q(cfg) + " --out " + q(c) + " --shards 3").exit_code == 0);
  for (const auto* f : {"histogram.csv", "histogram.json"}) {
    CHECK(read_file(a / f) == read_file(b / f));
    CHECK(read_file(a / f) == read_file(c / f));
  }
  for (const auto& d : {a, b, c}) {
    REQUIRE(run("analyze --input " + q(d / "histogram.csv") + " --config " + q(cfg) + " --out " + q(d)).exit_code == 0);
    REQUIRE(run("reconstruct --input " + q(d / "analysis.json") + " --config " + q(cfg) + " --out " + q(d)).exit_code ==
            0);
  }
  for (const auto* f : {"analysis.json", "reconstruction.csv", "negativity.json"}) {
    CHECK(read_file(a / f) == read_file(b / f));
    CHECK(read_file(a / f) == read_file(c / f));
  }

  // A different seed changes the histogram.
  const auto d = dir("det_d");
  REQUIRE(run("simulate --config " + q(cfg) + " --out " + q(d) + " --seed 12").exit_code == 0);
  CHECK(read_file(a / "histogram.csv") != read_file(d / "histogram.csv"));

  auto sweep = small_pdc();
  sweep.erase("source");
  sweep["pump"] = {{"powers_uW", {0.1, 1.0}}, {"pairs_per_uW", 0.2}};
  sweep["n_gates"] = 100000;
  const auto scfg = write_config("det_sweep", sweep);
  const auto s1 = dir("sweep_1"), s2 = dir("sweep_2");
  REQUIRE(run("sweep --config " + q(scfg) + " --out " + q(s1)).exit_code == 0);
  REQUIRE(run("sweep --config " + q(scfg) + " --out " + q(s2) + " --shards 2").exit_code == 0);
  CHECK(read_file(s1 / "sweep.csv") == read_file(s2 / "sweep.csv"));
  CHECK(read_file(s1 / "sweep.csv").rfind("power_uW,gamma,std_error,n_std\n", 0) == 0);
}

TEST_CASE("outputs round trip through their parsers") {
  const auto cfg = write_config("rt", small_pdc());
  const auto d = dir("rt");
  REQUIRE(run("simulate --config " + q(cfg) + " --out " + q(d)).exit_code == 0);
  const auto sidecar = Json::parse(read_file(d / "histogram.json"));
  const auto h = photocount::histogram_from_csv(read_file(d / "histogram.csv"), sidecar);
  CHECK(photocount::histogram_to_csv(h) == read_file(d / "histogram.csv"));
  CHECK(h.n_gates == 300000);
  CHECK(sidecar.at("schema_version") == photocount::kSchemaVersion);
  CHECK(photocount::source_from_json(sidecar.at("source")).cutoff == 14);

  REQUIRE(run("analyze --input " + q(d / "histogram.csv") + " --out " + q(d)).exit_code == 0);
  const auto analysis = Json::parse(read_file(d / "analysis.json"));
  CHECK(analysis.at("schema_version") == photocount::kSchemaVersion);
  const auto fit = photocount::peak_fit_from_json(analysis.at("fit"));
  CHECK(photocount::to_json(fit) == analysis.at("fit"));
  const auto gamma = photocount::gamma_report_from_json(analysis.at("gamma"));
  CHECK(photocount::to_json(gamma) == analysis.at("gamma"));

  REQUIRE(run("reconstruct --input " + q(d / "analysis.json") + " --config " + q(cfg) + " --out " + q(d)).exit_code == 0);
  const auto text = read_file(d / "reconstruction.csv");
  CHECK(photocount::distribution_to_csv(photocount::distribution_from_csv(text)) == text);
}

TEST_CASE("zero efficiency and no dark counts leave only the pedestal") {
  auto j = small_pdc();
  j["detector"] = {{"eta", 0.0}, {"dark_mean", 0.0}};
  const auto d = dir("dark");
  REQUIRE(run("simulate --config " + q(write_config("dark", j)) + " --out " + q(d)).exit_code == 0);
  const auto h = photocount::histogram_from_csv(read_file(d / "histogram.csv"));
  const photocount::DetectorModel det;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    if (h.bin_center(i) > det.offset + 7.0 * det.sigma0) CHECK(h.counts[i] == 0);
  }
  CHECK(h.total() == 300000);
}

TEST_CASE("coherent light is not flagged as nonclassical") {
  const auto d = dir("coherent");
  auto j = small_pdc();
  j["source"] = {{"kind", "poisson"}, {"mean", 1.5}, {"cutoff", 20}};
  REQUIRE(run("simulate --config " + q(write_config("coherent", j)) + " --out " + q(d)).exit_code == 0);
  REQUIRE(run("analyze --input " + q(d / "histogram.csv") + " --out " + q(d)).exit_code == 0);
  const auto analysis = Json::parse(read_file(d / "analysis.json"));
  CHECK(analysis.at("gamma").at("violated") == false);
  CHECK(analysis.at("parity").at("nonclassical") == false);
}

TEST_CASE("an identity detector reconstructs the measured distribution") {
  const auto d = dir("identity");
  const auto cfg = write_config("identity", small_pdc());
  REQUIRE(run("simulate --config " + q(cfg) + " --out " + q(d)).exit_code == 0);
  REQUIRE(run("analyze --input " + q(d / "histogram.csv") + " --out " + q(d)).exit_code == 0);
  auto j = small_pdc();
  j["detector"] = {{"eta", 1.0}, {"dark_mean", 0.0}};
  REQUIRE(run("reconstruct --input " + q(d / "analysis.json") + " --config " + q(write_config("id_det", j)) +
              " --out " + q(d))
              .exit_code == 0);
  const auto measured = Json::parse(read_file(d / "analysis.json")).at("probabilities").get<std::vector<double>>();
  const auto rec = photocount::distribution_from_csv(read_file(d / "reconstruction.csv"));
  for (std::size_t n = 0; n < rec.size(); ++n) {
    CHECK(rec[n] == doctest::Approx(n < measured.size() ? measured[n] : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("exit codes and error documents") {
  SUBCASE("usage") {
    const auto r = run("");
    CHECK(r.exit_code == 2);
    check_error_document(r.err, "usage_error");
    CHECK(run("analyze").exit_code == 2);
  }
  SUBCASE("invalid config") {
    const auto r = run("simulate --config " + q(write_config("bad", Json{{"cutoff", 1}})));
    CHECK(r.exit_code == 2);
    check_error_document(r.err, "config_error");
    CHECK(run("simulate --config " + q(kRoot / "nope.json")).exit_code == 2);
  }
  SUBCASE("missing seed") {
    auto j = small_pdc();
    j.erase("seed");
    const auto r = run("simulate --config " + q(write_config("noseed", j)) + " --out " + q(dir("noseed")));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
  }
  SUBCASE("source too wide for its cutoff") {
    auto j = small_pdc(3.0);
    j["source"]["cutoff"] = 10;
    const auto r = run("simulate --config " + q(write_config("wide", j)) + " --out " + q(dir("wide")));
    CHECK(r.exit_code == 2);
    check_error_document(r.err, "truncation_error");
  }
  SUBCASE("empty sweep") {
    auto j = small_pdc();
    j["pump"] = {{"powers_uW", Json::array()}};
    CHECK(run("sweep --config " + q(write_config("empty_sweep", j)) + " --out " + q(dir("es"))).exit_code == 2);
  }
  SUBCASE("pedestal only fails the fit stage") {
    auto j = small_pdc();
    j["source"] = {{"kind", "fock"}, {"n", 0}, {"cutoff", 10}};
    j["detector"] = {{"eta", 0.67}, {"dark_mean", 0.0}};
    const auto d = dir("pedestal");
    REQUIRE(run("simulate --config " + q(write_config("pedestal", j)) + " --out " + q(d)).exit_code == 0);
    const auto r = run("analyze --input " + q(d / "histogram.csv") + " --out " + q(d));
    CHECK(r.exit_code == 3);
    CHECK(Json::parse(read_file(d / "analysis.json")).at("error").is_string());
  }
  SUBCASE("strict escalates warnings") {
    auto j = small_pdc();
    j["source"] = {{"kind", "fock"}, {"n", 10}, {"cutoff", 10}};
    j["detector"] = {{"eta", 1.0}, {"dark_mean", 0.0}};
    const auto cfg = write_config("saturating", j);
    CHECK(run("simulate --config " + q(cfg) + " --out " + q(dir("sat"))).exit_code == 0);
    const auto r = run("simulate --config " + q(cfg) + " --out " + q(dir("sat")) + " --strict");
    CHECK(r.exit_code == 4);
    CHECK(r.err.find("warning") != std::string::npos);
  }
  SUBCASE("reconstruct needs an efficiency") {
    auto j = small_pdc();
    j["detector"]["eta"] = 0.0;
    photocount::write_file_atomic(kRoot / "fake_analysis.json", R"({"probabilities": [0.9, 0.1, 0, 0]})");
    const auto r = run("reconstruct --input " + q(kRoot / "fake_analysis.json") + " --config " +
                       q(write_config("eta0", j)) + " --out " + q(dir("eta0")));
    CHECK(r.exit_code == 2);
  }
}
