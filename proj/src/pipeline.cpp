#include "photocount/pipeline.hpp"

#include <cmath>

#include "photocount/error.hpp"

namespace photocount {

namespace {

std::uint64_t require_seed(const RunConfig& c) {
  if (!c.seed) throw ConfigError("a seed is required (config 'seed' or --seed)");
  return *c.seed;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int finish(CommandResult& r, bool strict) {
  if (r.exit_code == kExitOk && strict && !r.warnings.empty()) r.exit_code = kExitStrict;
  return r.exit_code;
}

}  // namespace

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  try {
    if (j.contains("source")) c.source = source_from_json(j.at("source"));
    if (j.contains("detector")) c.detector = detector_from_json(j.at("detector"));
    if (j.contains("pump")) c.pump = pump_from_json(j.at("pump"));
    c.n_gates = j.value("n_gates", c.n_gates);
    c.cutoff = j.value("cutoff", c.cutoff);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    c.bins = j.value("bins", c.bins);
    c.shards = j.value("shards", c.shards);
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      const auto mode = f.value("mode", std::string("simultaneous"));
      if (mode != "simultaneous" && mode != "per_peak") throw ConfigError("fit mode must be simultaneous or per_peak");
      c.fit.mode = mode == "per_peak" ? FitMode::per_peak : FitMode::simultaneous;
      c.fit.shared_width = f.value("shared_width", false);
      c.fit.max_iterations = f.value("max_iterations", c.fit.max_iterations);
      c.fit.tolerance = f.value("tolerance", c.fit.tolerance);
      c.fit.model_weights = f.value("model_weights", c.fit.model_weights);
    }
    const auto order = j.value("dark_order", std::string("after_loss"));
    if (order != "after_loss" && order != "before_loss") throw ConfigError("dark_order must be after_loss or before_loss");
    c.dark_order = order == "before_loss" ? DarkOrder::before_loss : DarkOrder::after_loss;
    c.condition_limit = j.value("condition_limit", c.condition_limit);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
  if (c.cutoff < kMinCutoff) throw ConfigError("cutoff must be >= 3");
  if (c.n_gates < 1) throw ConfigError("n_gates must be >= 1");
  if (c.bins < 10) throw ConfigError("bins must be >= 10");
  validate(c.detector, c.cutoff);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

CommandResult cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir, bool strict) {
  if (!config.source) throw ConfigError("simulate needs a 'source' block");
  const auto seed = require_seed(config);
  const auto acq = simulate_acquisition(*config.source, config.detector, config.n_gates, config.bins,
                                        {seed, config.shards});
  std::filesystem::create_directories(out_dir);

  auto sidecar = histogram_sidecar(acq.histogram);
  sidecar["seed"] = seed;
  sidecar["source"] = to_json(*config.source);
  sidecar["detector"] = to_json(config.detector);
  sidecar["gate_counts"] = Json{{"tally", acq.detected_tally},
                                {"frequencies", tally_frequencies(acq.detected_tally, config.n_gates)}};

  CommandResult r;
  if (acq.histogram.overflow > 0) {
    r.warnings.push_back(std::to_string(acq.histogram.overflow) + " pulse areas saturated the converter");
  }
  sidecar["warnings"] = r.warnings;
  write_file_atomic(out_dir / "histogram.csv", histogram_to_csv(acq.histogram));
  write_file_atomic(out_dir / "histogram.json", dump(sidecar));
  r.written = {out_dir / "histogram.csv", out_dir / "histogram.json"};
  finish(r, strict);
  return r;
}

CommandResult cmd_analyze(const std::filesystem::path& histogram_csv, const RunConfig& config,
                          const std::filesystem::path& out_dir, bool strict) {
  std::optional<Json> sidecar;
  auto sidecar_path = histogram_csv;
  sidecar_path.replace_extension(".json");
  if (std::filesystem::exists(sidecar_path)) {
    try {
      sidecar = Json::parse(read_file(sidecar_path));
    } catch (const Json::parse_error& e) {
      throw ConfigError("sidecar " + sidecar_path.string() + " is not valid JSON: " + e.what());
    }
  }
  const auto histogram = histogram_from_csv(read_file(histogram_csv), sidecar);

  AnalysisOptions options;
  options.fit = config.fit;
  options.cutoff = config.cutoff;
  const auto analysis = analyze_histogram(histogram, options);

  CommandResult r;
  r.warnings = analysis.fit.warnings;
  if (analysis.error) r.exit_code = kExitFit;
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "analysis.json", dump(to_json(analysis)));
  r.written = {out_dir / "analysis.json"};
  finish(r, strict);
  return r;
}

CommandResult cmd_reconstruct(const std::filesystem::path& analysis_json, const RunConfig& config,
                              const std::filesystem::path& out_dir, bool strict) {
  const double eta = config.detector.eta;
  if (!(eta > 0.0)) throw ConfigError("reconstruction needs a measured efficiency eta > 0");

  Json analysis;
  try {
    analysis = Json::parse(read_file(analysis_json));
  } catch (const Json::parse_error& e) {
    throw ConfigError("analysis " + analysis_json.string() + " is not valid JSON: " + e.what());
  }
  if (!analysis.contains("probabilities") || analysis.at("probabilities").is_null()) {
    throw ConfigError("analysis holds no probabilities to reconstruct from");
  }
  auto measured = analysis.at("probabilities").get<std::vector<double>>();

  CommandResult r;
  const auto size = static_cast<std::size_t>(config.cutoff) + 1;
  double dropped = 0.0;
  for (std::size_t n = size; n < measured.size(); ++n) dropped += measured[n];
  measured.resize(size, 0.0);
  if (dropped > 0.0) {
    r.warnings.push_back("measured probability " + format_double(dropped) + " above the cutoff was dropped");
  }

  const auto channel = detector_matrix(eta, config.detector.dark_mean, config.cutoff, config.dark_order);
  const auto rec = invert_channel(channel, PhotonDistribution(measured), config.condition_limit);
  if (rec.warning) r.warnings.push_back(*rec.warning);
  const auto negativity = truncation_diagnostics(rec.distribution);

  Json report{{"schema_version", kSchemaVersion},
              {"eta", eta},
              {"dark_mean", config.detector.dark_mean},
              {"cutoff", config.cutoff},
              {"dark_order", config.dark_order == DarkOrder::after_loss ? "after_loss" : "before_loss"},
              {"condition_number", rec.condition_number},
              {"dropped_mass", dropped},
              {"negativity", to_json(negativity)},
              {"warnings", r.warnings}};

  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "reconstruction.csv", distribution_to_csv(rec.distribution));
  write_file_atomic(out_dir / "negativity.json", dump(report));
  r.written = {out_dir / "reconstruction.csv", out_dir / "negativity.json"};
  finish(r, strict);
  return r;
}

CommandResult cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir, bool strict) {
  if (!config.pump) throw ConfigError("sweep needs a 'pump' block");
  const auto seed = require_seed(config);
  SweepOptions options;
  options.seed = seed;
  options.shards = config.shards;
  options.bins = config.bins;
  options.analysis.fit = config.fit;
  options.analysis.cutoff = config.cutoff;
  const auto points = pump_sweep(*config.pump, config.detector, config.n_gates, options);
  CommandResult r;
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "sweep.csv", sweep_to_csv(points));
  r.written = {out_dir / "sweep.csv"};
  finish(r, strict);
  return r;
}

std::string error_json(const std::string& kind, const std::string& message) {
  return Json{{"schema_version", kSchemaVersion}, {"error", Json{{"kind", kind}, {"message", message}}}}.dump() + "\n";
}

}  // namespace photocount
