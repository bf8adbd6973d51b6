#include "photocount/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "photocount/error.hpp"

namespace photocount {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '+')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return x;
}

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

// Wraps nlohmann type/key errors as configuration errors.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid ") + what + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> csv_rows(std::string_view text, std::string_view header) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) throw ConfigError("expected CSV header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ConfigError("malformed CSV line '" + line + "'");
    }
    rows.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  if (!seen_header) throw ConfigError("CSV is empty");
  return rows;
}

std::uint64_t parse_count(const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("not a non-negative integer: '" + text + "'");
  }
  return v;
}

}  // namespace

Json to_json(const SourceSpec& s) {
  Json j;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PoissonSource>) {
          j["kind"] = "poisson";
          j["mean"] = k.mean;
        } else if constexpr (std::is_same_v<K, PairSource>) {
          j["kind"] = "pdc_pairs";
          j["mean"] = k.mean_pairs;
          j["pair_statistics"] = to_string(k.statistics);
        } else if constexpr (std::is_same_v<K, FockSource>) {
          j["kind"] = "fock";
          j["n"] = k.n;
        } else {
          j["kind"] = "mixture";
          j["weights"] = k.weights;
          j["components"] = Json::array();
          for (const auto& c : k.components) j["components"].push_back(to_json(c));
        }
      },
      s.kind);
  j["cutoff"] = s.cutoff;
  return j;
}

SourceSpec source_from_json(const Json& j) {
  return guarded("source", [&] {
    SourceSpec s;
    s.cutoff = get_or(j, "cutoff", 10);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "poisson") {
      s.kind = PoissonSource{j.at("mean").get<double>()};
    } else if (kind == "pdc_pairs") {
      s.kind = PairSource{j.at("mean").get<double>(),
                          pair_statistics_from_string(get_or<std::string>(j, "pair_statistics", "poissonian"))};
    } else if (kind == "fock") {
      s.kind = FockSource{j.at("n").get<int>()};
    } else if (kind == "mixture") {
      MixtureSource m;
      m.weights = j.at("weights").get<std::vector<double>>();
      for (const auto& c : j.at("components")) m.components.push_back(source_from_json(c));
      s.kind = std::move(m);
    } else {
      throw ConfigError("unknown source kind '" + kind + "'");
    }
    validate(s);
    return s;
  });
}

Json to_json(const DetectorModel& d) {
  return Json{{"eta", d.eta},       {"dark_mean", d.dark_mean}, {"gain", d.gain},
              {"offset", d.offset}, {"sigma0", d.sigma0},       {"sigma_per_photon", d.sigma_per_photon},
              {"adc_max", d.adc_max}};
}

DetectorModel detector_from_json(const Json& j) {
  return guarded("detector", [&] {
    DetectorModel d;
    d.eta = get_or(j, "eta", d.eta);
    d.dark_mean = get_or(j, "dark_mean", d.dark_mean);
    d.gain = get_or(j, "gain", d.gain);
    d.offset = get_or(j, "offset", d.offset);
    d.sigma0 = get_or(j, "sigma0", d.sigma0);
    d.sigma_per_photon = get_or(j, "sigma_per_photon", d.sigma_per_photon);
    d.adc_max = get_or(j, "adc_max", d.adc_max);
    return d;
  });
}

Json to_json(const PumpModel& p) {
  return Json{{"powers_uW", p.powers_uW},
              {"pairs_per_uW", p.pairs_per_uW},
              {"pair_statistics", to_string(p.statistics)}};
}

PumpModel pump_from_json(const Json& j) {
  return guarded("pump", [&] {
    PumpModel p;
    p.powers_uW = j.at("powers_uW").get<std::vector<double>>();
    p.pairs_per_uW = get_or(j, "pairs_per_uW", p.pairs_per_uW);
    p.statistics = pair_statistics_from_string(get_or<std::string>(j, "pair_statistics", "poissonian"));
    validate(p);
    return p;
  });
}

Json to_json(const GammaReport& r) {
  Json j{{"gamma", r.gamma},
         {"std_error", r.std_error},
         {"n_std_above_classical", nullptr},
         {"classical_bound", r.classical_bound},
         {"violated", r.violated}};
  if (r.n_std_above_classical) j["n_std_above_classical"] = *r.n_std_above_classical;
  if (r.counts) {
    j["counts"] = Json{{"n1", r.counts->n1}, {"n2", r.counts->n2}, {"n3", r.counts->n3}, {"total", nullptr}};
    if (r.counts->total) j["counts"]["total"] = *r.counts->total;
  }
  return j;
}

GammaReport gamma_report_from_json(const Json& j) {
  return guarded("gamma report", [&] {
    GammaReport r;
    r.gamma = j.at("gamma").get<double>();
    r.std_error = j.at("std_error").get<double>();
    if (!j.at("n_std_above_classical").is_null()) r.n_std_above_classical = j.at("n_std_above_classical").get<double>();
    r.classical_bound = j.at("classical_bound").get<double>();
    r.violated = j.at("violated").get<bool>();
    if (j.contains("counts")) {
      const auto& c = j.at("counts");
      EventCounts counts{c.at("n1").get<std::uint64_t>(), c.at("n2").get<std::uint64_t>(),
                         c.at("n3").get<std::uint64_t>(), std::nullopt};
      if (!c.at("total").is_null()) counts.total = c.at("total").get<std::uint64_t>();
      r.counts = counts;
    }
    return r;
  });
}

Json to_json(const ParityReport& r) {
  return Json{{"p_even", r.p_even}, {"p_odd", r.p_odd}, {"parity", r.parity}, {"nonclassical", r.nonclassical}};
}

ParityReport parity_report_from_json(const Json& j) {
  return guarded("parity report", [&] {
    return ParityReport{j.at("p_even").get<double>(), j.at("p_odd").get<double>(), j.at("parity").get<double>(),
                        j.at("nonclassical").get<bool>()};
  });
}

Json to_json(const NegativityReport& r) {
  Json j{{"most_negative", r.most_negative},
         {"most_negative_index", nullptr},
         {"negative_mass", r.negative_mass},
         {"sum_deviation", r.sum_deviation},
         {"negative_indices", r.negative_indices}};
  if (r.most_negative_index) j["most_negative_index"] = *r.most_negative_index;
  return j;
}

NegativityReport negativity_report_from_json(const Json& j) {
  return guarded("negativity report", [&] {
    NegativityReport r;
    r.most_negative = j.at("most_negative").get<double>();
    if (!j.at("most_negative_index").is_null()) r.most_negative_index = j.at("most_negative_index").get<int>();
    r.negative_mass = j.at("negative_mass").get<double>();
    r.sum_deviation = j.at("sum_deviation").get<double>();
    r.negative_indices = j.at("negative_indices").get<std::vector<int>>();
    return r;
  });
}

Json to_json(const PeakFitResult& r) {
  Json peaks = Json::array();
  for (const auto& p : r.peaks) {
    peaks.push_back(Json{{"photon_number", p.photon_number},
                         {"center", p.center},
                         {"width", p.width},
                         {"area", p.area},
                         {"area_std_error", p.area_std_error},
                         {"height", p.height}});
  }
  return Json{{"peaks", std::move(peaks)},
              {"residual_norm", r.residual_norm},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"warnings", r.warnings}};
}

PeakFitResult peak_fit_from_json(const Json& j) {
  return guarded("peak fit", [&] {
    PeakFitResult r;
    for (const auto& p : j.at("peaks")) {
      r.peaks.push_back({p.at("photon_number").get<int>(), p.at("center").get<double>(), p.at("width").get<double>(),
                         p.at("area").get<double>(), p.at("area_std_error").get<double>(),
                         p.at("height").get<double>()});
    }
    r.residual_norm = j.at("residual_norm").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = get_or(j, "iterations", 0);
    r.warnings = get_or(j, "warnings", std::vector<std::string>{});
    return r;
  });
}

Json to_json(const Analysis& a) {
  Json j{{"schema_version", kSchemaVersion}, {"converged", a.fit.converged}, {"fit", to_json(a.fit)}};
  if (a.measured) {
    const auto probs = a.measured->distribution.probs();
    j["probabilities"] = std::vector<double>(probs.begin(), probs.end());
    j["probability_std_errors"] = a.measured->std_errors;
    j["counts"] = a.measured->counts;
  } else {
    j["probabilities"] = nullptr;
  }
  j["gamma"] = a.gamma ? to_json(*a.gamma) : Json(nullptr);
  j["parity"] = a.parity ? to_json(*a.parity) : Json(nullptr);
  j["eta_estimate"] = a.eta_estimate ? Json(*a.eta_estimate) : Json(nullptr);
  j["error"] = a.error ? Json(*a.error) : Json(nullptr);
  return j;
}

std::string distribution_to_csv(const PhotonDistribution& d) {
  std::string out = "n,probability\n";
  for (std::size_t n = 0; n < d.size(); ++n) out += std::to_string(n) + "," + format_double(d[n]) + "\n";
  return out;
}

PhotonDistribution distribution_from_csv(std::string_view text, PhotonDistribution::Sign sign) {
  std::vector<double> probs;
  for (const auto& [n, p] : csv_rows(text, "n,probability")) {
    if (parse_count(n) != probs.size()) throw ConfigError("distribution CSV rows must be n = 0, 1, 2, ...");
    probs.push_back(parse_double(p));
  }
  return PhotonDistribution(std::move(probs), sign);
}

std::string matrix_to_csv(const TransferMatrix& m) {
  std::string out;
  const auto& e = m.entries();
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      if (j) out += ',';
      out += format_double(e(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string histogram_to_csv(const AreaHistogram& h) {
  std::string out = "bin_center,count\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    out += format_double(h.bin_center(i)) + "," + std::to_string(h.counts[i]) + "\n";
  }
  return out;
}

AreaHistogram histogram_from_csv(std::string_view text, const std::optional<Json>& sidecar) {
  AreaHistogram h;
  std::vector<double> centers;
  for (const auto& [c, n] : csv_rows(text, "bin_center,count")) {
    centers.push_back(parse_double(c));
    h.counts.push_back(parse_count(n));
  }
  if (centers.size() < 2) throw ConfigError("histogram CSV needs at least two bins");
  h.bin_edges.resize(centers.size() + 1);
  for (std::size_t i = 1; i < centers.size(); ++i) h.bin_edges[i] = 0.5 * (centers[i - 1] + centers[i]);
  h.bin_edges.front() = centers.front() - (h.bin_edges[1] - centers.front());
  h.bin_edges.back() = centers.back() + (centers.back() - h.bin_edges[centers.size() - 1]);
  if (sidecar && sidecar->contains("lo") && sidecar->contains("hi")) {
    const double lo = sidecar->at("lo").get<double>();
    const double hi = sidecar->at("hi").get<double>();
    // Uniform binning written by the simulator: rebuild its exact edges.
    if (hi > lo) {
      const auto uniform = make_uniform_histogram(lo, hi, centers.size());
      bool same = true;
      for (std::size_t i = 0; i < centers.size() && same; ++i) {
        same = std::abs(uniform.bin_center(i) - centers[i]) <= 1e-9 * uniform.bin_width(i);
      }
      if (same) h.bin_edges = uniform.bin_edges;
    }
    h.bin_edges.front() = lo;
    h.bin_edges.back() = hi;
  }
  h.n_gates = h.total();
  if (sidecar) {
    guarded("histogram sidecar", [&] {
      h.overflow = get_or<std::uint64_t>(*sidecar, "overflow", 0);
      h.n_gates = get_or<std::uint64_t>(*sidecar, "n_gates", h.total() + h.overflow);
      return 0;
    });
  }
  validate(h);
  return h;
}

Json histogram_sidecar(const AreaHistogram& h) {
  return Json{{"schema_version", kSchemaVersion},
              {"n_gates", h.n_gates},
              {"overflow", h.overflow},
              {"binned", h.total()},
              {"bins", h.bins()},
              {"lo", h.bin_edges.front()},
              {"hi", h.bin_edges.back()}};
}

std::string sweep_to_csv(const std::vector<SweepPoint>& points) {
  std::string out = "power_uW,gamma,std_error,n_std\n";
  for (const auto& p : points) {
    out += format_double(p.power_uW) + "," + format_double(p.gamma.gamma) + "," + format_double(p.gamma.std_error) +
           "," + (p.gamma.n_std_above_classical ? format_double(*p.gamma.n_std_above_classical) : "nan") + "\n";
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace photocount
