#include "photocount/acquisition.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "photocount/channel.hpp"
#include "photocount/error.hpp"
#include "photocount/rng.hpp"

namespace photocount {

double DetectorModel::peak_width(int k) const {
  return std::sqrt(sigma0 * sigma0 + k * sigma_per_photon * sigma_per_photon);
}

void validate(const DetectorModel& det, int max_photons) {
  if (!(det.eta >= 0.0 && det.eta <= 1.0)) throw ConfigError("detector eta must lie in [0, 1]");
  if (!(det.dark_mean >= 0.0) || !std::isfinite(det.dark_mean)) {
    throw ConfigError("detector dark_mean must be >= 0");
  }
  if (!(det.gain > 0.0)) throw ConfigError("detector gain must be > 0");
  if (!(det.sigma0 > 0.0) || !(det.sigma_per_photon >= 0.0)) {
    throw ConfigError("detector peak widths must be > 0");
  }
  if (!(det.adc_max > det.offset)) throw ConfigError("detector adc_max must lie above the pedestal");
  if (!(det.gain > 4.0 * det.peak_width(max_photons))) {
    throw ConfigError("peaks up to " + std::to_string(max_photons) +
                      " photons are not resolvable: gain must exceed 4 peak widths");
  }
}

std::uint64_t AreaHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void validate(const AreaHistogram& h) {
  if (h.counts.empty() || h.bin_edges.size() != h.counts.size() + 1) {
    throw ConfigError("histogram needs bins + 1 edges and at least one bin");
  }
  for (std::size_t i = 1; i < h.bin_edges.size(); ++i) {
    if (!(h.bin_edges[i] > h.bin_edges[i - 1])) throw ConfigError("histogram edges must be strictly increasing");
  }
  if (h.total() + h.overflow > h.n_gates) throw ConfigError("histogram holds more events than gates");
}

AreaHistogram make_uniform_histogram(double lo, double hi, std::size_t bins) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("uniform histogram needs hi > lo and bins >= 1");
  AreaHistogram h;
  h.bin_edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
  h.bin_edges.back() = hi;
  h.counts.assign(bins, 0);
  return h;
}

void validate(const PumpModel& pump) {
  if (pump.powers_uW.empty()) throw ConfigError("pump sweep needs at least one power");
  for (double p : pump.powers_uW) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("pump powers must be > 0");
  }
  if (!(pump.pairs_per_uW > 0.0)) throw ConfigError("pairs_per_uW must be > 0");
}

double calibrate_pairs_per_uW(const DetectorModel& det, PairStatistics statistics, double target_p1,
                              double power_uW) {
  if (!(target_p1 > 0.0 && target_p1 < 1.0) || !(power_uW > 0.0)) {
    throw ConfigError("calibration needs 0 < P_1 < 1 and a positive power");
  }
  auto detected_p1 = [&](double mean_pairs) {
    const PairSource pairs{mean_pairs, statistics};
    const int cutoff = sufficient_cutoff(pairs);
    const auto p = make_distribution({pairs, cutoff});
    return apply_channel(detector_matrix(det.eta, det.dark_mean, cutoff), p, 1.0).detected[1];
  };
  // P_1 rises from the dark-count floor before multi-pair events take over:
  // bracket the first crossing on a geometric grid, then bisect.
  double lo = 0.0;
  double hi = 1e-6;
  while (detected_p1(hi) < target_p1) {
    lo = hi;
    hi *= 1.5;
    if (hi > 50.0) throw ConfigError("target P_1 is not reachable with this detector");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (detected_p1(mid) < target_p1 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / power_uW;
}

namespace {

// Per-block sampler of detected photon counts. Distribution objects are
// rebuilt every block so no cached state crosses a block boundary.
class GateSampler {
 public:
  GateSampler(const PhotonDistribution& truth, const DetectorModel& det)
      : weights_(truth.probs().begin(), truth.probs().end()), eta_(det.eta), dark_mean_(det.dark_mean) {}

  template <class Emit>
  void run_block(std::uint64_t seed, std::uint64_t block, std::uint64_t n_gates, Emit&& emit) const {
    auto engine = rng::block_engine(seed, rng::Stream::gate_counts, block);
    std::discrete_distribution<int> truth(weights_.begin(), weights_.end());
    std::poisson_distribution<int> dark(dark_mean_ > 0.0 ? dark_mean_ : 1.0);
    const std::uint64_t first = block * rng::kBlockSize;
    const std::uint64_t last = std::min(first + rng::kBlockSize, n_gates);
    for (std::uint64_t g = first; g < last; ++g) {
      const int n = truth(engine);
      int k = 0;
      if (n > 0) {
        if (eta_ >= 1.0) {
          k = n;
        } else if (eta_ > 0.0) {
          k = std::binomial_distribution<int>(n, eta_)(engine);
        }
      }
      if (dark_mean_ > 0.0) k += dark(engine);
      emit(g, static_cast<std::uint16_t>(std::min(k, static_cast<int>(std::numeric_limits<std::uint16_t>::max()))));
    }
  }

 private:
  std::vector<double> weights_;
  double eta_;
  double dark_mean_;
};

class AreaSampler {
 public:
  AreaSampler(const DetectorModel& det, std::size_t bins)
      : det_(det), lo_(det.area_floor()), hi_(det.adc_max), bins_(bins),
        bin_width_((det.adc_max - det.area_floor()) / static_cast<double>(bins)) {}

  AreaHistogram empty_histogram() const { return make_uniform_histogram(lo_, hi_, bins_); }

  template <class CountAt>
  void run_block(std::uint64_t seed, std::uint64_t block, std::uint64_t n_gates, CountAt&& count_at,
                 std::vector<std::uint64_t>& counts, std::uint64_t& overflow) const {
    auto engine = rng::block_engine(seed, rng::Stream::pulse_areas, block);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::uint64_t first = block * rng::kBlockSize;
    const std::uint64_t last = std::min(first + rng::kBlockSize, n_gates);
    for (std::uint64_t g = first; g < last; ++g) {
      const int k = count_at(g);
      const double area = det_.peak_center(k) + det_.peak_width(k) * noise(engine);
      if (area > hi_) {
        ++overflow;
        continue;
      }
      const double pos = std::floor((area - lo_) / bin_width_);
      const auto bin = pos <= 0.0 ? std::size_t{0} : std::min(static_cast<std::size_t>(pos), bins_ - 1);
      ++counts[bin];
    }
  }

 private:
  DetectorModel det_;
  double lo_;
  double hi_;
  std::size_t bins_;
  double bin_width_;
};

void check_bins(std::size_t bins) {
  if (bins < 10) throw ConfigError("histogram needs at least 10 bins");
}

}  // namespace

std::vector<std::uint16_t> simulate_gate_counts(const SourceSpec& source, const DetectorModel& det,
                                                std::uint64_t n_gates, const SimulationOptions& options) {
  if (n_gates < 1) throw ConfigError("n_gates must be >= 1");
  validate(det, 0);
  const GateSampler sampler(make_distribution(source), det);
  std::vector<std::uint16_t> out(n_gates);
  rng::run_sharded(rng::block_count(n_gates), options.shards,
                   [&](unsigned, std::uint64_t first, std::uint64_t last) {
                     for (std::uint64_t b = first; b < last; ++b) {
                       sampler.run_block(options.seed, b, n_gates,
                                         [&](std::uint64_t g, std::uint16_t k) { out[g] = k; });
                     }
                   });
  return out;
}

AreaHistogram synthesize_histogram(std::span<const std::uint16_t> counts, const DetectorModel& det,
                                   std::size_t bins, const SimulationOptions& options) {
  check_bins(bins);
  validate(det, 0);
  const AreaSampler sampler(det, bins);
  const std::uint64_t n_gates = counts.size();
  const unsigned shards = std::max(1u, options.shards);
  std::vector<std::vector<std::uint64_t>> shard_counts(shards, std::vector<std::uint64_t>(bins, 0));
  std::vector<std::uint64_t> shard_overflow(shards, 0);
  rng::run_sharded(rng::block_count(n_gates), shards, [&](unsigned s, std::uint64_t first, std::uint64_t last) {
    for (std::uint64_t b = first; b < last; ++b) {
      sampler.run_block(options.seed, b, n_gates, [&](std::uint64_t g) { return static_cast<int>(counts[g]); },
                        shard_counts[s], shard_overflow[s]);
    }
  });
  AreaHistogram h = sampler.empty_histogram();
  h.n_gates = n_gates;
  for (unsigned s = 0; s < shards; ++s) {
    for (std::size_t i = 0; i < bins; ++i) h.counts[i] += shard_counts[s][i];
    h.overflow += shard_overflow[s];
  }
  return h;
}

Acquisition simulate_acquisition(const SourceSpec& source, const DetectorModel& det, std::uint64_t n_gates,
                                 std::size_t bins, const SimulationOptions& options) {
  if (n_gates < 1) throw ConfigError("n_gates must be >= 1");
  check_bins(bins);
  validate(det, 0);
  const GateSampler gates(make_distribution(source), det);
  const AreaSampler areas(det, bins);
  const unsigned shards = std::max(1u, options.shards);

  struct Shard {
    std::vector<std::uint64_t> counts;
    std::uint64_t overflow = 0;
    std::vector<std::uint64_t> tally;
  };
  std::vector<Shard> shard(shards, Shard{std::vector<std::uint64_t>(bins, 0), 0, {}});

  rng::run_sharded(rng::block_count(n_gates), shards, [&](unsigned s, std::uint64_t first, std::uint64_t last) {
    std::vector<std::uint16_t> block_counts(rng::kBlockSize);
    auto& mine = shard[s];
    for (std::uint64_t b = first; b < last; ++b) {
      const std::uint64_t base = b * rng::kBlockSize;
      gates.run_block(options.seed, b, n_gates, [&](std::uint64_t g, std::uint16_t k) {
        block_counts[g - base] = k;
        if (k >= mine.tally.size()) mine.tally.resize(k + std::size_t{1}, 0);
        ++mine.tally[k];
      });
      areas.run_block(options.seed, b, n_gates,
                      [&](std::uint64_t g) { return static_cast<int>(block_counts[g - base]); }, mine.counts,
                      mine.overflow);
    }
  });

  Acquisition out{areas.empty_histogram(), {}};
  out.histogram.n_gates = n_gates;
  for (const auto& s : shard) {
    for (std::size_t i = 0; i < bins; ++i) out.histogram.counts[i] += s.counts[i];
    out.histogram.overflow += s.overflow;
    if (s.tally.size() > out.detected_tally.size()) out.detected_tally.resize(s.tally.size(), 0);
    for (std::size_t k = 0; k < s.tally.size(); ++k) out.detected_tally[k] += s.tally[k];
  }
  return out;
}

std::vector<double> tally_frequencies(std::span<const std::uint64_t> tally, std::uint64_t n_gates) {
  std::vector<double> f(tally.size());
  for (std::size_t k = 0; k < tally.size(); ++k) {
    f[k] = static_cast<double>(tally[k]) / static_cast<double>(n_gates);
  }
  return f;
}

}  // namespace photocount
