#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "photocount/distribution.hpp"

namespace photocount {

/// Photon-number-resolving detector behind a gated integrator.
///
/// A gate with k detected photons yields one pulse area drawn from
/// N(offset + k * gain, sigma0^2 + k * sigma_per_photon^2). Areas above
/// adc_max saturate the converter and are tallied as overflow.
struct DetectorModel {
  double eta = 0.67;
  double dark_mean = 4e-4;
  double gain = 100.0;
  double offset = 20.0;
  double sigma0 = 5.0;
  double sigma_per_photon = 5.0;
  double adc_max = 1070.0;

  double peak_center(int k) const { return offset + k * gain; }
  double peak_width(int k) const;
  /// Lower edge of the recorded area range (5 pedestal widths below it).
  double area_floor() const { return offset - 5.0 * sigma0; }
};

/// Throws ConfigError unless the model is valid and peaks 0..max_photons
/// are resolvable (gain > 4 * widest peak width).
void validate(const DetectorModel& det, int max_photons);

/// Binned pulse areas. Areas below the first edge are clamped into the
/// first bin (converter floor); areas above the last edge go to overflow.
struct AreaHistogram {
  std::vector<double> bin_edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_gates = 0;
  std::uint64_t overflow = 0;

  std::size_t bins() const { return counts.size(); }
  double bin_center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  double bin_width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }
  std::uint64_t total() const;
};

/// Throws ConfigError when edges are not strictly increasing, sizes
/// disagree, or binned + overflow exceeds n_gates.
void validate(const AreaHistogram& h);

AreaHistogram make_uniform_histogram(double lo, double hi, std::size_t bins);

/// Pump power sweep of a pair source; mean pairs per gate = pairs_per_uW * power.
struct PumpModel {
  std::vector<double> powers_uW;
  double pairs_per_uW = 0.2253;
  PairStatistics statistics = PairStatistics::poissonian;
};

void validate(const PumpModel& pump);

/// Mean pair number per microwatt that puts the analytic detected P_1 at
/// `target_p1` for pump power `power_uW`.
double calibrate_pairs_per_uW(const DetectorModel& det, PairStatistics statistics, double target_p1,
                              double power_uW = 1.0);

struct SimulationOptions {
  std::uint64_t seed = 0;
  /// Threads. Results are identical for every shard count.
  unsigned shards = 1;
};

/// Detected photon count per gate: draw the true photon number, keep each
/// photon with probability eta, add Poisson(dark_mean) dark counts.
std::vector<std::uint16_t> simulate_gate_counts(const SourceSpec& source, const DetectorModel& det,
                                                std::uint64_t n_gates, const SimulationOptions& options);

/// One pulse-area sample per gate, binned uniformly over
/// [area_floor, adc_max].
AreaHistogram synthesize_histogram(std::span<const std::uint16_t> counts, const DetectorModel& det,
                                   std::size_t bins, const SimulationOptions& options);

struct Acquisition {
  AreaHistogram histogram;
  /// Number of gates per detected photon count (index = count).
  std::vector<std::uint64_t> detected_tally;
};

/// simulate_gate_counts followed by synthesize_histogram without storing
/// per-gate counts. Same seed gives the same histogram as the two-step path.
Acquisition simulate_acquisition(const SourceSpec& source, const DetectorModel& det, std::uint64_t n_gates,
                                 std::size_t bins, const SimulationOptions& options);

/// Empirical detected-count frequencies (tally / n_gates).
std::vector<double> tally_frequencies(std::span<const std::uint64_t> tally, std::uint64_t n_gates);

}  // namespace photocount
