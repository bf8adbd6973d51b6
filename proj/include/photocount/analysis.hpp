#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "photocount/acquisition.hpp"
#include "photocount/nonclassicality.hpp"
#include "photocount/peak_fit.hpp"

namespace photocount {

struct AnalysisOptions {
  DetectOptions detect;
  FitOptions fit;
  /// Measured distributions are padded to at least this cutoff.
  int cutoff = 10;
};

/// Histogram -> peaks -> probabilities -> Gamma, parity and efficiency.
/// Stages after a failure are left empty and `error` says why.
struct Analysis {
  std::vector<PeakGuess> guesses;
  PeakFitResult fit;
  std::optional<MeasuredDistribution> measured;
  std::optional<GammaReport> gamma;
  std::optional<ParityReport> parity;
  std::optional<double> eta_estimate;
  std::optional<std::string> error;
};

Analysis analyze_histogram(const AreaHistogram& h, const AnalysisOptions& options = {});

/// Gamma significance from the fitted 1, 2 and 3 photon peak areas.
GammaReport gamma_from_measurement(const MeasuredDistribution& m);

struct SweepOptions {
  std::uint64_t seed = 0;
  unsigned shards = 1;
  std::size_t bins = 1100;
  AnalysisOptions analysis;
};

struct SweepPoint {
  double power_uW = 0.0;
  double mean_pairs = 0.0;
  GammaReport gamma;
};

/// Runs simulate -> histogram -> fit -> Gamma at every pump power. Each power
/// uses its own seed derived from (seed, index). Failures propagate.
std::vector<SweepPoint> pump_sweep(const PumpModel& pump, const DetectorModel& det, std::uint64_t n_gates,
                                   const SweepOptions& options);

}  // namespace photocount
