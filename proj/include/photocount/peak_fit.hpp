#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "photocount/acquisition.hpp"
#include "photocount/distribution.hpp"

namespace photocount {

struct PeakGuess {
  double center = 0.0;
  double width = 0.0;
  double height = 0.0;  // counts per bin
};

struct DetectOptions {
  int smoothing_window = 3;
  /// A local maximum is kept when its prominence exceeds both this many
  /// counts and `prominence_sigmas` Poisson standard deviations of the
  /// smoothed height.
  double min_prominence_counts = 3.0;
  double prominence_sigmas = 4.0;
};

/// Local maxima of the moving-average-smoothed histogram, filtered by
/// prominence and ordered by center. Returns at least one guess for any
/// histogram with a nonzero bin; throws FitError for an empty one.
std::vector<PeakGuess> detect_peaks(const AreaHistogram& h, const DetectOptions& options = {});

struct FittedPeak {
  int photon_number = 0;
  double center = 0.0;
  double width = 0.0;
  /// Event count under the peak.
  double area = 0.0;
  double area_std_error = 0.0;
  /// Peak value in counts per bin (area * bin width / (width sqrt(2 pi))).
  double height = 0.0;
};

struct PeakFitResult {
  std::vector<FittedPeak> peaks;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

enum class FitMode { simultaneous, per_peak };

struct FitOptions {
  FitMode mode = FitMode::simultaneous;
  /// One width shared by every peak.
  bool shared_width = false;
  int max_iterations = 200;
  /// Stop when every parameter moves by less than this, relative to the
  /// area (areas) or the peak width (centers and widths).
  double tolerance = 1e-8;
  /// After the fit weighted by observed counts, refit with weights from the
  /// fitted expectation until it settles. Removes the low-count bias of
  /// observed-count weights on sparse peaks.
  bool model_weights = true;
};

/// Weighted least-squares fit of a sum of Gaussians to the bin counts
/// (weights 1 / max(count, 1), then optionally 1 / max(expected, 1)). Each peak is integrated over its bins, so the
/// fitted area is an event count. The first bin extends to -infinity to
/// match the converter floor.
PeakFitResult fit_peaks(const AreaHistogram& h, std::span<const PeakGuess> guesses,
                        const FitOptions& options = {});

struct MeasuredDistribution {
  PhotonDistribution distribution;
  /// Delta-method standard errors of each probability.
  std::vector<double> std_errors;
  /// Rounded peak areas, indexed by photon number.
  std::vector<std::uint64_t> counts;
  double total_area = 0.0;
};

/// Normalizes peak areas by their sum. Peak k is photon number k. The
/// distribution is zero-padded up to `min_cutoff`.
MeasuredDistribution areas_to_probabilities(const PeakFitResult& fit, int min_cutoff = kMinCutoff);

}  // namespace photocount
