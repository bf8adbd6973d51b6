#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "photocount/distribution.hpp"

namespace photocount {

/// Linear map from true to detected photon-number probabilities, f = M p,
/// truncated to 0..cutoff. Row index is the detected number, column the
/// true number.
///
/// `eta` and `dark_mean` describe the physical channel the matrix encodes.
/// Composition multiplies efficiencies; dark counts entering before a loss
/// stage are thinned by it.
class TransferMatrix {
 public:
  TransferMatrix(Eigen::MatrixXd entries, double eta, double dark_mean);

  static TransferMatrix identity(int cutoff);

  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  double operator()(int row, int col) const { return entries_(row, col); }
  double eta() const noexcept { return eta_; }
  double dark_mean() const noexcept { return dark_mean_; }
  int cutoff() const noexcept { return static_cast<int>(entries_.rows()) - 1; }

 private:
  Eigen::MatrixXd entries_;
  double eta_;
  double dark_mean_;
};

/// Entry (i, j) = C(j, i) eta^i (1 - eta)^(j - i) for j >= i.
TransferMatrix binomial_loss_matrix(double eta, int cutoff);

/// Entry (i, j) = e^-nu nu^(i - j) / (i - j)! for i >= j: Poisson-distributed
/// dark counts added to whatever arrives.
TransferMatrix dark_convolution_matrix(double dark_mean, int cutoff);

/// outer * inner, i.e. `inner` acts first.
TransferMatrix compose(const TransferMatrix& outer, const TransferMatrix& inner);

/// Which stage acts first in the full detector model.
enum class DarkOrder { after_loss, before_loss };

/// Full detector model. The default adds dark counts after the loss stage.
TransferMatrix detector_matrix(double eta, double dark_mean, int cutoff,
                               DarkOrder order = DarkOrder::after_loss);

struct ChannelOutput {
  PhotonDistribution detected;
  /// Probability pushed above the cutoff (by dark counts) and lost.
  double leakage = 0.0;
};

/// f = M p. Throws TruncationError if leakage exceeds `max_leakage`.
ChannelOutput apply_channel(const TransferMatrix& m, const PhotonDistribution& p,
                            double max_leakage = kMaxTruncatedMass);

struct Reconstruction {
  PhotonDistribution distribution;  // always Sign::signed_values
  double condition_number = 1.0;    // 1-norm estimate
  std::optional<std::string> warning;
};

inline constexpr double kDefaultConditionLimit = 1e10;

/// Solves M p = f on the truncated space. No clipping or regularization:
/// negative entries caused by truncation are part of the answer.
/// Throws NumericalError for a singular channel (eta == 0).
Reconstruction invert_channel(const TransferMatrix& m, const PhotonDistribution& f,
                              double condition_limit = kDefaultConditionLimit);

struct NegativityReport {
  double most_negative = 0.0;  // 0 when nothing is negative
  std::optional<int> most_negative_index;
  double negative_mass = 0.0;  // sum of |p_n| over negative entries
  double sum_deviation = 0.0;  // sum(p) - 1
  std::vector<int> negative_indices;
};

NegativityReport truncation_diagnostics(const PhotonDistribution& p);

}  // namespace photocount
