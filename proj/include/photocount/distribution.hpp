#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace photocount {

/// Tolerance on the total probability of a normalized distribution.
inline constexpr double kNormTolerance = 1e-12;
/// Largest probability mass that may be silently dropped at the cutoff.
inline constexpr double kMaxTruncatedMass = 1e-6;
/// Smallest cutoff allowed: the Gamma statistic needs P_1, P_2 and P_3.
inline constexpr int kMinCutoff = 3;

/// Finite photon-number distribution p_0 .. p_N.
///
/// A `physical` distribution has non-negative entries. Reconstructions from
/// a truncated inverse channel are `signed`: small negative entries are a
/// real artifact of the truncation and are kept, not clipped.
class PhotonDistribution {
 public:
  enum class Sign { physical, signed_values };

  PhotonDistribution(std::vector<double> probs, Sign sign = Sign::physical);

  static PhotonDistribution point_mass(int n, int cutoff);

  int cutoff() const noexcept { return static_cast<int>(probs_.size()) - 1; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t n) const { return probs_[n]; }
  std::span<const double> probs() const noexcept { return probs_; }

  bool is_physical() const noexcept { return sign_ == Sign::physical; }
  Sign sign() const noexcept { return sign_; }
  double sum() const noexcept;
  bool is_normalized(double tol = kNormTolerance) const noexcept;

  /// Copy zero-padded or cut to the new cutoff. Cutting drops the tail
  /// without renormalizing.
  PhotonDistribution resized(int cutoff) const;

  friend bool operator==(const PhotonDistribution&, const PhotonDistribution&) = default;

 private:
  std::vector<double> probs_;
  Sign sign_;
};

enum class PairStatistics { poissonian, thermal };

struct SourceSpec;

struct PoissonSource {
  double mean = 0.0;
};

/// Collinear degenerate pair source: photon number is twice the pair count.
struct PairSource {
  double mean_pairs = 0.0;
  PairStatistics statistics = PairStatistics::poissonian;
};

struct FockSource {
  int n = 0;
};

struct MixtureSource {
  std::vector<double> weights;
  std::vector<SourceSpec> components;
};

struct SourceSpec {
  std::variant<PoissonSource, PairSource, FockSource, MixtureSource> kind;
  int cutoff = 10;
};

/// Throws ConfigError when a SourceSpec invariant is violated.
void validate(const SourceSpec& spec);

/// Builds the photon-number distribution of a source up to its cutoff.
/// Throws TruncationError when more than kMaxTruncatedMass would be lost.
PhotonDistribution make_distribution(const SourceSpec& spec);

/// Smallest even cutoff >= min_cutoff whose dropped pair tail is below `tail`.
int sufficient_cutoff(const PairSource& source, double tail = 1e-12, int min_cutoff = 10);

double mean_photon_number(const PhotonDistribution& d);

/// <(-1)^n> = P_even - P_odd.
double parity_expectation(const PhotonDistribution& d);

std::string to_string(PairStatistics s);
PairStatistics pair_statistics_from_string(const std::string& s);

}  // namespace photocount
