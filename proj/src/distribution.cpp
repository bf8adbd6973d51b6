#include "photocount/distribution.hpp"

#include <cmath>
#include <numeric>

#include "photocount/error.hpp"

namespace photocount {

PhotonDistribution::PhotonDistribution(std::vector<double> probs, Sign sign)
    : probs_(std::move(probs)), sign_(sign) {
  if (cutoff() < kMinCutoff) {
    throw ConfigError("photon distribution needs cutoff >= 3, got " + std::to_string(cutoff()));
  }
  for (double p : probs_) {
    if (!std::isfinite(p)) throw NumericalError("photon distribution has a non-finite entry");
    if (sign_ == Sign::physical && p < 0.0) {
      throw NumericalError("physical photon distribution has a negative entry");
    }
  }
}

PhotonDistribution PhotonDistribution::point_mass(int n, int cutoff) {
  if (n < 0 || n > cutoff) throw ConfigError("point mass outside [0, cutoff]");
  std::vector<double> p(static_cast<std::size_t>(cutoff) + 1, 0.0);
  p[static_cast<std::size_t>(n)] = 1.0;
  return PhotonDistribution(std::move(p));
}

double PhotonDistribution::sum() const noexcept {
  return std::accumulate(probs_.begin(), probs_.end(), 0.0);
}

bool PhotonDistribution::is_normalized(double tol) const noexcept {
  return std::abs(sum() - 1.0) <= tol;
}

PhotonDistribution PhotonDistribution::resized(int new_cutoff) const {
  std::vector<double> p(probs_);
  p.resize(static_cast<std::size_t>(new_cutoff) + 1, 0.0);
  return PhotonDistribution(std::move(p), sign_);
}

namespace {

double poisson_pmf(double mean, int n) {
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

double thermal_pmf(double mean, int n) {
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mean) - (n + 1.0) * std::log1p(mean));
}

// Renormalizes in place; refuses when the dropped tail is too heavy.
void renormalize_truncated(std::vector<double>& p, const char* what) {
  const double kept = std::accumulate(p.begin(), p.end(), 0.0);
  const double lost = 1.0 - kept;
  if (lost > kMaxTruncatedMass) {
    throw TruncationError(std::string(what) + " does not fit under the cutoff", lost);
  }
  for (double& x : p) x /= kept;
}

std::vector<double> build(const SourceSpec& spec, int cutoff);

struct Builder {
  int cutoff;

  std::vector<double> operator()(const PoissonSource& s) const {
    std::vector<double> p(static_cast<std::size_t>(cutoff) + 1);
    for (int n = 0; n <= cutoff; ++n) p[static_cast<std::size_t>(n)] = poisson_pmf(s.mean, n);
    renormalize_truncated(p, "poisson source");
    return p;
  }

  std::vector<double> operator()(const PairSource& s) const {
    std::vector<double> p(static_cast<std::size_t>(cutoff) + 1, 0.0);
    for (int pairs = 0; 2 * pairs <= cutoff; ++pairs) {
      p[static_cast<std::size_t>(2 * pairs)] = s.statistics == PairStatistics::poissonian
                                                   ? poisson_pmf(s.mean_pairs, pairs)
                                                   : thermal_pmf(s.mean_pairs, pairs);
    }
    renormalize_truncated(p, "pair source");
    return p;
  }

  std::vector<double> operator()(const FockSource& s) const {
    std::vector<double> p(static_cast<std::size_t>(cutoff) + 1, 0.0);
    p[static_cast<std::size_t>(s.n)] = 1.0;
    return p;
  }

  std::vector<double> operator()(const MixtureSource& s) const {
    std::vector<double> p(static_cast<std::size_t>(cutoff) + 1, 0.0);
    for (std::size_t c = 0; c < s.components.size(); ++c) {
      const auto component = build(s.components[c], cutoff);
      for (std::size_t n = 0; n < p.size(); ++n) p[n] += s.weights[c] * component[n];
    }
    return p;
  }
};

// Mixture components are always evaluated at the outermost cutoff.
std::vector<double> build(const SourceSpec& spec, int cutoff) {
  return std::visit(Builder{cutoff}, spec.kind);
}

void validate_kind(const SourceSpec& spec, int cutoff) {
  struct Check {
    int cutoff;
    void operator()(const PoissonSource& s) const {
      if (!(s.mean >= 0.0) || !std::isfinite(s.mean)) throw ConfigError("poisson mean must be >= 0");
    }
    void operator()(const PairSource& s) const {
      if (!(s.mean_pairs >= 0.0) || !std::isfinite(s.mean_pairs)) {
        throw ConfigError("mean pair number must be >= 0");
      }
    }
    void operator()(const FockSource& s) const {
      if (s.n < 0 || s.n > cutoff) throw ConfigError("fock photon number must lie in [0, cutoff]");
    }
    void operator()(const MixtureSource& s) const {
      if (s.components.empty() || s.weights.size() != s.components.size()) {
        throw ConfigError("mixture needs one weight per component and at least one component");
      }
      double total = 0.0;
      for (double w : s.weights) {
        if (!(w >= 0.0)) throw ConfigError("mixture weights must be >= 0");
        total += w;
      }
      if (std::abs(total - 1.0) > kNormTolerance) throw ConfigError("mixture weights must sum to 1");
      for (const auto& c : s.components) validate_kind(c, cutoff);
    }
  };
  std::visit(Check{cutoff}, spec.kind);
}

}  // namespace

void validate(const SourceSpec& spec) {
  if (spec.cutoff < kMinCutoff) throw ConfigError("source cutoff must be >= 3");
  validate_kind(spec, spec.cutoff);
}

PhotonDistribution make_distribution(const SourceSpec& spec) {
  validate(spec);
  return PhotonDistribution(build(spec, spec.cutoff));
}

int sufficient_cutoff(const PairSource& source, double tail, int min_cutoff) {
  if (!(source.mean_pairs >= 0.0)) throw ConfigError("mean pair number must be >= 0");
  double kept = 0.0;
  int pairs = 0;
  for (;; ++pairs) {
    kept += source.statistics == PairStatistics::poissonian ? poisson_pmf(source.mean_pairs, pairs)
                                                             : thermal_pmf(source.mean_pairs, pairs);
    if (2 * pairs >= min_cutoff && 1.0 - kept < tail) break;
    if (pairs > 100000) throw ConfigError("pair source too bright for a finite cutoff");
  }
  return std::max(2 * pairs, min_cutoff + min_cutoff % 2);
}

double mean_photon_number(const PhotonDistribution& d) {
  double m = 0.0;
  for (std::size_t n = 0; n < d.size(); ++n) m += static_cast<double>(n) * d[n];
  return m;
}

double parity_expectation(const PhotonDistribution& d) {
  double even = 0.0;
  double odd = 0.0;
  for (std::size_t n = 0; n < d.size(); ++n) (n % 2 == 0 ? even : odd) += d[n];
  return even - odd;
}

std::string to_string(PairStatistics s) {
  return s == PairStatistics::poissonian ? "poissonian" : "thermal";
}

PairStatistics pair_statistics_from_string(const std::string& s) {
  if (s == "poissonian") return PairStatistics::poissonian;
  if (s == "thermal") return PairStatistics::thermal;
  throw ConfigError("unknown pair_statistics '" + s + "'");
}

}  // namespace photocount
