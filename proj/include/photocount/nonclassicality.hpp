#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "photocount/distribution.hpp"

namespace photocount {

/// Gamma = P_2 / (P_1 + P_2 + P_3). Throws NumericalError on a zero denominator.
double gamma(const PhotonDistribution& d);
double gamma(double p1, double p2, double p3);

/// Largest Gamma reachable by any Poisson distribution or mixture of them:
/// 3 / (3 + 2 sqrt 6), attained by a single Poisson of mean sqrt 6.
double classical_gamma_bound();

/// Mean photon number of the Poisson distribution that saturates the bound.
double classical_optimal_mean();

/// Gamma of a finite Poisson mixture, evaluated from closed-form P_1..P_3
/// (no cutoff involved). Weights need not be normalized.
double poisson_mixture_gamma(std::span<const double> weights, std::span<const double> means);

struct OracleResult {
  double max_gamma = 0.0;
  /// Mean of the best single Poisson on the grid.
  double best_single_mean = 0.0;
  double best_single_gamma = 0.0;
  double best_mixture_gamma = 0.0;
};

struct OracleOptions {
  std::uint64_t seed = 0;
  std::size_t weights_trials = 0;
  /// Components per random mixture are drawn uniformly from [2, max_components].
  int max_components = 5;
  /// Worker threads. The result does not depend on this value.
  unsigned threads = 1;
};

/// Brute-force search for the largest Gamma over every single Poisson on
/// the grid and over `weights_trials` random mixtures of grid means.
OracleResult poisson_mixture_oracle(std::span<const double> grid, const OracleOptions& options);

struct EventCounts {
  std::uint64_t n1 = 0;
  std::uint64_t n2 = 0;
  std::uint64_t n3 = 0;
  std::optional<std::uint64_t> total;
};

struct GammaReport {
  double gamma = 0.0;
  double std_error = 0.0;
  /// Undefined when std_error is zero.
  std::optional<double> n_std_above_classical;
  double classical_bound = 0.0;
  bool violated = false;
  std::optional<EventCounts> counts;
};

/// Report for a distribution without counting statistics (std_error 0).
GammaReport gamma_report(const PhotonDistribution& d);

/// Gamma from peak event counts with the binomial standard error
/// sqrt(Gamma (1 - Gamma) / (N_1 + N_2 + N_3)).
GammaReport gamma_significance(const EventCounts& counts);

/// Low-excitation efficiency estimate 2r / (1 + 2r) with r = P_2 / P_1.
double eta_from_ratio(double p1, double p2);

/// Gamma seen through efficiency eta when the source emits at most one pair.
double gamma_under_loss(double eta);

/// Efficiency at which gamma_under_loss meets the classical bound: 3 / (3 + sqrt 6).
double threshold_efficiency();

struct ParityReport {
  double p_even = 0.0;
  double p_odd = 0.0;
  double parity = 0.0;
  /// A Poisson mixture has <(-1)^n> > 0, so a negative parity is nonclassical.
  bool nonclassical = false;
};

ParityReport parity_test(const PhotonDistribution& d);

}  // namespace photocount
