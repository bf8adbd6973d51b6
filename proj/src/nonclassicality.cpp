#include "photocount/nonclassicality.hpp"

#include <cmath>
#include <limits>

#include "photocount/error.hpp"
#include "photocount/rng.hpp"

namespace photocount {

double gamma(double p1, double p2, double p3) {
  const double denom = p1 + p2 + p3;
  if (!(denom > 0.0)) throw NumericalError("Gamma undefined: P_1 + P_2 + P_3 is zero");
  return p2 / denom;
}

double gamma(const PhotonDistribution& d) { return gamma(d[1], d[2], d[3]); }

double classical_gamma_bound() { return 3.0 / (3.0 + 2.0 * std::sqrt(6.0)); }

double classical_optimal_mean() { return std::sqrt(6.0); }

double poisson_mixture_gamma(std::span<const double> weights, std::span<const double> means) {
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    const double m = means[k];
    const double w = weights[k] * std::exp(-m);
    p1 += w * m;
    p2 += w * m * m / 2.0;
    p3 += w * m * m * m / 6.0;
  }
  const double denom = p1 + p2 + p3;
  // Vacuum: no one-to-three photon events, and no P_2 either.
  return denom > 0.0 ? p2 / denom : 0.0;
}

OracleResult poisson_mixture_oracle(std::span<const double> grid, const OracleOptions& options) {
  if (grid.empty()) throw ConfigError("oracle grid is empty");
  for (double m : grid) {
    if (!(m >= 0.0)) throw ConfigError("oracle grid means must be >= 0");
  }
  if (options.max_components < 2) throw ConfigError("mixtures need at least two components");

  OracleResult result;
  result.best_single_mean = grid.front();
  result.best_single_gamma = -1.0;
  for (double m : grid) {
    const double w = 1.0;
    const double g = poisson_mixture_gamma({&w, 1}, {&m, 1});
    if (g > result.best_single_gamma) {
      result.best_single_gamma = g;
      result.best_single_mean = m;
    }
  }

  constexpr std::uint64_t kTrialsPerBlock = 1024;
  const std::uint64_t n_blocks = (options.weights_trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<double> shard_best(std::max(1u, options.threads), 0.0);
  rng::run_sharded(n_blocks, options.threads, [&](unsigned shard, std::uint64_t first, std::uint64_t last) {
    std::vector<double> weights, means;
    double best = 0.0;
    for (std::uint64_t b = first; b < last; ++b) {
      auto engine = rng::block_engine(options.seed, rng::Stream::oracle, b);
      std::uniform_int_distribution<int> n_components(2, options.max_components);
      std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
      std::exponential_distribution<double> weight(1.0);
      const std::uint64_t end = std::min<std::uint64_t>((b + 1) * kTrialsPerBlock, options.weights_trials);
      for (std::uint64_t t = b * kTrialsPerBlock; t < end; ++t) {
        const int k = n_components(engine);
        weights.resize(static_cast<std::size_t>(k));
        means.resize(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c) {
          means[c] = grid[pick(engine)];
          weights[c] = weight(engine);
        }
        best = std::max(best, poisson_mixture_gamma(weights, means));
      }
    }
    shard_best[shard] = best;
  });
  for (double b : shard_best) result.best_mixture_gamma = std::max(result.best_mixture_gamma, b);
  result.max_gamma = std::max(result.best_single_gamma, result.best_mixture_gamma);
  return result;
}

GammaReport gamma_report(const PhotonDistribution& d) {
  GammaReport r;
  r.gamma = gamma(d);
  r.classical_bound = classical_gamma_bound();
  r.violated = r.gamma - r.classical_bound > 0.0;
  return r;
}

GammaReport gamma_significance(const EventCounts& counts) {
  const double s = static_cast<double>(counts.n1 + counts.n2 + counts.n3);
  if (!(s > 0.0)) throw NumericalError("Gamma undefined: no events in the 1, 2 and 3 photon peaks");
  GammaReport r;
  r.gamma = static_cast<double>(counts.n2) / s;
  r.std_error = std::sqrt(r.gamma * (1.0 - r.gamma) / s);
  r.classical_bound = classical_gamma_bound();
  r.violated = r.gamma - r.classical_bound > 0.0;
  if (r.std_error > 0.0) r.n_std_above_classical = (r.gamma - r.classical_bound) / r.std_error;
  r.counts = counts;
  return r;
}

double eta_from_ratio(double p1, double p2) {
  if (!(p1 > 0.0)) throw NumericalError("efficiency estimate needs P_1 > 0");
  if (!(p2 >= 0.0)) throw ConfigError("efficiency estimate needs P_2 >= 0");
  const double r = p2 / p1;
  return 2.0 * r / (1.0 + 2.0 * r);
}

double gamma_under_loss(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("efficiency must lie in (0, 1]");
  return eta / (2.0 - eta);
}

double threshold_efficiency() { return 3.0 / (3.0 + std::sqrt(6.0)); }

ParityReport parity_test(const PhotonDistribution& d) {
  ParityReport r;
  for (std::size_t n = 0; n < d.size(); ++n) (n % 2 == 0 ? r.p_even : r.p_odd) += d[n];
  r.parity = r.p_even - r.p_odd;
  r.nonclassical = r.parity < 0.0;
  return r;
}

}  // namespace photocount
