#include "photocount/peak_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "photocount/error.hpp"

namespace photocount {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);
constexpr double kSupport = 12.0;

std::vector<double> smooth(const AreaHistogram& h, int window) {
  const auto n = static_cast<std::ptrdiff_t>(h.bins());
  const std::ptrdiff_t half = std::max(window, 1) / 2;
  std::vector<double> s(h.bins());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto lo = std::max<std::ptrdiff_t>(0, i - half);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double acc = 0.0;
    for (auto j = lo; j <= hi; ++j) acc += static_cast<double>(h.counts[j]);
    s[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return s;
}

// Topographic prominence of the maximum at i.
double prominence(const std::vector<double>& s, std::size_t i) {
  double left_min = s[i];
  for (std::size_t j = i; j-- > 0;) {
    if (s[j] > s[i]) break;
    left_min = std::min(left_min, s[j]);
  }
  double right_min = s[i];
  // Equal twins past a dip: only the left one counts the other as higher
  // ground. A flat top is one maximum.
  bool dipped = false;
  for (std::size_t j = i + 1; j < s.size(); ++j) {
    if (s[j] > s[i] || (dipped && s[j] == s[i])) break;
    dipped = dipped || s[j] < s[i];
    right_min = std::min(right_min, s[j]);
  }
  return s[i] - std::max(left_min, right_min);
}

// Width from the half-maximum crossings; gives up on a side that climbs above the maximum first.
double half_max_width(const AreaHistogram& h, const std::vector<double>& s, std::size_t i) {
  const double half = 0.5 * s[i];
  auto crossing = [&](int dir) -> std::optional<double> {
    std::size_t j = i;
    while (true) {
      const std::ptrdiff_t next = static_cast<std::ptrdiff_t>(j) + dir;
      if (next < 0 || next >= static_cast<std::ptrdiff_t>(s.size())) return std::nullopt;
      const auto k = static_cast<std::size_t>(next);
      if (s[k] > s[i]) return std::nullopt;
      if (s[k] <= half) {
        const double t = (s[j] - half) / (s[j] - s[k]);
        const double xj = h.bin_center(j);
        return std::abs(xj + t * (h.bin_center(k) - xj) - h.bin_center(i));
      }
      j = k;
    }
  };
  const auto left = crossing(-1);
  const auto right = crossing(+1);
  double hwhm = 0.0;
  if (left && right) {
    hwhm = 0.5 * (*left + *right);
  } else if (left || right) {
    hwhm = left ? *left : *right;
  } else {
    hwhm = 2.0 * h.bin_width(i);
  }
  return std::max(hwhm / std::sqrt(2.0 * std::log(2.0)), 0.5 * h.bin_width(i));
}

struct PeakParams {
  double area;
  double center;
  double width;
};

// Sum of bin-integrated Gaussians over bins [first, last).
class GaussianSumModel {
 public:
  GaussianSumModel(const AreaHistogram& h, std::size_t first, std::size_t last, std::size_t n_peaks,
                   bool shared_width)
      : n_peaks_(n_peaks), shared_width_(shared_width) {
    const std::size_t n = last - first;
    edges_.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) edges_[i] = h.bin_edges[first + i];
    if (first == 0) edges_[0] = -std::numeric_limits<double>::infinity();
    y_.resize(static_cast<Eigen::Index>(n));
    sqrt_w_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double c = static_cast<double>(h.counts[first + i]);
      y_[static_cast<Eigen::Index>(i)] = c;
      sqrt_w_[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(std::max(c, 1.0));
    }
    min_width_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i < last; ++i) min_width_ = std::min(min_width_, h.bin_width(i));
    min_width_ *= 0.01;
  }

  /// Poisson weights from the expected counts instead of the observed ones.
  void use_model_weights(const Eigen::VectorXd& theta) {
    Eigen::VectorXd residual;
    evaluate(theta, residual, nullptr);
    const Eigen::VectorXd mu = y_ - residual.cwiseQuotient(sqrt_w_);
    for (Eigen::Index b = 0; b < mu.size(); ++b) sqrt_w_[b] = 1.0 / std::sqrt(std::max(mu[b], 1.0));
  }

  Eigen::Index n_params() const {
    return static_cast<Eigen::Index>(shared_width_ ? 2 * n_peaks_ + 1 : 3 * n_peaks_);
  }
  Eigen::Index n_bins() const { return y_.size(); }
  Eigen::Index area_index(std::size_t p) const { return static_cast<Eigen::Index>(shared_width_ ? 2 * p : 3 * p); }
  Eigen::Index width_index(std::size_t p) const {
    return shared_width_ ? static_cast<Eigen::Index>(2 * n_peaks_) : static_cast<Eigen::Index>(3 * p + 2);
  }

  PeakParams peak(const Eigen::VectorXd& theta, std::size_t p) const {
    const auto a = area_index(p);
    return {theta[a], theta[a + 1], theta[width_index(p)]};
  }

  Eigen::VectorXd pack(std::span<const PeakParams> peaks) const {
    Eigen::VectorXd theta(n_params());
    for (std::size_t p = 0; p < n_peaks_; ++p) {
      theta[area_index(p)] = peaks[p].area;
      theta[area_index(p) + 1] = peaks[p].center;
      theta[width_index(p)] = peaks[p].width;
    }
    if (shared_width_) {
      double w = 0.0;
      for (const auto& pk : peaks) w += pk.width;
      theta[width_index(0)] = w / static_cast<double>(n_peaks_);
    }
    return theta;
  }

  void project(Eigen::VectorXd& theta) const {
    for (std::size_t p = 0; p < n_peaks_; ++p) {
      theta[area_index(p)] = std::max(theta[area_index(p)], 0.0);
      theta[width_index(p)] = std::max(theta[width_index(p)], min_width_);
    }
  }

  /// Weighted residuals (y - mu) sqrt(w) and, optionally, d(mu sqrt(w))/dtheta.
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd& residual, Eigen::MatrixXd* jac) const {
    const Eigen::Index nb = n_bins();
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(nb);
    if (jac) jac->setZero(nb, n_params());
    std::vector<double> lower_tail(edges_.size()), upper_tail(edges_.size()), dens(edges_.size()),
        zdens(edges_.size()), z(edges_.size());
    for (std::size_t p = 0; p < n_peaks_; ++p) {
      const auto [area, center, width] = peak(theta, p);
      // Bins beyond kSupport widths get nothing measurable.
      const auto first_edge = static_cast<std::size_t>(
          std::max<std::ptrdiff_t>(std::upper_bound(edges_.begin(), edges_.end(), center - kSupport * width) -
                                       edges_.begin() - 1,
                                   0));
      const auto last_edge = std::min<std::size_t>(
          static_cast<std::size_t>(std::lower_bound(edges_.begin(), edges_.end(), center + kSupport * width) -
                                   edges_.begin()),
          edges_.size() - 1);
      if (first_edge >= last_edge) continue;
      for (std::size_t e = first_edge; e <= last_edge; ++e) {
        if (std::isinf(edges_[e])) {
          z[e] = -std::numeric_limits<double>::infinity();
          lower_tail[e] = 0.0;
          upper_tail[e] = 1.0;
          dens[e] = zdens[e] = 0.0;
          continue;
        }
        z[e] = (edges_[e] - center) / width;
        lower_tail[e] = 0.5 * std::erfc(-z[e] * kInvSqrt2);
        upper_tail[e] = 0.5 * std::erfc(z[e] * kInvSqrt2);
        dens[e] = std::exp(-0.5 * z[e] * z[e]) / kSqrt2Pi;
        zdens[e] = z[e] * dens[e];
      }
      const Eigen::Index ia = area_index(p);
      const Eigen::Index iw = width_index(p);
      for (auto b = static_cast<Eigen::Index>(first_edge); b < static_cast<Eigen::Index>(last_edge); ++b) {
        const auto lo = static_cast<std::size_t>(b);
        const auto hi = lo + 1;
        // Difference of whichever tail is small, for precision far from the center.
        const double mass = z[lo] > 0.0 ? upper_tail[lo] - upper_tail[hi] : lower_tail[hi] - lower_tail[lo];
        mu[b] += area * mass;
        if (jac) {
          const double s = sqrt_w_[b];
          (*jac)(b, ia) += s * mass;
          (*jac)(b, ia + 1) += s * area * (dens[lo] - dens[hi]) / width;
          (*jac)(b, iw) += s * area * (zdens[lo] - zdens[hi]) / width;
        }
      }
    }
    residual = (y_ - mu).cwiseProduct(sqrt_w_);
    return residual.squaredNorm();
  }

  /// Largest step component relative to its natural scale.
  double relative_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& step) const {
    double worst = 0.0;
    for (std::size_t p = 0; p < n_peaks_; ++p) {
      const auto ia = area_index(p);
      const auto iw = width_index(p);
      const double w = std::max(theta[iw], min_width_);
      worst = std::max(worst, std::abs(step[ia]) / std::max(std::abs(theta[ia]), 1.0));
      worst = std::max(worst, std::abs(step[ia + 1]) / w);
      worst = std::max(worst, std::abs(step[iw]) / w);
    }
    return worst;
  }

 private:
  std::size_t n_peaks_;
  bool shared_width_;
  std::vector<double> edges_;
  Eigen::VectorXd y_;
  Eigen::VectorXd sqrt_w_;
  double min_width_;
};

struct WindowFit {
  std::vector<PeakParams> peaks;
  std::vector<double> area_errors;
  double chi2 = 0.0;
  bool converged = false;
  int iterations = 0;
};

WindowFit fit_window(const AreaHistogram& h, std::size_t first, std::size_t last,
                     std::span<const PeakGuess> guesses, const FitOptions& options) {
  GaussianSumModel model(h, first, last, guesses.size(), options.shared_width);
  std::vector<PeakParams> start;
  for (const auto& g : guesses) {
    const double bin = h.bin_width(std::min(first + (last - first) / 2, h.bins() - 1));
    start.push_back({g.height * g.width * kSqrt2Pi / bin, g.center, g.width});
  }
  Eigen::VectorXd theta = model.pack(start);
  model.project(theta);

  Eigen::VectorXd residual, trial_residual;
  Eigen::MatrixXd jac(model.n_bins(), model.n_params());
  double chi2 = 0.0;
  WindowFit out;
  int budget = options.max_iterations;

  auto levenberg_marquardt = [&]() -> bool {
    chi2 = model.evaluate(theta, residual, &jac);
    double lambda = 1e-3;
    bool converged = false;
    for (; budget > 0 && !converged; --budget) {
      ++out.iterations;
      const Eigen::MatrixXd normal = jac.transpose() * jac;
      const Eigen::VectorXd gradient = jac.transpose() * residual;
      const double diag_floor = 1e-12 * std::max(normal.diagonal().maxCoeff(), 1e-300);
      bool accepted = false;
      while (!accepted) {
        Eigen::MatrixXd damped = normal;
        for (Eigen::Index i = 0; i < damped.rows(); ++i) {
          damped(i, i) += lambda * std::max(normal(i, i), diag_floor);
        }
        Eigen::VectorXd trial = theta + damped.ldlt().solve(gradient);
        model.project(trial);
        const double trial_chi2 = model.evaluate(trial, trial_residual, nullptr);
        if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
          const double step = model.relative_step(theta, trial - theta);
          theta = trial;
          chi2 = model.evaluate(theta, residual, &jac);
          lambda = std::max(lambda * 0.1, 1e-15);
          accepted = true;
          converged = step < options.tolerance;
        } else {
          lambda *= 10.0;
          if (lambda > 1e20) {
            // No downhill step at any damping: a minimum to working precision.
            converged = true;
            break;
          }
        }
      }
    }
    // Near the minimum chi2 differences drown in rounding, but the gradient
    // does not: finish with plain Gauss-Newton steps.
    for (int polish = 0; converged && polish < 3; ++polish) {
      const Eigen::MatrixXd normal = jac.transpose() * jac;
      Eigen::VectorXd trial = theta + normal.ldlt().solve(jac.transpose() * residual);
      model.project(trial);
      const double step = model.relative_step(theta, trial - theta);
      if (!(step < options.tolerance)) break;
      theta = trial;
      chi2 = model.evaluate(theta, residual, &jac);
    }
    return converged;
  };

  out.converged = levenberg_marquardt();
  // Count weights bias sparse peaks low; refit with weights from the model
  // until the solution stops moving.
  constexpr int kMaxPasses = 50;
  for (int pass = 0; options.model_weights && out.converged && pass < kMaxPasses; ++pass) {
    const Eigen::VectorXd previous = theta;
    model.use_model_weights(theta);
    out.converged = levenberg_marquardt();
    if (model.relative_step(previous, theta - previous) < options.tolerance) break;
    if (pass + 1 == kMaxPasses) out.converged = false;
  }

  const Eigen::MatrixXd normal = jac.transpose() * jac;
  const Eigen::MatrixXd cov = normal.completeOrthogonalDecomposition().pseudoInverse();
  for (std::size_t p = 0; p < guesses.size(); ++p) {
    const auto pk = model.peak(theta, p);
    const auto ia = model.area_index(p);
    out.peaks.push_back(pk);
    out.area_errors.push_back(std::max(std::sqrt(std::max(cov(ia, ia), 0.0)), std::sqrt(pk.area)));
  }
  out.chi2 = chi2;
  return out;
}

std::size_t bin_at(const AreaHistogram& h, double x) {
  const auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), x);
  if (it == h.bin_edges.begin()) return 0;
  return std::min(static_cast<std::size_t>(it - h.bin_edges.begin()) - 1, h.bins() - 1);
}

}  // namespace

std::vector<PeakGuess> detect_peaks(const AreaHistogram& h, const DetectOptions& options) {
  validate(h);
  if (h.total() == 0) throw FitError("cannot detect peaks in an empty histogram");
  const auto s = smooth(h, options.smoothing_window);

  struct Candidate {
    std::size_t bin;
    double width;
  };
  std::vector<Candidate> kept;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool rises = i == 0 || s[i] > s[i - 1];
    const bool falls = i + 1 == s.size() || s[i] >= s[i + 1];
    if (!rises || !falls || s[i] <= 0.0) continue;
    const double noise = std::sqrt(s[i] / std::max(options.smoothing_window, 1));
    const double threshold = std::max(options.min_prominence_counts, options.prominence_sigmas * noise);
    if (prominence(s, i) < threshold) continue;
    kept.push_back({i, half_max_width(h, s, i)});
  }
  if (kept.empty()) {
    const auto i = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    kept.push_back({i, half_max_width(h, s, i)});
  }

  // Two maxima within one combined width belong to the same peak.
  std::vector<Candidate> merged;
  for (const auto& c : kept) {
    if (!merged.empty()) {
      auto& prev = merged.back();
      if (h.bin_center(c.bin) - h.bin_center(prev.bin) < prev.width + c.width) {
        if (s[c.bin] > s[prev.bin]) prev = c;
        continue;
      }
    }
    merged.push_back(c);
  }

  std::vector<PeakGuess> guesses;
  for (const auto& c : merged) guesses.push_back({h.bin_center(c.bin), c.width, s[c.bin]});
  return guesses;
}

PeakFitResult fit_peaks(const AreaHistogram& h, std::span<const PeakGuess> guesses, const FitOptions& options) {
  validate(h);
  if (guesses.empty()) throw FitError("peak fit needs at least one initial guess");
  for (const auto& g : guesses) {
    if (!(g.width > 0.0) || !std::isfinite(g.center)) throw FitError("peak guesses need finite centers and widths > 0");
  }
  std::vector<PeakGuess> ordered(guesses.begin(), guesses.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.center < b.center; });

  PeakFitResult result;
  std::vector<PeakParams> params;
  std::vector<double> errors;
  double chi2 = 0.0;

  if (options.mode == FitMode::simultaneous) {
    auto fit = fit_window(h, 0, h.bins(), ordered, options);
    params = std::move(fit.peaks);
    errors = std::move(fit.area_errors);
    chi2 = fit.chi2;
    result.converged = fit.converged;
    result.iterations = fit.iterations;
  } else {
    result.converged = true;
    for (std::size_t p = 0; p < ordered.size(); ++p) {
      const auto& g = ordered[p];
      const double lo = p == 0 ? g.center - 5.0 * g.width : 0.5 * (ordered[p - 1].center + g.center);
      const double hi = p + 1 == ordered.size() ? g.center + 5.0 * g.width : 0.5 * (g.center + ordered[p + 1].center);
      const std::size_t first = bin_at(h, lo);
      const std::size_t last = std::max(bin_at(h, hi) + 1, first + 1);
      auto fit = fit_window(h, first, last, std::span(&g, 1), options);
      params.push_back(fit.peaks.front());
      errors.push_back(fit.area_errors.front());
      chi2 += fit.chi2;
      result.converged = result.converged && fit.converged;
      result.iterations = std::max(result.iterations, fit.iterations);
    }
  }

  std::vector<std::size_t> order(params.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return params[a].center < params[b].center; });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& pk = params[order[k]];
    const double bin = h.bin_width(bin_at(h, pk.center));
    result.peaks.push_back({static_cast<int>(k), pk.center, pk.width, pk.area, errors[order[k]],
                            pk.area * bin / (pk.width * kSqrt2Pi)});
  }
  for (std::size_t k = 1; k < result.peaks.size(); ++k) {
    const auto& a = result.peaks[k - 1];
    const auto& b = result.peaks[k];
    if (b.center - a.center < 0.5 * std::max(a.width, b.width)) {
      result.warnings.push_back("peaks " + std::to_string(k - 1) + " and " + std::to_string(k) +
                                " overlap within half a width; consider merging them");
    }
  }
  if (!result.converged) result.warnings.push_back("fit did not converge; returning the best iterate");
  result.residual_norm = std::sqrt(chi2);
  return result;
}

MeasuredDistribution areas_to_probabilities(const PeakFitResult& fit, int min_cutoff) {
  if (!fit.converged) throw FitError("cannot normalize an unconverged peak fit");
  double total = 0.0;
  for (const auto& p : fit.peaks) total += p.area;
  if (!(total > 0.0)) throw NumericalError("fitted peaks have zero total area");

  const int cutoff = std::max(static_cast<int>(fit.peaks.size()) - 1, std::max(min_cutoff, kMinCutoff));
  const auto n = static_cast<std::size_t>(cutoff) + 1;
  std::vector<double> probs(n, 0.0), errors(n, 0.0);
  std::vector<std::uint64_t> counts(n, 0);
  for (const auto& p : fit.peaks) {
    const auto k = static_cast<std::size_t>(p.photon_number);
    probs[k] = p.area / total;
    counts[k] = static_cast<std::uint64_t>(std::llround(p.area));
  }
  // dP_k/dA_j = (delta_kj - P_k) / total, areas independent.
  for (const auto& pk : fit.peaks) {
    const auto k = static_cast<std::size_t>(pk.photon_number);
    double var = 0.0;
    for (const auto& pj : fit.peaks) {
      const double d = ((pj.photon_number == pk.photon_number ? 1.0 : 0.0) - probs[k]) / total;
      var += d * d * pj.area_std_error * pj.area_std_error;
    }
    errors[k] = std::sqrt(var);
  }
  return {PhotonDistribution(std::move(probs)), std::move(errors), std::move(counts), total};
}

}  // namespace photocount
