#include "photocount/channel.hpp"

#include <cmath>
#include <limits>

#include "photocount/error.hpp"

namespace photocount {

namespace {

std::vector<double> log_factorials(int n) {
  std::vector<double> lf(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 1; k <= n; ++k) lf[k] = lf[k - 1] + std::log(static_cast<double>(k));
  return lf;
}

// Exact for every coefficient representable in a double mantissa.
double binomial_coefficient(const std::vector<double>& lf, int n, int k) {
  const double c = std::exp(lf[n] - lf[k] - lf[n - k]);
  return c < 0x1p52 ? std::round(c) : c;
}

void check_cutoff(int cutoff) {
  if (cutoff < kMinCutoff) throw ConfigError("transfer matrix cutoff must be >= 3");
}

}  // namespace

TransferMatrix::TransferMatrix(Eigen::MatrixXd entries, double eta, double dark_mean)
    : entries_(std::move(entries)), eta_(eta), dark_mean_(dark_mean) {
  if (entries_.rows() != entries_.cols()) throw ConfigError("transfer matrix must be square");
  check_cutoff(cutoff());
}

TransferMatrix TransferMatrix::identity(int cutoff) {
  check_cutoff(cutoff);
  return TransferMatrix(Eigen::MatrixXd::Identity(cutoff + 1, cutoff + 1), 1.0, 0.0);
}

TransferMatrix binomial_loss_matrix(double eta, int cutoff) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("efficiency must lie in [0, 1]");
  check_cutoff(cutoff);
  const auto lf = log_factorials(cutoff);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
  for (int j = 0; j <= cutoff; ++j) {
    for (int i = 0; i <= j; ++i) {
      m(i, j) = binomial_coefficient(lf, j, i) * std::pow(eta, i) * std::pow(1.0 - eta, j - i);
    }
  }
  return TransferMatrix(std::move(m), eta, 0.0);
}

TransferMatrix dark_convolution_matrix(double dark_mean, int cutoff) {
  if (!(dark_mean >= 0.0) || !std::isfinite(dark_mean)) {
    throw ConfigError("dark count mean must be >= 0");
  }
  check_cutoff(cutoff);
  const auto lf = log_factorials(cutoff);
  const double vacuum = std::exp(-dark_mean);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
  for (int j = 0; j <= cutoff; ++j) {
    for (int i = j; i <= cutoff; ++i) {
      m(i, j) = vacuum * std::pow(dark_mean, i - j) * std::exp(-lf[i - j]);
    }
  }
  return TransferMatrix(std::move(m), 1.0, dark_mean);
}

TransferMatrix compose(const TransferMatrix& outer, const TransferMatrix& inner) {
  if (outer.cutoff() != inner.cutoff()) throw ConfigError("cannot compose channels with different cutoffs");
  return TransferMatrix(outer.entries() * inner.entries(), outer.eta() * inner.eta(),
                        outer.dark_mean() + outer.eta() * inner.dark_mean());
}

TransferMatrix detector_matrix(double eta, double dark_mean, int cutoff, DarkOrder order) {
  const auto loss = binomial_loss_matrix(eta, cutoff);
  const auto dark = dark_convolution_matrix(dark_mean, cutoff);
  return order == DarkOrder::after_loss ? compose(dark, loss) : compose(loss, dark);
}

ChannelOutput apply_channel(const TransferMatrix& m, const PhotonDistribution& p, double max_leakage) {
  if (m.cutoff() != p.cutoff()) throw ConfigError("channel and distribution cutoffs differ");
  if (!p.is_physical()) throw ConfigError("forward channel needs a physical input distribution");
  const Eigen::Map<const Eigen::VectorXd> in(p.probs().data(), static_cast<Eigen::Index>(p.size()));
  const Eigen::VectorXd out = m.entries() * in;
  const double leakage = std::max(0.0, p.sum() - out.sum());
  if (leakage > max_leakage) {
    throw TruncationError("detected distribution leaks above the cutoff", leakage);
  }
  std::vector<double> f(out.data(), out.data() + out.size());
  // Products of non-negative numbers; guard against -0.0 only.
  for (double& x : f) x = std::max(x, 0.0);
  return {PhotonDistribution(std::move(f)), leakage};
}

Reconstruction invert_channel(const TransferMatrix& m, const PhotonDistribution& f, double condition_limit) {
  if (m.cutoff() != f.cutoff()) throw ConfigError("channel and distribution cutoffs differ");
  if (m.eta() == 0.0) throw NumericalError("zero-efficiency channel is singular");
  const Eigen::Map<const Eigen::VectorXd> rhs(f.probs().data(), static_cast<Eigen::Index>(f.size()));

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.entries());
  const double rcond = lu.rcond();
  if (!(rcond > 0.0)) throw NumericalError("transfer matrix is singular");

  Eigen::VectorXd p = lu.solve(rhs);
  // One refinement step; the loss matrix grows like eta^-N.
  const Eigen::VectorXd residual = rhs - m.entries() * p;
  p += lu.solve(residual);

  Reconstruction r{PhotonDistribution(std::vector<double>(p.data(), p.data() + p.size()),
                                      PhotonDistribution::Sign::signed_values),
                   1.0 / rcond, std::nullopt};
  if (r.condition_number > condition_limit) {
    r.warning = "ill-conditioned transfer matrix (condition number " +
                std::to_string(r.condition_number) + ")";
  }
  return r;
}

NegativityReport truncation_diagnostics(const PhotonDistribution& p) {
  NegativityReport report;
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (p[n] < 0.0) {
      report.negative_indices.push_back(static_cast<int>(n));
      report.negative_mass -= p[n];
      if (p[n] < report.most_negative) {
        report.most_negative = p[n];
        report.most_negative_index = static_cast<int>(n);
      }
    }
  }
  report.sum_deviation = p.sum() - 1.0;
  return report;
}

}  // namespace photocount
