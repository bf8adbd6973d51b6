#include <cmath>
#include <vector>

#include "doctest.h"
#include "photocount/acquisition.hpp"
#include "photocount/error.hpp"
#include "photocount/peak_fit.hpp"

using namespace photocount;

namespace {

struct TruePeak {
  double area, center, width;
};

double normal_cdf(double x, double c, double w) { return 0.5 * std::erfc(-(x - c) / (w * std::sqrt(2.0))); }

// Exact expected bin contents; the first bin reaches down to -infinity.
AreaHistogram noiseless(const std::vector<TruePeak>& peaks, double lo, double hi, std::size_t bins) {
  auto h = make_uniform_histogram(lo, hi, bins);
  for (std::size_t i = 0; i < bins; ++i) {
    double expected = 0.0;
    for (const auto& p : peaks) {
      const double below = i == 0 ? 0.0 : normal_cdf(h.bin_edges[i], p.center, p.width);
      expected += p.area * (normal_cdf(h.bin_edges[i + 1], p.center, p.width) - below);
    }
    h.counts[i] = static_cast<std::uint64_t>(std::llround(expected));
  }
  h.n_gates = h.total();
  return h;
}

AreaHistogram affine(const AreaHistogram& h, double a, double b) {
  AreaHistogram out = h;
  for (double& e : out.bin_edges) e = a * e + b;
  return out;
}

std::vector<TruePeak> detector_peaks(const std::vector<double>& areas) {
  const DetectorModel det;
  std::vector<TruePeak> out;
  for (std::size_t k = 0; k < areas.size(); ++k) {
    out.push_back({areas[k], det.peak_center(int(k)), det.peak_width(int(k))});
  }
  return out;
}

}  // namespace

TEST_CASE("noiseless single Gaussian is recovered exactly") {
  const TruePeak truth{1e12, 120.0, std::sqrt(50.0)};
  const auto h = noiseless({truth}, -5.0, 1070.0, 1075);
  const PeakGuess guess{116.0, 9.0, 1e10};
  const auto fit = fit_peaks(h, std::span(&guess, 1));
  REQUIRE(fit.converged);
  REQUIRE(fit.peaks.size() == 1);
  CHECK(fit.peaks[0].area == doctest::Approx(truth.area).epsilon(1e-6));
  CHECK(fit.peaks[0].center == doctest::Approx(truth.center).epsilon(1e-6));
  CHECK(fit.peaks[0].width == doctest::Approx(truth.width).epsilon(1e-6));
  CHECK(fit.peaks[0].area_std_error >= std::sqrt(fit.peaks[0].area));
}

TEST_CASE("noiseless mixture: areas to 1e-6 in every mode") {
  const std::vector<double> areas{6e11, 3e11, 8e10, 1.5e10, 2e9};
  const auto truth = detector_peaks(areas);
  const auto h = noiseless(truth, -5.0, 1070.0, 1100);
  const auto guesses = detect_peaks(h);
  REQUIRE(guesses.size() == areas.size());
  for (std::size_t k = 0; k < areas.size(); ++k) {
    CHECK(std::abs(guesses[k].center - truth[k].center) < truth[k].width);
  }

  for (auto mode : {FitMode::simultaneous, FitMode::per_peak}) {
    FitOptions options;
    options.mode = mode;
    const auto fit = fit_peaks(h, guesses, options);
    REQUIRE(fit.converged);
    REQUIRE(fit.peaks.size() == areas.size());
    // Per-peak windows cut off the far tails of the neighbours.
    const double tol = mode == FitMode::simultaneous ? 1e-6 : 1e-3;
    for (std::size_t k = 0; k < areas.size(); ++k) {
      CHECK(fit.peaks[k].photon_number == int(k));
      CHECK(fit.peaks[k].area == doctest::Approx(areas[k]).epsilon(tol));
      CHECK(fit.peaks[k].center == doctest::Approx(truth[k].center).epsilon(tol));
      CHECK(fit.peaks[k].width == doctest::Approx(truth[k].width).epsilon(tol));
    }
    const auto m = areas_to_probabilities(fit, 10);
    CHECK(m.distribution.cutoff() == 10);
    CHECK(m.distribution[1] == doctest::Approx(areas[1] / 9.97e11).epsilon(tol));
    CHECK(m.distribution[7] == 0.0);
  }
}

TEST_CASE("shared width constraint") {
  std::vector<TruePeak> truth;
  for (int k = 0; k < 3; ++k) truth.push_back({1e11 / (k + 1), 20.0 + 100.0 * k, 6.0});
  const auto h = noiseless(truth, -5.0, 400.0, 405);
  FitOptions options;
  options.shared_width = true;
  const auto fit = fit_peaks(h, detect_peaks(h), options);
  REQUIRE(fit.converged);
  REQUIRE(fit.peaks.size() == 3);
  for (const auto& p : fit.peaks) {
    CHECK(p.width == fit.peaks[0].width);
    CHECK(p.width == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(p.area == doctest::Approx(truth[p.photon_number].area).epsilon(1e-6));
  }
}

TEST_CASE("fit is equivariant under affine rescaling of the area axis") {
  SourceSpec source{PairSource{0.4, PairStatistics::poissonian}, 12};
  const auto acq = simulate_acquisition(source, DetectorModel{}, 300000, 1100, {31, 1});
  const auto& h = acq.histogram;
  const auto guesses = detect_peaks(h);
  const auto base = fit_peaks(h, guesses);
  REQUIRE(base.converged);

  for (auto [a, b] : {std::pair{3.7, -150.0}, std::pair{0.01, 2.0}, std::pair{250.0, 1e4}}) {
    const auto scaled_h = affine(h, a, b);
    auto scaled_guesses = detect_peaks(scaled_h);
    REQUIRE(scaled_guesses.size() == guesses.size());
    for (std::size_t k = 0; k < guesses.size(); ++k) {
      CHECK(scaled_guesses[k].center == doctest::Approx(a * guesses[k].center + b).epsilon(1e-9));
    }
    const auto scaled = fit_peaks(scaled_h, scaled_guesses);
    REQUIRE(scaled.converged);
    REQUIRE(scaled.peaks.size() == base.peaks.size());
    const auto p0 = areas_to_probabilities(base).distribution;
    const auto p1 = areas_to_probabilities(scaled).distribution;
    for (std::size_t k = 0; k < base.peaks.size(); ++k) {
      CHECK(scaled.peaks[k].area == doctest::Approx(base.peaks[k].area).epsilon(1e-9));
      CHECK(scaled.peaks[k].center == doctest::Approx(a * base.peaks[k].center + b).epsilon(1e-9));
      CHECK(scaled.peaks[k].width == doctest::Approx(a * base.peaks[k].width).epsilon(1e-9));
      CHECK(p1[k] == doctest::Approx(p0[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("peak detection") {
  auto empty = make_uniform_histogram(0.0, 100.0, 100);
  CHECK_THROWS_AS(detect_peaks(empty), FitError);

  // A pedestal alone yields exactly one guess.
  const auto pedestal = noiseless({{1e6, 20.0, 5.0}}, -5.0, 1070.0, 1075);
  const auto one = detect_peaks(pedestal);
  REQUIRE(one.size() == 1);
  CHECK(std::abs(one[0].center - 20.0) < 1.0);

  // Isolated single-count bins far from the pedestal are noise.
  auto spiky = pedestal;
  spiky.counts[500] = 1;
  spiky.counts[700] = 2;
  spiky.n_gates += 3;
  CHECK(detect_peaks(spiky).size() == 1);

  // A lone count is still a guess.
  auto lone = empty;
  lone.counts[40] = 1;
  lone.n_gates = 1;
  CHECK(detect_peaks(lone).size() == 1);
}

TEST_CASE("fit input errors and warnings") {
  const auto h = noiseless(detector_peaks({1e6, 1e5}), -5.0, 1070.0, 1075);
  CHECK_THROWS_AS(fit_peaks(h, std::span<const PeakGuess>{}), FitError);

  const std::vector<PeakGuess> overlapping{{20.0, 5.0, 1e5}, {21.0, 5.0, 1e5}, {120.0, 7.0, 1e4}};
  const auto fit = fit_peaks(h, overlapping);
  CHECK_FALSE(fit.warnings.empty());

  FitOptions tight;
  tight.max_iterations = 1;
  const std::vector<PeakGuess> far{{40.0, 20.0, 10.0}, {160.0, 20.0, 10.0}};
  const auto stalled = fit_peaks(h, far, tight);
  CHECK_FALSE(stalled.converged);
  CHECK_FALSE(stalled.warnings.empty());
  CHECK_THROWS_AS(areas_to_probabilities(stalled), FitError);
}

TEST_CASE("fitted areas cover the true counts on noisy data") {
  const DetectorModel det;
  int inside = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SourceSpec source = seed % 2 ? SourceSpec{PairSource{0.5, PairStatistics::poissonian}, 14}
                                       : SourceSpec{PoissonSource{1.0}, 14};
    const auto acq = simulate_acquisition(source, det, 100000, 1100, {1000 + seed, 1});
    const auto fit = fit_peaks(acq.histogram, detect_peaks(acq.histogram));
    REQUIRE(fit.converged);
    for (const auto& p : fit.peaks) {
      if (p.photon_number >= int(acq.detected_tally.size())) continue;
      const double truth = double(acq.detected_tally[p.photon_number]);
      if (truth < 20) continue;
      ++total;
      if (std::abs(p.area - truth) <= 3.0 * p.area_std_error) ++inside;
      CHECK(p.area_std_error >= std::sqrt(p.area));
    }
  }
  CHECK(total > 300);
  CHECK(inside >= 0.95 * total);
}
