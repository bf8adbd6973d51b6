#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "photocount/acquisition.hpp"
#include "photocount/channel.hpp"
#include "photocount/error.hpp"

using namespace photocount;

namespace {

SourceSpec fock(int n) { return {FockSource{n}, 10}; }
SourceSpec pairs(double mu) { return {PairSource{mu, PairStatistics::poissonian}, 10}; }

DetectorModel ideal(double eta = 1.0, double nu = 0.0) {
  DetectorModel d;
  d.eta = eta;
  d.dark_mean = nu;
  return d;
}

std::vector<std::uint64_t> tally(const std::vector<std::uint16_t>& counts) {
  std::vector<std::uint64_t> t(32, 0);
  for (auto k : counts) ++t[k];
  return t;
}

}  // namespace

TEST_CASE("detector model geometry") {
  const DetectorModel d;
  CHECK(d.peak_center(0) == 20.0);
  CHECK(d.peak_center(3) == 320.0);
  CHECK(d.peak_width(0) == 5.0);
  CHECK(d.peak_width(4) == doctest::Approx(std::sqrt(25.0 + 4 * 25.0)));
  CHECK_NOTHROW(validate(d, 10));
  DetectorModel blurred = d;
  blurred.sigma_per_photon = 20.0;
  CHECK_THROWS_AS(validate(blurred, 3), ConfigError);
  CHECK_THROWS_AS(validate(ideal(1.5), 3), ConfigError);
  CHECK_THROWS_AS(validate(ideal(0.5, -1.0), 3), ConfigError);
}

TEST_CASE("no efficiency and no dark counts means no detections") {
  const auto counts = simulate_gate_counts(fock(3), ideal(0.0), 100000, {1, 1});
  CHECK(std::all_of(counts.begin(), counts.end(), [](auto k) { return k == 0; }));
  const auto all = simulate_gate_counts(fock(2), ideal(1.0), 1000, {1, 1});
  CHECK(std::all_of(all.begin(), all.end(), [](auto k) { return k == 2; }));
}

TEST_CASE("single photons are thinned binomially") {
  const std::uint64_t n = 200000;
  const double eta = 0.67;
  const auto t = tally(simulate_gate_counts(fock(1), ideal(eta), n, {4, 1}));
  const double sigma = std::sqrt(eta * (1 - eta) / n);
  CHECK(std::abs(t[1] / double(n) - eta) < 3.0 * sigma);
  CHECK(t[0] + t[1] == n);
}

TEST_CASE("dark counts alone are Poissonian") {
  const std::uint64_t n = 500000;
  const double nu = 0.1;
  const auto t = tally(simulate_gate_counts(fock(0), ideal(0.67, nu), n, {5, 1}));
  for (int k = 0; k <= 3; ++k) {
    const double p = std::exp(-nu) * std::pow(nu, k) / std::tgamma(k + 1.0);
    CHECK(std::abs(t[k] / double(n) - p) <= 5.0 * std::sqrt(p * (1 - p) / n) + 1e-9);
  }
}

TEST_CASE("simulated counts follow the analytic channel") {
  const std::uint64_t n = 1000000;
  const auto det = ideal(0.67, 4e-4);
  const auto a = simulate_acquisition(pairs(0.2), det, n, 1100, {6, 1});
  const auto f = apply_channel(detector_matrix(det.eta, det.dark_mean, 10), make_distribution(pairs(0.2)), 1.0)
                     .detected;
  const auto freq = tally_frequencies(a.detected_tally, n);
  double tv = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double observed = k < int(freq.size()) ? freq[k] : 0.0;
    tv += 0.5 * std::abs(observed - f[k]);
    CHECK(std::abs(observed - f[k]) <= 5.0 * std::sqrt(f[k] * (1 - f[k]) / n) + 1e-6);
  }
  CHECK(tv < 2e-3);
}

TEST_CASE("results do not depend on the shard count") {
  const std::uint64_t n = 3 * 65536 + 1234;
  const auto one = simulate_gate_counts(pairs(0.3), ideal(0.67, 4e-4), n, {9, 1});
  const auto three = simulate_gate_counts(pairs(0.3), ideal(0.67, 4e-4), n, {9, 3});
  CHECK(one == three);

  const DetectorModel det;
  const auto h1 = synthesize_histogram(one, det, 500, {9, 1});
  const auto h4 = synthesize_histogram(one, det, 500, {9, 4});
  CHECK(h1.counts == h4.counts);
  CHECK(h1.overflow == h4.overflow);

  const auto fused1 = simulate_acquisition(pairs(0.3), ideal(0.67, 4e-4), n, 500, {9, 1});
  const auto fused2 = simulate_acquisition(pairs(0.3), ideal(0.67, 4e-4), n, 500, {9, 2});
  CHECK(fused1.histogram.counts == fused2.histogram.counts);
  CHECK(fused1.detected_tally == fused2.detected_tally);

  SUBCASE("fused path equals the two-step path") {
    CHECK(fused1.histogram.counts == h1.counts);
    CHECK(fused1.histogram.overflow == h1.overflow);
    auto t = tally(one);
    t.resize(fused1.detected_tally.size());
    CHECK(t == fused1.detected_tally);
  }

  const auto other = simulate_gate_counts(pairs(0.3), ideal(0.67, 4e-4), n, {10, 1});
  CHECK(other != one);
}

TEST_CASE("histogram bookkeeping") {
  const std::uint64_t n = 200000;
  const auto counts = simulate_gate_counts(fock(10), ideal(1.0), n, {2, 1});
  const DetectorModel det;
  const auto h = synthesize_histogram(counts, det, 1100, {2, 1});
  CHECK_NOTHROW(validate(h));
  CHECK(h.n_gates == n);
  CHECK(h.total() + h.overflow == n);
  CHECK(h.bin_edges.front() == det.area_floor());
  CHECK(h.bin_edges.back() == doctest::Approx(det.adc_max));
  // Ten-photon peak at 1020 with width sqrt(275): the tail above 1070 saturates.
  const double z = (det.adc_max - det.peak_center(10)) / det.peak_width(10);
  const double p_over = 0.5 * std::erfc(z / std::sqrt(2.0));
  CHECK(std::abs(h.overflow / double(n) - p_over) < 5.0 * std::sqrt(p_over / n));

  CHECK_THROWS_AS(synthesize_histogram(counts, det, 5, {2, 1}), ConfigError);
  CHECK_THROWS_AS(simulate_gate_counts(fock(1), det, 0, {}), ConfigError);

  AreaHistogram bad = make_uniform_histogram(0.0, 10.0, 10);
  bad.counts[0] = 5;
  bad.n_gates = 4;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad.bin_edges[3] = bad.bin_edges[2];
  bad.n_gates = 5;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("single photon pulse areas have the model mean and width") {
  const std::uint64_t n = 200000;
  const DetectorModel det;
  const auto counts = simulate_gate_counts(fock(1), ideal(1.0), n, {3, 1});
  const auto h = synthesize_histogram(counts, det, 1100, {3, 1});
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    s += h.counts[i] * h.bin_center(i);
    s2 += h.counts[i] * h.bin_center(i) * h.bin_center(i);
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  const double width = det.peak_width(1);
  const double bin = h.bin_width(0);
  CHECK(std::abs(mean - det.peak_center(1)) < 5.0 * width / std::sqrt(double(n)) + bin);
  CHECK(std::sqrt(var) == doctest::Approx(width).epsilon(0.02));
}

TEST_CASE("pump calibration") {
  const DetectorModel det;
  const double kappa = calibrate_pairs_per_uW(det, PairStatistics::poissonian, 0.0818);
  CHECK(kappa == doctest::Approx(0.2253).epsilon(1e-3));
  const auto f = apply_channel(detector_matrix(det.eta, det.dark_mean, 14),
                               make_distribution({PairSource{kappa, PairStatistics::poissonian}, 14}), 1.0)
                     .detected;
  CHECK(f[1] == doctest::Approx(0.0818).epsilon(1e-8));
  CHECK(calibrate_pairs_per_uW(det, PairStatistics::poissonian, 0.0818, 2.0) == doctest::Approx(kappa / 2));
  CHECK(calibrate_pairs_per_uW(det, PairStatistics::thermal, 0.0818) > kappa);
  CHECK_THROWS_AS(calibrate_pairs_per_uW(det, PairStatistics::poissonian, 0.9), ConfigError);
  CHECK_THROWS_AS(validate(PumpModel{{}, 0.2, PairStatistics::poissonian}), ConfigError);
  CHECK_THROWS_AS(validate(PumpModel{{1.0, -1.0}, 0.2, PairStatistics::poissonian}), ConfigError);
}
