#include "photocount/analysis.hpp"

#include "photocount/error.hpp"
#include "photocount/rng.hpp"

namespace photocount {

GammaReport gamma_from_measurement(const MeasuredDistribution& m) {
  EventCounts counts{m.counts[1], m.counts[2], m.counts[3],
                     static_cast<std::uint64_t>(std::llround(m.total_area))};
  return gamma_significance(counts);
}

Analysis analyze_histogram(const AreaHistogram& h, const AnalysisOptions& options) {
  Analysis a;
  a.guesses = detect_peaks(h, options.detect);
  a.fit = fit_peaks(h, a.guesses, options.fit);
  if (!a.fit.converged) {
    a.error = "peak fit did not converge";
    return a;
  }
  a.measured = areas_to_probabilities(a.fit, options.cutoff);
  const auto& p = a.measured->distribution;
  a.parity = parity_test(p);
  if (p[1] > 0.0) a.eta_estimate = eta_from_ratio(p[1], p[2]);
  try {
    a.gamma = gamma_from_measurement(*a.measured);
  } catch (const NumericalError& e) {
    a.error = e.what();
  }
  return a;
}

std::vector<SweepPoint> pump_sweep(const PumpModel& pump, const DetectorModel& det, std::uint64_t n_gates,
                                   const SweepOptions& options) {
  validate(pump);
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < pump.powers_uW.size(); ++i) {
    const double power = pump.powers_uW[i];
    const PairSource pairs{pump.pairs_per_uW * power, pump.statistics};
    const SourceSpec source{pairs, sufficient_cutoff(pairs)};
    const auto acq = simulate_acquisition(source, det, n_gates, options.bins,
                                          {rng::derive_seed(options.seed, i), options.shards});
    const auto analysis = analyze_histogram(acq.histogram, options.analysis);
    if (!analysis.gamma) {
      throw FitError("pump power " + std::to_string(power) + " uW: " + analysis.error.value_or("analysis failed"));
    }
    out.push_back({power, pairs.mean_pairs, *analysis.gamma});
  }
  return out;
}

}  // namespace photocount
