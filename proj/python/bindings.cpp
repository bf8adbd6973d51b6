#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "photocount/analysis.hpp"
#include "photocount/channel.hpp"
#include "photocount/distribution.hpp"
#include "photocount/error.hpp"
#include "photocount/io.hpp"
#include "photocount/nonclassicality.hpp"
#include "photocount/peak_fit.hpp"

namespace py = pybind11;
using namespace photocount;

namespace {

std::vector<double> as_vector(const PhotonDistribution& d) { return {d.probs().begin(), d.probs().end()}; }

void bind_distributions(py::module_& m) {
  py::enum_<PairStatistics>(m, "PairStatistics")
      .value("poissonian", PairStatistics::poissonian)
      .value("thermal", PairStatistics::thermal);

  py::class_<PhotonDistribution>(m, "PhotonDistribution")
      .def(py::init([](std::vector<double> probs, bool signed_values) {
             return PhotonDistribution(std::move(probs), signed_values ? PhotonDistribution::Sign::signed_values
                                                                       : PhotonDistribution::Sign::physical);
           }),
           py::arg("probs"), py::arg("signed_values") = false)
      .def_property_readonly("probs", &as_vector)
      .def_property_readonly("cutoff", &PhotonDistribution::cutoff)
      .def_property_readonly("is_physical", &PhotonDistribution::is_physical)
      .def("sum", &PhotonDistribution::sum)
      .def("__len__", &PhotonDistribution::size)
      .def("__getitem__", [](const PhotonDistribution& d, std::size_t n) {
        if (n >= d.size()) throw py::index_error();
        return d[n];
      })
      .def("__repr__", [](const PhotonDistribution& d) {
        return "<PhotonDistribution cutoff=" + std::to_string(d.cutoff()) + ">";
      });

  py::class_<SourceSpec>(m, "SourceSpec")
      .def_readwrite("cutoff", &SourceSpec::cutoff)
      .def("to_json", [](const SourceSpec& s) { return to_json(s).dump(); });

  m.def("poisson_source", [](double mean, int cutoff) { return SourceSpec{PoissonSource{mean}, cutoff}; },
        py::arg("mean"), py::arg("cutoff") = 10);
  m.def("pdc_source",
        [](double mean_pairs, PairStatistics s, int cutoff) { return SourceSpec{PairSource{mean_pairs, s}, cutoff}; },
        py::arg("mean_pairs"), py::arg("statistics") = PairStatistics::poissonian, py::arg("cutoff") = 10);
  m.def("fock_source", [](int n, int cutoff) { return SourceSpec{FockSource{n}, cutoff}; }, py::arg("n"),
        py::arg("cutoff") = 10);
  m.def("_source_from_json", [](const std::string& text) { return source_from_json(Json::parse(text)); });
  m.def("make_distribution", &make_distribution);
  m.def("mean_photon_number", &mean_photon_number);
  m.def("parity_expectation", &parity_expectation);
}

void bind_channel(py::module_& m) {
  py::class_<TransferMatrix>(m, "TransferMatrix")
      .def_property_readonly("entries", &TransferMatrix::entries)
      .def_property_readonly("eta", &TransferMatrix::eta)
      .def_property_readonly("dark_mean", &TransferMatrix::dark_mean)
      .def_property_readonly("cutoff", &TransferMatrix::cutoff);

  m.def("binomial_loss_matrix", &binomial_loss_matrix, py::arg("eta"), py::arg("cutoff") = 10);
  m.def("dark_convolution_matrix", &dark_convolution_matrix, py::arg("dark_mean"), py::arg("cutoff") = 10);
  m.def("compose", &compose, py::arg("outer"), py::arg("inner"));
  m.def("detector_matrix", [](double eta, double dark_mean, int cutoff) { return detector_matrix(eta, dark_mean, cutoff); },
        py::arg("eta"), py::arg("dark_mean"), py::arg("cutoff") = 10);
  m.def(
      "apply_channel",
      [](const TransferMatrix& t, const PhotonDistribution& p, double max_leakage) {
        auto out = apply_channel(t, p, max_leakage);
        return py::make_tuple(out.detected, out.leakage);
      },
      py::arg("matrix"), py::arg("distribution"), py::arg("max_leakage") = kMaxTruncatedMass);

  py::class_<Reconstruction>(m, "Reconstruction")
      .def_readonly("distribution", &Reconstruction::distribution)
      .def_readonly("condition_number", &Reconstruction::condition_number)
      .def_readonly("warning", &Reconstruction::warning);
  m.def("invert_channel", &invert_channel, py::arg("matrix"), py::arg("detected"),
        py::arg("condition_limit") = kDefaultConditionLimit);

  py::class_<NegativityReport>(m, "NegativityReport")
      .def_readonly("most_negative", &NegativityReport::most_negative)
      .def_readonly("most_negative_index", &NegativityReport::most_negative_index)
      .def_readonly("negative_mass", &NegativityReport::negative_mass)
      .def_readonly("sum_deviation", &NegativityReport::sum_deviation)
      .def_readonly("negative_indices", &NegativityReport::negative_indices);
  m.def("truncation_diagnostics", &truncation_diagnostics);
}

void bind_statistics(py::module_& m) {
  py::class_<GammaReport>(m, "GammaReport")
      .def_readonly("gamma", &GammaReport::gamma)
      .def_readonly("std_error", &GammaReport::std_error)
      .def_readonly("n_std_above_classical", &GammaReport::n_std_above_classical)
      .def_readonly("classical_bound", &GammaReport::classical_bound)
      .def_readonly("violated", &GammaReport::violated);
  py::class_<ParityReport>(m, "ParityReport")
      .def_readonly("p_even", &ParityReport::p_even)
      .def_readonly("p_odd", &ParityReport::p_odd)
      .def_readonly("parity", &ParityReport::parity)
      .def_readonly("nonclassical", &ParityReport::nonclassical);
  py::class_<OracleResult>(m, "OracleResult")
      .def_readonly("max_gamma", &OracleResult::max_gamma)
      .def_readonly("best_single_mean", &OracleResult::best_single_mean)
      .def_readonly("best_single_gamma", &OracleResult::best_single_gamma)
      .def_readonly("best_mixture_gamma", &OracleResult::best_mixture_gamma);

  m.def("gamma", py::overload_cast<const PhotonDistribution&>(&gamma));
  m.def("gamma_from_probabilities", py::overload_cast<double, double, double>(&gamma), py::arg("p1"), py::arg("p2"),
        py::arg("p3"));
  m.def("classical_gamma_bound", &classical_gamma_bound);
  m.def("threshold_efficiency", &threshold_efficiency);
  m.def("gamma_significance",
        [](std::uint64_t n1, std::uint64_t n2, std::uint64_t n3) { return gamma_significance({n1, n2, n3, {}}); });
  m.def("eta_from_ratio", &eta_from_ratio, py::arg("p1"), py::arg("p2"));
  m.def("gamma_under_loss", &gamma_under_loss, py::arg("eta"));
  m.def("parity_test", &parity_test);
  m.def(
      "poisson_mixture_oracle",
      [](std::vector<double> grid, std::size_t trials, std::uint64_t seed) {
        OracleOptions o;
        o.weights_trials = trials;
        o.seed = seed;
        return poisson_mixture_oracle(grid, o);
      },
      py::arg("grid"), py::arg("weights_trials"), py::arg("seed"));
}

void bind_acquisition(py::module_& m) {
  py::class_<DetectorModel>(m, "DetectorModel")
      .def(py::init<>())
      .def_readwrite("eta", &DetectorModel::eta)
      .def_readwrite("dark_mean", &DetectorModel::dark_mean)
      .def_readwrite("gain", &DetectorModel::gain)
      .def_readwrite("offset", &DetectorModel::offset)
      .def_readwrite("sigma0", &DetectorModel::sigma0)
      .def_readwrite("sigma_per_photon", &DetectorModel::sigma_per_photon)
      .def_readwrite("adc_max", &DetectorModel::adc_max);

  py::class_<AreaHistogram>(m, "AreaHistogram")
      .def_readonly("bin_edges", &AreaHistogram::bin_edges)
      .def_readonly("counts", &AreaHistogram::counts)
      .def_readonly("n_gates", &AreaHistogram::n_gates)
      .def_readonly("overflow", &AreaHistogram::overflow)
      .def("to_csv", &histogram_to_csv);
  m.def("histogram_from_csv", [](const std::string& text) { return histogram_from_csv(text); });

  m.def(
      "simulate_acquisition",
      [](const SourceSpec& source, const DetectorModel& det, std::uint64_t n_gates, std::size_t bins,
         std::uint64_t seed, unsigned shards) {
        auto acq = simulate_acquisition(source, det, n_gates, bins, {seed, shards});
        return py::make_tuple(acq.histogram, acq.detected_tally);
      },
      py::arg("source"), py::arg("detector"), py::arg("n_gates"), py::arg("bins") = 1100, py::arg("seed") = 0,
      py::arg("shards") = 1);

  py::class_<PeakGuess>(m, "PeakGuess")
      .def_readonly("center", &PeakGuess::center)
      .def_readonly("width", &PeakGuess::width)
      .def_readonly("height", &PeakGuess::height);
  py::class_<FittedPeak>(m, "FittedPeak")
      .def_readonly("photon_number", &FittedPeak::photon_number)
      .def_readonly("center", &FittedPeak::center)
      .def_readonly("width", &FittedPeak::width)
      .def_readonly("area", &FittedPeak::area)
      .def_readonly("area_std_error", &FittedPeak::area_std_error);
  py::class_<PeakFitResult>(m, "PeakFitResult")
      .def_readonly("peaks", &PeakFitResult::peaks)
      .def_readonly("residual_norm", &PeakFitResult::residual_norm)
      .def_readonly("converged", &PeakFitResult::converged)
      .def_readonly("warnings", &PeakFitResult::warnings);
  m.def("detect_peaks", [](const AreaHistogram& h) { return detect_peaks(h); });
  m.def("fit_peaks", [](const AreaHistogram& h, const std::vector<PeakGuess>& g) { return fit_peaks(h, g); });
  m.def("areas_to_probabilities", [](const PeakFitResult& fit) {
    auto m = areas_to_probabilities(fit);
    return py::make_tuple(m.distribution, m.counts);
  });
  m.def("_analyze_histogram_json", [](const AreaHistogram& h, int cutoff) {
    AnalysisOptions o;
    o.cutoff = cutoff;
    return to_json(analyze_histogram(h, o)).dump();
  });

  m.def(
      "pump_sweep",
      [](std::vector<double> powers, double pairs_per_uW, const DetectorModel& det, std::uint64_t n_gates,
         std::uint64_t seed) {
        PumpModel pump{std::move(powers), pairs_per_uW, PairStatistics::poissonian};
        SweepOptions o;
        o.seed = seed;
        py::list rows;
        for (const auto& p : pump_sweep(pump, det, n_gates, o)) rows.append(py::make_tuple(p.power_uW, p.gamma));
        return rows;
      },
      py::arg("powers_uW"), py::arg("pairs_per_uW"), py::arg("detector"), py::arg("n_gates"), py::arg("seed"));
}

}  // namespace

PYBIND11_MODULE(_photocount, m) {
  m.doc() = "Photon-number statistics, loss inversion and nonclassicality tests";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TruncationError>(m, "TruncationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);

  bind_distributions(m);
  bind_channel(m);
  bind_statistics(m);
  bind_acquisition(m);
}
