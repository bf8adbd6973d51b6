#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "photocount/acquisition.hpp"
#include "photocount/analysis.hpp"
#include "photocount/channel.hpp"
#include "photocount/distribution.hpp"
#include "photocount/nonclassicality.hpp"
#include "photocount/peak_fit.hpp"

namespace photocount {

using Json = nlohmann::ordered_json;

/// Version stamped into every JSON document this library writes.
inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);
double parse_double(std::string_view text);

Json to_json(const SourceSpec& s);
SourceSpec source_from_json(const Json& j);
Json to_json(const DetectorModel& d);
DetectorModel detector_from_json(const Json& j);
Json to_json(const PumpModel& p);
PumpModel pump_from_json(const Json& j);

Json to_json(const GammaReport& r);
GammaReport gamma_report_from_json(const Json& j);
Json to_json(const ParityReport& r);
ParityReport parity_report_from_json(const Json& j);
Json to_json(const NegativityReport& r);
NegativityReport negativity_report_from_json(const Json& j);
Json to_json(const PeakFitResult& r);
PeakFitResult peak_fit_from_json(const Json& j);
Json to_json(const Analysis& a);

/// `n,probability` lines after a header of the same name.
std::string distribution_to_csv(const PhotonDistribution& d);
PhotonDistribution distribution_from_csv(std::string_view text,
                                         PhotonDistribution::Sign sign = PhotonDistribution::Sign::signed_values);

/// Dense row-major matrix, one row per line.
std::string matrix_to_csv(const TransferMatrix& m);

/// `bin_center,count` lines after a header of the same name.
std::string histogram_to_csv(const AreaHistogram& h);
/// Rebuilds edges from the centers (midpoints, ends extrapolated), or exactly
/// from the sidecar's lo/hi when the centers are uniform. When no sidecar is
/// given, n_gates is the binned total and overflow is zero.
AreaHistogram histogram_from_csv(std::string_view text, const std::optional<Json>& sidecar = std::nullopt);
/// n_gates, overflow and range of the histogram, plus caller extras.
Json histogram_sidecar(const AreaHistogram& h);

std::string sweep_to_csv(const std::vector<SweepPoint>& points);

std::string read_file(const std::filesystem::path& path);
/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace photocount
