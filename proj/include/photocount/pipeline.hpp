#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "photocount/acquisition.hpp"
#include "photocount/channel.hpp"
#include "photocount/io.hpp"
#include "photocount/peak_fit.hpp"

namespace photocount {

/// Everything a CLI run needs; parsed from the JSON run-config.
struct RunConfig {
  std::optional<SourceSpec> source;
  DetectorModel detector;
  std::optional<PumpModel> pump;
  std::uint64_t n_gates = 1'000'000;
  /// Analysis and reconstruction cutoff.
  int cutoff = 10;
  /// Mandatory for simulate and sweep; there is no clock-based default.
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = ".";
  std::size_t bins = 1100;
  unsigned shards = 1;
  FitOptions fit;
  DarkOrder dark_order = DarkOrder::after_loss;
  double condition_limit = kDefaultConditionLimit;
};

RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::filesystem::path& path);

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitFit = 3, kExitStrict = 4 };

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

/// Writes histogram.csv and its histogram.json sidecar (gate tally included).
CommandResult cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir, bool strict);

/// Reads a histogram CSV (and `<stem>.json` beside it when present) and
/// writes analysis.json.
CommandResult cmd_analyze(const std::filesystem::path& histogram_csv, const RunConfig& config,
                          const std::filesystem::path& out_dir, bool strict);

/// Inverts the detector channel against the probabilities in analysis.json;
/// writes reconstruction.csv and negativity.json.
CommandResult cmd_reconstruct(const std::filesystem::path& analysis_json, const RunConfig& config,
                              const std::filesystem::path& out_dir, bool strict);

/// Writes sweep.csv.
CommandResult cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir, bool strict);

/// Machine-readable error document for the error stream.
std::string error_json(const std::string& kind, const std::string& message);

}  // namespace photocount
