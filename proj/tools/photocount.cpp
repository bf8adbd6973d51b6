// Command-line front end: simulate, analyze, reconstruct, sweep.
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "photocount/error.hpp"
#include "photocount/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool strict = false;
  std::optional<unsigned> shards;
  std::string input;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  auto* opt = cmd->add_option("--config", args.config, "JSON run-config");
  if (needs_config) opt->required();
  cmd->add_option("--seed", args.seed, "Random seed (overrides the config)");
  cmd->add_option("--out", args.out, "Output directory (overrides the config)");
  cmd->add_flag("--strict", args.strict, "Escalate numerical warnings to exit code 4");
  cmd->add_option("--shards", args.shards, "Simulator threads; outputs do not depend on it");
}

photocount::RunConfig resolve(const CommonArgs& args) {
  auto config = args.config.empty() ? photocount::config_from_json(photocount::Json::object())
                                    : photocount::load_config(args.config);
  if (args.seed) config.seed = *args.seed;
  if (!args.out.empty()) config.output_dir = args.out;
  if (args.shards) config.shards = *args.shards;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-number statistics: simulate, analyze, reconstruct, sweep"};
  app.require_subcommand(1);
  CommonArgs args;

  auto* simulate = app.add_subcommand("simulate", "Simulate gated acquisition into a pulse-area histogram");
  add_common(simulate, args, true);
  auto* analyze = app.add_subcommand("analyze", "Fit a histogram CSV and test it against the classical bound");
  add_common(analyze, args, false);
  analyze->add_option("--input", args.input, "Histogram CSV (bin_center,count)")->required();
  auto* reconstruct = app.add_subcommand("reconstruct", "Invert the detector channel on analyzed probabilities");
  add_common(reconstruct, args, true);
  reconstruct->add_option("--input", args.input, "analysis.json from the analyze command")->required();
  auto* sweep = app.add_subcommand("sweep", "Gamma versus pump power");
  add_common(sweep, args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << photocount::error_json("usage_error", e.what());
    return photocount::kExitConfig;
  }

  try {
    const auto config = resolve(args);
    photocount::CommandResult result;
    if (*simulate) {
      result = photocount::cmd_simulate(config, config.output_dir, args.strict);
    } else if (*analyze) {
      result = photocount::cmd_analyze(args.input, config, config.output_dir, args.strict);
    } else if (*reconstruct) {
      result = photocount::cmd_reconstruct(args.input, config, config.output_dir, args.strict);
    } else {
      result = photocount::cmd_sweep(config, config.output_dir, args.strict);
    }
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& p : result.written) std::cout << p.string() << "\n";
    return result.exit_code;
  } catch (const photocount::ConfigError& e) {
    std::cerr << photocount::error_json("config_error", e.what());
    return photocount::kExitConfig;
  } catch (const photocount::TruncationError& e) {
    std::cerr << photocount::error_json("truncation_error", e.what());
    return photocount::kExitConfig;
  } catch (const photocount::Error& e) {
    std::cerr << photocount::error_json("analysis_error", e.what());
    return photocount::kExitFit;
  } catch (const std::exception& e) {
    std::cerr << photocount::error_json("io_error", e.what());
    return photocount::kExitConfig;
  }
}
