#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wotlab/config.hpp"
#include "wotlab/errors.hpp"
#include "wotlab/experiments.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::optional<long long> seed;
  std::string out_dir;
  bool dry_run = false;
  std::string only;
};

void add_common_options(CLI::App* sub, CliArgs& args) {
  sub->add_option("--config", args.config_path, "path to a TOML config file")
      ->required();
  sub->add_option("--seed", args.seed, "override the config seed");
  sub->add_option("--out", args.out_dir, "override the output directory");
  sub->add_flag("--dry-run", args.dry_run,
                "validate and echo the config without running");
  sub->add_option("--only", args.only,
                  "restrict to matching runs or check suites");
}

int run(const std::string& experiment, const CliArgs& args) {
  wotlab::ExperimentConfig config =
      wotlab::load_experiment_config(args.config_path);
  if (config.experiment != experiment) {
    throw wotlab::ConfigError("config declares experiment '" +
                              config.experiment + "' but subcommand is '" +
                              experiment + "'");
  }
  if (args.seed.has_value()) {
    if (*args.seed < 0) throw wotlab::ConfigError("--seed must be >= 0");
    config.seed = static_cast<std::uint64_t>(*args.seed);
    config.trainer.seed = config.seed;
  }
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.dry_run) config.dry_run = true;
  if (!args.only.empty()) config.only = args.only;

  const wotlab::ExperimentReport report = wotlab::run_experiment(config);
  std::printf("[wotlab] experiment=%s out=%s\n", report.experiment.c_str(),
              config.out_dir.c_str());
  for (const auto& [name, value] : report.metrics) {
    std::printf("[wotlab]   %s = %.6g\n", name.c_str(), value);
  }
  if (config.dry_run) std::printf("[wotlab]   dry run: config echoed only\n");
  std::printf("[wotlab] exit_code=%d wall_time_s=%.1f\n", report.exit_code,
              report.wall_time_s);
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wotlab: a numerical laboratory for weak optimal transport "
               "with kernel costs"};
  app.set_version_flag("--version", wotlab::kWotlabVersion);
  app.require_subcommand(1);

  CliArgs args;
  const std::pair<const char*, const char*> subcommands[] = {
      {"toy1d", "discrete and neural solutions of a 1D pair"},
      {"toy2d", "neural training run on a 2D pair"},
      {"fake_demo", "fake-solution demonstration across costs"},
      {"gamma_sweep", "discrete plan statistics across gamma"},
      {"dwot_solve", "one discrete weak-transport solve"},
      {"checks", "batch verification suites"},
  };
  for (const auto& [name, desc] : subcommands) {
    add_common_options(app.add_subcommand(name, desc), args);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), args);
  } catch (const wotlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const wotlab::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
