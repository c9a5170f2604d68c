#pragma once
// Experiment configuration: parsing and validation of the TOML config files
// driving the CLI, plus the canonical JSON echo embedded in reports.

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "wotlab/cost.hpp"
#include "wotlab/dist.hpp"
#include "wotlab/dwot.hpp"
#include "wotlab/not_trainer.hpp"

namespace wotlab {

inline constexpr const char* kWotlabVersion = "wotlab 1.0.0";

struct ExperimentConfig {
  std::string experiment;  // toy1d, toy2d, fake_demo, gamma_sweep, dwot_solve, checks
  std::optional<DistributionSpec> source;
  std::optional<DistributionSpec> target;
  WeakCostSpec cost;
  NotConfig trainer;  // trainer.cost/seed mirror the top-level settings
  FwConfig solver;
  int n_samples = 4096;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::vector<double> sweep_gammas = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  bool dry_run = false;   // CLI flag: echo the config, run nothing
  std::string only;       // CLI flag: restrict to one named run/suite
};

// Throws ConfigError on unknown keys, missing required sections for the
// chosen experiment, or invalid values.
ExperimentConfig parse_experiment_config(const nlohmann::ordered_json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical echo of the effective configuration (defaults filled in).
nlohmann::ordered_json config_echo(const ExperimentConfig& config);

}  // namespace wotlab
