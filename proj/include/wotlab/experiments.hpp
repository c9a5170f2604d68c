#pragma once
// Experiment runners behind the CLI subcommands. Each runner executes one
// configured experiment, writes its artifacts (metrics.csv, trace CSVs, SVG
// panels, report.json) into config.out_dir, and returns a report. All
// numeric artifacts are deterministic functions of the configuration.

#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "wotlab/config.hpp"

namespace wotlab {

struct ExperimentReport {
  std::string experiment;
  nlohmann::ordered_json config;
  std::vector<std::pair<std::string, double>> metrics;  // all finite
  std::vector<std::string> artifacts;  // file names relative to out_dir
  double wall_time_s = 0.0;
  std::string version = kWotlabVersion;
  nlohmann::ordered_json extra;  // verdicts, outcomes, failure notes
  int exit_code = 0;  // 0 ok, 1 check/convergence failure, 3 divergence
};

// Dispatches on config.experiment; creates out_dir, runs, writes report.json
// last. Throws ConfigError for unusable configurations; divergence inside a
// run is caught and recorded (exit_code 3).
ExperimentReport run_experiment(const ExperimentConfig& config);

// 95th percentile of the unbiased MMD^2 between two independent fresh
// batches of `target` (the "same distribution" reference scale).
double mmd_baseline(const DistributionSpec& target, int n,
                    const KernelSpec& kernel, std::uint64_t seed,
                    int resamples = 200);

void write_report(const ExperimentReport& report, const std::string& out_dir);

}  // namespace wotlab
