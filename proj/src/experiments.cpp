#include "wotlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "wotlab/checks.hpp"
#include "wotlab/csv.hpp"
#include "wotlab/dwot.hpp"
#include "wotlab/errors.hpp"
#include "wotlab/gaussian_oracle.hpp"
#include "wotlab/linear_ot.hpp"
#include "wotlab/not_trainer.hpp"
#include "wotlab/rng.hpp"
#include "wotlab/svg.hpp"

namespace wotlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t index = 0) {
  return Rng::stream(seed, purpose, index).next_u64();
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void push_metric(ExperimentReport& report, const std::string& name,
                 double value) {
  if (std::isfinite(value)) {
    report.metrics.emplace_back(name, value);
  } else {
    report.extra["omitted_metrics"].push_back(name);
  }
}

double median_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<double> trailing_mmd(const std::vector<TrainRecord>& records,
                                 std::size_t count = 20) {
  std::vector<double> out;
  const std::size_t start =
      records.size() > count ? records.size() - count : 0;
  for (std::size_t i = start; i < records.size(); ++i) {
    out.push_back(records[i].mmd_sq);
  }
  return out;
}

void write_train_trace_csv(const std::string& path, const TrainTrace& trace) {
  std::vector<std::vector<CsvCell>> rows;
  rows.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    rows.push_back({CsvCell{static_cast<long>(r.iter)}, CsvCell{r.mmd_sq},
                    CsvCell{r.barycentric_error}, CsvCell{r.t_loss},
                    CsvCell{r.f_value}});
  }
  write_csv(path, {"iter", "mmd_sq", "barycentric_error", "t_loss", "f_value"},
            rows);
}

void write_fw_trace_csv(const std::string& path,
                        const std::vector<FwTraceRow>& trace) {
  std::vector<std::vector<CsvCell>> rows;
  rows.reserve(trace.size());
  for (const auto& r : trace) {
    rows.push_back({CsvCell{static_cast<long>(r.iter)}, CsvCell{r.objective},
                    CsvCell{r.gap}, CsvCell{r.step}});
  }
  write_csv(path, {"iter", "objective", "gap", "step"}, rows);
}

// Closed-form conditional-mean oracle: available when both marginals are
// diagonal Gaussians, the kernel is bilinear (the quadratic cost), and the
// pair is comparable in the projection's sense.
std::optional<RestrictedPotentialQuadratic> quadratic_oracle(
    const DistributionSpec& source, const DistributionSpec& target,
    const WeakCostSpec& cost) {
  if (!std::holds_alternative<Bilinear>(cost.kernel)) return std::nullopt;
  const auto* p = std::get_if<Gaussian>(&source);
  const auto* q = std::get_if<Gaussian>(&target);
  if (p == nullptr || q == nullptr) return std::nullopt;
  try {
    return projection_gaussian(*p, *q, cost.gamma).potential;
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

std::string verdict_for(const DistributionSpec& source,
                        const DistributionSpec& target, double gamma) {
  const auto* p = std::get_if<Gaussian>(&source);
  const auto* q = std::get_if<Gaussian>(&target);
  if (p == nullptr || q == nullptr) return "NOT_APPLICABLE";
  try {
    return verdict_name(fake_solution_diagnostic(*p, *q, gamma).verdict);
  } catch (const std::domain_error&) {
    return "NOT_APPLICABLE";
  }
}

struct TrainStats {
  double baseline = 0.0;
  double final_mmd = 0.0;
  double trailing_median = 0.0;
  double trailing_std = 0.0;
  double final_bary = std::numeric_limits<double>::quiet_NaN();
};

TrainStats summarize_training(const TrainTrace& trace, double baseline) {
  TrainStats stats;
  stats.baseline = baseline;
  const std::vector<double> tail = trailing_mmd(trace.records);
  stats.trailing_median = median_of(tail);
  stats.trailing_std = sample_std(tail);
  if (!trace.records.empty()) {
    stats.final_mmd = trace.records.back().mmd_sq;
    stats.final_bary = trace.records.back().barycentric_error;
  }
  return stats;
}

// MMD^2 of the trained map's pushforward against the target. A single
// U-statistic at eval_n carries multiplicative noise of the same order as
// the same-distribution baseline, which would dominate the final-vs-baseline
// ratio; the median of five independent evaluations measures the map rather
// than the draw.
double final_map_mmd(const MlpNet& t_net, const DistributionSpec& source,
                     const DistributionSpec& target, const NotConfig& trainer,
                     std::uint64_t seed) {
  const DistributionSpec latent = latent_spec(trainer);
  const KernelSpec eval_kernel{DistanceInduced{1.0}};
  std::vector<double> values;
  values.reserve(5);
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd xs =
        sample(source, trainer.eval_n, derive_seed(seed, "fx", rep)).points;
    const Eigen::MatrixXd pushed =
        map_samples(t_net, xs, 1, latent, derive_seed(seed, "fz", rep))
            .outputs;
    const Eigen::MatrixXd ys =
        sample(target, trainer.eval_n, derive_seed(seed, "fy", rep)).points;
    values.push_back(mmd_squared(eval_kernel, pushed, ys, MmdStatistic::U));
  }
  return median_of(values);
}

void push_train_metrics(ExperimentReport& report, const std::string& prefix,
                        const TrainStats& stats) {
  const std::string p = prefix.empty() ? "" : prefix + "_";
  push_metric(report, p + "final_mmd_sq", stats.final_mmd);
  push_metric(report, p + "final_mmd_ratio",
              stats.baseline > 0.0 ? stats.final_mmd / stats.baseline
                                   : std::numeric_limits<double>::quiet_NaN());
  push_metric(report, p + "trailing_median_mmd_sq", stats.trailing_median);
  push_metric(report, p + "trailing_median_ratio",
              stats.baseline > 0.0
                  ? stats.trailing_median / stats.baseline
                  : std::numeric_limits<double>::quiet_NaN());
  push_metric(report, p + "trailing_std_mmd_sq", stats.trailing_std);
  push_metric(report, p + "final_barycentric_error", stats.final_bary);
}

// Scatter panel of a trained 2D map: target cloud, pushforward cloud, source
// cloud, and conditional barycenters.
void write_map_scatter(const std::string& path, const std::string& title,
                       const Eigen::MatrixXd& source_pts,
                       const Eigen::MatrixXd& pushed_pts,
                       const Eigen::MatrixXd& target_pts,
                       const Eigen::MatrixXd& barycenters) {
  std::vector<ScatterGroup> groups;
  groups.push_back({target_pts, {"#ff7f0e", 2.0, 0.45}, "target"});
  groups.push_back({source_pts, {"#9aa0a6", 1.6, 0.45}, "source"});
  groups.push_back({pushed_pts, {"#1f77b4", 2.0, 0.55}, "map output"});
  groups.push_back({barycenters, {"#d62728", 2.6, 0.9}, "barycenter"});
  PlotAxes axes = auto_axes(groups);
  axes.title = title;
  write_svg_scatter(path, groups, axes);
}

// MMD trajectories (one series per run) plus the flat baseline reference.
void write_mmd_svg(const std::string& path, const std::string& title,
                   const std::vector<std::pair<std::string,
                                               const TrainTrace*>>& runs,
                   double baseline) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#8c564b", "#e377c2"};
  std::vector<LineSeries> series;
  double iter_lo = 0.0, iter_hi = 1.0;
  bool first = true;
  bool all_positive = baseline > 0.0;
  int color = 0;
  for (const auto& [label, trace] : runs) {
    LineSeries s;
    s.x = Eigen::VectorXd(trace->records.size());
    s.y = Eigen::VectorXd(trace->records.size());
    for (std::size_t i = 0; i < trace->records.size(); ++i) {
      s.x(static_cast<Eigen::Index>(i)) = trace->records[i].iter;
      s.y(static_cast<Eigen::Index>(i)) = trace->records[i].mmd_sq;
      if (!(trace->records[i].mmd_sq > 0.0)) all_positive = false;
    }
    if (s.x.size() > 0) {
      if (first) {
        iter_lo = s.x(0);
        iter_hi = s.x(s.x.size() - 1);
        first = false;
      } else {
        iter_lo = std::min(iter_lo, s.x(0));
        iter_hi = std::max(iter_hi, s.x(s.x.size() - 1));
      }
    }
    s.color = kPalette[color++ % 6];
    s.label = label;
    series.push_back(std::move(s));
  }
  {
    LineSeries base;
    base.x = Eigen::VectorXd(2);
    base.x << iter_lo, iter_hi;
    base.y = Eigen::VectorXd::Constant(2, baseline);
    base.color = "#666666";
    base.label = "baseline p95";
    series.push_back(std::move(base));
  }
  PlotAxes axes = auto_axes(series, all_positive);
  axes.title = title;
  axes.x_label = "outer iteration";
  axes.y_label = "MMD^2 (unbiased)";
  write_svg_lines(path, series, axes);
}

// Draws `count` support pairs (x_i, y_j) with probability pi_ij.
Eigen::MatrixXd sample_plan_pairs(const Coupling& plan,
                                  const Eigen::MatrixXd& xs,
                                  const Eigen::MatrixXd& ys, int count,
                                  Rng& rng) {
  const Eigen::Index n = plan.matrix.rows(), m = plan.matrix.cols();
  std::vector<double> cumulative(static_cast<std::size_t>(n * m));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      total += std::max(0.0, plan.matrix(i, j));
      cumulative[static_cast<std::size_t>(i * m + j)] = total;
    }
  }
  Eigen::MatrixXd pairs(count, xs.cols() + ys.cols());
  for (int s = 0; s < count; ++s) {
    const double u = rng.uniform01() * total;
    const auto it =
        std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t flat = std::min(
        static_cast<std::size_t>(it - cumulative.begin()),
        cumulative.size() - 1);
    const Eigen::Index i = static_cast<Eigen::Index>(flat) / m;
    const Eigen::Index j = static_cast<Eigen::Index>(flat) % m;
    pairs.row(s).head(xs.cols()) = xs.row(i);
    pairs.row(s).tail(ys.cols()) = ys.row(j);
  }
  return pairs;
}

Eigen::MatrixXd group_means(const GroupedOutputs& grouped) {
  Eigen::MatrixXd means(grouped.n_inputs, grouped.outputs.cols());
  for (int i = 0; i < grouped.n_inputs; ++i) {
    means.row(i) = grouped.outputs
                       .middleRows(static_cast<Eigen::Index>(i) *
                                       grouped.z_per_x,
                                   grouped.z_per_x)
                       .colwise()
                       .mean();
  }
  return means;
}

// ---------------------------------------------------------------------------
// toy2d: one neural training run on a configured 2D pair.

void run_toy2d(const ExperimentConfig& config, ExperimentReport& report) {
  const DistributionSpec& source = *config.source;
  const DistributionSpec& target = *config.target;
  const auto oracle = quadratic_oracle(source, target, config.cost);

  const TrainResult trained =
      train_not(source, target, config.trainer,
                oracle ? &*oracle : nullptr);
  const double baseline =
      mmd_baseline(target, config.trainer.eval_n, DistanceInduced{1.0},
                   derive_seed(config.seed, "baseline"));

  write_train_trace_csv(join(config.out_dir, "trace.csv"), trained.trace);
  report.artifacts.push_back("trace.csv");

  TrainStats stats = summarize_training(trained.trace, baseline);
  stats.final_mmd =
      final_map_mmd(trained.t_net, source, target, config.trainer, config.seed);
  push_metric(report, "baseline_mmd_sq_p95", baseline);
  push_train_metrics(report, "", stats);
  if (!trained.trace.records.empty()) {
    push_metric(report, "final_t_loss", trained.trace.records.back().t_loss);
    push_metric(report, "final_f_value", trained.trace.records.back().f_value);
  }
  push_metric(report, "eval_records",
              static_cast<double>(trained.trace.records.size()));

  // Scatter panel.
  const int plot_n = std::min(config.n_samples, 1024);
  const DistributionSpec latent = latent_spec(config.trainer);
  const Eigen::MatrixXd xs_plot =
      sample(source, plot_n, derive_seed(config.seed, "plot_x")).points;
  const Eigen::MatrixXd pushed =
      map_samples(trained.t_net, xs_plot, 1, latent,
                  derive_seed(config.seed, "plot_z"))
          .outputs;
  const Eigen::MatrixXd ys_plot =
      sample(target, plot_n, derive_seed(config.seed, "plot_y")).points;
  const int bary_n = std::min(plot_n, 256);
  const Eigen::MatrixXd bary = group_means(
      map_samples(trained.t_net, xs_plot.topRows(bary_n), 16, latent,
                  derive_seed(config.seed, "plot_bz")));
  write_map_scatter(join(config.out_dir, "scatter.svg"),
                    "trained map (" + kernel_name(config.cost.kernel) +
                        ", gamma " + format_double(config.cost.gamma) + ")",
                    xs_plot, pushed, ys_plot, bary);
  report.artifacts.push_back("scatter.svg");

  write_mmd_svg(join(config.out_dir, "mmd.svg"), "MMD^2 trajectory",
                {{"run", &trained.trace}}, baseline);
  report.artifacts.push_back("mmd.svg");

  report.extra["verdict"] = verdict_for(source, target, config.cost.gamma);
  if (oracle) {
    const auto* p = std::get_if<Gaussian>(&source);
    const auto* q = std::get_if<Gaussian>(&target);
    push_metric(report, "w2_gamma_value",
                w2_gamma_squared_gaussian(*p, *q, config.cost.gamma));
  }
}

// ---------------------------------------------------------------------------
// fake_demo: the bilinear gamma panel plus the characteristic-kernel fix.

void run_fake_demo(const ExperimentConfig& config, ExperimentReport& report) {
  struct DemoRun {
    std::string name;
    KernelSpec kernel;
    double gamma;
  };
  const std::vector<DemoRun> all_runs = {
      {"bilinear_g050", Bilinear{}, 0.5},
      {"bilinear_g075", Bilinear{}, 0.75},
      {"bilinear_g100", Bilinear{}, 1.0},
      {"distance_g100", DistanceInduced{1.0}, 1.0},
  };
  std::vector<DemoRun> runs;
  for (const auto& run : all_runs) {
    if (config.only.empty() ||
        run.name.find(config.only) != std::string::npos) {
      runs.push_back(run);
    }
  }
  if (runs.empty()) {
    throw ConfigError("--only '" + config.only +
                      "' matches no fake_demo run (available: bilinear_g050, "
                      "bilinear_g075, bilinear_g100, distance_g100)");
  }

  const DistributionSpec& source = *config.source;
  const DistributionSpec& target = *config.target;
  const double baseline =
      mmd_baseline(target, config.trainer.eval_n, DistanceInduced{1.0},
                   derive_seed(config.seed, "baseline"));
  push_metric(report, "baseline_mmd_sq_p95", baseline);

  std::vector<std::pair<std::string, TrainTrace>> traces;
  const DistributionSpec latent = latent_spec(config.trainer);
  for (const auto& run : runs) {
    NotConfig trainer = config.trainer;
    trainer.cost = WeakCostSpec{run.kernel, run.gamma};
    trainer.seed = derive_seed(config.seed, run.name);
    const auto oracle = quadratic_oracle(source, target, trainer.cost);

    report.extra["verdicts"][run.name] =
        verdict_for(source, target, run.gamma);
    TrainResult trained;
    try {
      trained = train_not(source, target, trainer, oracle ? &*oracle : nullptr);
    } catch (const DivergenceError& e) {
      report.extra["divergence"][run.name] = e.what();
      report.exit_code = 3;
      continue;
    }

    const std::string trace_name = "trace_" + run.name + ".csv";
    write_train_trace_csv(join(config.out_dir, trace_name), trained.trace);
    report.artifacts.push_back(trace_name);

    TrainStats stats = summarize_training(trained.trace, baseline);
    stats.final_mmd =
        final_map_mmd(trained.t_net, source, target, trainer, trainer.seed);
    push_train_metrics(report, run.name, stats);
    const double ratio = baseline > 0.0 ? stats.final_mmd / baseline
                                        : std::numeric_limits<double>::infinity();
    report.extra["outcomes"][run.name] =
        ratio <= 3.0 ? "learned" : (ratio >= 5.0 ? "failed" : "ambiguous");

    const int plot_n = std::min(config.n_samples, 1024);
    const Eigen::MatrixXd xs_plot =
        sample(source, plot_n, derive_seed(config.seed, "plot_x")).points;
    const Eigen::MatrixXd pushed =
        map_samples(trained.t_net, xs_plot, 1, latent,
                    derive_seed(trainer.seed, "plot_z"))
            .outputs;
    const Eigen::MatrixXd ys_plot =
        sample(target, plot_n, derive_seed(config.seed, "plot_y")).points;
    const int bary_n = std::min(plot_n, 256);
    const Eigen::MatrixXd bary = group_means(
        map_samples(trained.t_net, xs_plot.topRows(bary_n), 16, latent,
                    derive_seed(trainer.seed, "plot_bz")));
    const std::string scatter_name = "scatter_" + run.name + ".svg";
    write_map_scatter(join(config.out_dir, scatter_name),
                      run.name + " (verdict " +
                          verdict_for(source, target, run.gamma) + ")",
                      xs_plot, pushed, ys_plot, bary);
    report.artifacts.push_back(scatter_name);
    traces.emplace_back(run.name, std::move(trained.trace));
  }

  std::vector<std::pair<std::string, const TrainTrace*>> views;
  views.reserve(traces.size());
  for (const auto& [name, trace] : traces) views.emplace_back(name, &trace);
  if (!views.empty()) {
    write_mmd_svg(join(config.out_dir, "mmd_trajectories.svg"),
                  "MMD^2 trajectories across costs", views, baseline);
    report.artifacts.push_back("mmd_trajectories.svg");
  }
}

// ---------------------------------------------------------------------------
// toy1d: discrete solver vs neural map on the same 1D pair.

struct GridProfile {
  Eigen::VectorXd centers;
  Eigen::VectorXd mass;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

GridProfile aggregate_profile(const Eigen::VectorXd& xs,
                              const Eigen::VectorXd& means,
                              const Eigen::VectorXd& variances,
                              const Eigen::VectorXd& weights, double lo,
                              double hi, int cells) {
  GridProfile grid;
  grid.centers = Eigen::VectorXd(cells);
  grid.mass = Eigen::VectorXd::Zero(cells);
  grid.mean = Eigen::VectorXd::Zero(cells);
  grid.variance = Eigen::VectorXd::Zero(cells);
  const double width = (hi - lo) / cells;
  for (int c = 0; c < cells; ++c) grid.centers(c) = lo + (c + 0.5) * width;
  Eigen::VectorXd second = Eigen::VectorXd::Zero(cells);
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    int cell = static_cast<int>((xs(i) - lo) / width);
    cell = std::clamp(cell, 0, cells - 1);
    grid.mass(cell) += weights(i);
    grid.mean(cell) += weights(i) * means(i);
    second(cell) += weights(i) * (variances(i) + means(i) * means(i));
  }
  for (int c = 0; c < cells; ++c) {
    if (grid.mass(c) > 0.0) {
      grid.mean(c) /= grid.mass(c);
      grid.variance(c) =
          std::max(0.0, second(c) / grid.mass(c) - grid.mean(c) * grid.mean(c));
    }
  }
  return grid;
}

void run_toy1d(const ExperimentConfig& config, ExperimentReport& report) {
  const DistributionSpec& source = *config.source;
  const DistributionSpec& target = *config.target;
  const int n = config.n_samples;

  const Eigen::MatrixXd xs =
      sample(source, n, derive_seed(config.seed, "dot_x")).points;
  const Eigen::MatrixXd ys =
      sample(target, n, derive_seed(config.seed, "dot_y")).points;
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(n, 1.0 / n);

  const FwResult fw =
      solve_frank_wolfe(config.cost, xs, ys, p, q, config.solver);
  write_fw_trace_csv(join(config.out_dir, "fw_trace.csv"), fw.trace);
  report.artifacts.push_back("fw_trace.csv");
  push_metric(report, "fw_objective", wot_objective(config.cost, xs, ys, fw.plan));
  push_metric(report, "fw_final_gap", fw.final_gap);
  push_metric(report, "fw_converged", fw.converged ? 1.0 : 0.0);
  push_metric(report, "fw_iters", static_cast<double>(fw.trace.size()));
  if (!fw.converged) {
    report.exit_code = 1;
    report.extra["failure"] =
        "discrete solver did not reach its duality-gap tolerance";
  }

  const TrainResult trained = train_not(source, target, config.trainer, nullptr);
  write_train_trace_csv(join(config.out_dir, "trace.csv"), trained.trace);
  report.artifacts.push_back("trace.csv");
  push_metric(report, "final_mmd_sq",
              final_map_mmd(trained.t_net, source, target, config.trainer,
                            config.seed));

  // Conditional profiles of both plans, aggregated on a shared grid.
  const int cells = 50;
  const Eigen::VectorXd xs_vec = xs.col(0);
  const Eigen::VectorXd ys_vec = ys.col(0);
  const double lo = xs_vec.minCoeff();
  const double hi = xs_vec.maxCoeff() + 1e-12;

  const ConditionalProfile discrete = conditional_profile(fw.plan, ys_vec);
  const DistributionSpec latent = latent_spec(config.trainer);
  const GroupedOutputs mapped = map_samples(
      trained.t_net, xs, 256, latent, derive_seed(config.seed, "prof_z"));
  Eigen::VectorXd neural_mean(n), neural_var(n);
  for (int i = 0; i < n; ++i) {
    const auto block = mapped.outputs.middleRows(
        static_cast<Eigen::Index>(i) * mapped.z_per_x, mapped.z_per_x);
    const double mean = block.col(0).mean();
    neural_mean(i) = mean;
    neural_var(i) = (block.col(0).array() - mean).square().sum() /
                    (mapped.z_per_x - 1);
  }

  const GridProfile d_grid =
      aggregate_profile(xs_vec, discrete.mean, discrete.variance, p, lo, hi,
                        cells);
  const GridProfile n_grid =
      aggregate_profile(xs_vec, neural_mean, neural_var, p, lo, hi, cells);

  double mad_mean = 0.0, mad_std = 0.0;
  int occupied = 0;
  for (int c = 0; c < cells; ++c) {
    if (d_grid.mass(c) > 0.0) {
      mad_mean += std::abs(d_grid.mean(c) - n_grid.mean(c));
      mad_std += std::abs(std::sqrt(d_grid.variance(c)) -
                          std::sqrt(n_grid.variance(c)));
      ++occupied;
    }
  }
  if (occupied > 0) {
    mad_mean /= occupied;
    mad_std /= occupied;
  }

  const Moments q_moments = empirical_moments(ys);
  const double std_q = std::sqrt(q_moments.cov_diag(0));
  push_metric(report, "profile_mean_mad", mad_mean);
  push_metric(report, "profile_std_mad", mad_std);
  push_metric(report, "std_q", std_q);
  push_metric(report, "var_q", q_moments.cov_diag(0));
  push_metric(report, "occupied_cells", occupied);
  push_metric(report, "avg_cond_var_discrete",
              discrete.variance.dot(fw.plan.p));
  push_metric(report, "avg_cond_var_neural", neural_var.mean());

  std::vector<std::vector<CsvCell>> rows;
  for (int c = 0; c < cells; ++c) {
    rows.push_back({CsvCell{static_cast<long>(c)}, CsvCell{d_grid.centers(c)},
                    CsvCell{d_grid.mass(c)}, CsvCell{d_grid.mean(c)},
                    CsvCell{std::sqrt(d_grid.variance(c))},
                    CsvCell{n_grid.mean(c)},
                    CsvCell{std::sqrt(n_grid.variance(c))}});
  }
  write_csv(join(config.out_dir, "profiles.csv"),
            {"cell", "grid_x", "mass", "discrete_mean", "discrete_std",
             "neural_mean", "neural_std"},
            rows);
  report.artifacts.push_back("profiles.csv");

  // Joint scatters of both plans.
  Rng pair_rng = Rng::stream(config.seed, "plan_pairs");
  const int pair_count = 2000;
  const Eigen::MatrixXd discrete_pairs =
      sample_plan_pairs(fw.plan, xs, ys, pair_count, pair_rng);
  const Eigen::MatrixXd xs_fresh =
      sample(source, pair_count, derive_seed(config.seed, "pair_x")).points;
  const Eigen::MatrixXd pushed =
      map_samples(trained.t_net, xs_fresh, 1, latent,
                  derive_seed(config.seed, "pair_z"))
          .outputs;
  Eigen::MatrixXd neural_pairs(pair_count, 2);
  neural_pairs.col(0) = xs_fresh.col(0);
  neural_pairs.col(1) = pushed.col(0);

  {
    std::vector<ScatterGroup> groups;
    groups.push_back({discrete_pairs, {"#2ca02c", 1.8, 0.5}, "discrete plan"});
    PlotAxes axes = auto_axes(groups);
    axes.title = "discrete plan support";
    axes.x_label = "x";
    axes.y_label = "y";
    write_svg_scatter(join(config.out_dir, "scatter_discrete.svg"), groups,
                      axes);
    report.artifacts.push_back("scatter_discrete.svg");
  }
  {
    std::vector<ScatterGroup> groups;
    groups.push_back({neural_pairs, {"#1f77b4", 1.8, 0.5}, "neural plan"});
    PlotAxes axes = auto_axes(groups);
    axes.title = "neural plan (x, T(x,z))";
    axes.x_label = "x";
    axes.y_label = "y";
    write_svg_scatter(join(config.out_dir, "scatter_neural.svg"), groups, axes);
    report.artifacts.push_back("scatter_neural.svg");
  }
  {
    std::vector<LineSeries> series(4);
    series[0] = {d_grid.centers, d_grid.mean, "#2ca02c", "discrete mean"};
    series[1] = {d_grid.centers, d_grid.variance.cwiseSqrt(), "#98df8a",
                 "discrete std"};
    series[2] = {n_grid.centers, n_grid.mean, "#1f77b4", "neural mean"};
    series[3] = {n_grid.centers, n_grid.variance.cwiseSqrt(), "#aec7e8",
                 "neural std"};
    PlotAxes axes = auto_axes(series, false);
    axes.title = "conditional profiles on the shared grid";
    axes.x_label = "x";
    write_svg_lines(join(config.out_dir, "profiles.svg"), series, axes);
    report.artifacts.push_back("profiles.svg");
  }
}

// ---------------------------------------------------------------------------
// gamma_sweep: discrete solutions across a gamma grid on fixed samples.

void run_gamma_sweep(const ExperimentConfig& config,
                     ExperimentReport& report) {
  const int n = config.n_samples;
  const Eigen::MatrixXd xs =
      sample(*config.source, n, derive_seed(config.seed, "sweep_x")).points;
  const Eigen::MatrixXd ys =
      sample(*config.target, n, derive_seed(config.seed, "sweep_y")).points;
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(n, 1.0 / n);

  std::vector<double> gammas = config.sweep_gammas;
  std::sort(gammas.begin(), gammas.end());

  std::vector<std::vector<CsvCell>> rows;
  std::vector<double> cvars, dists, values;
  bool aborted = false;
  for (double gamma : gammas) {
    WeakCostSpec spec = config.cost;
    spec.gamma = gamma;
    const FwResult fw = solve_frank_wolfe(spec, xs, ys, p, q, config.solver);
    const PlanStats stats = plan_stats(spec, xs, ys, fw.plan);
    const double value = wot_objective(spec, xs, ys, fw.plan);
    rows.push_back({CsvCell{gamma}, CsvCell{stats.cvar}, CsvCell{stats.dist_sq},
                    CsvCell{value}, CsvCell{fw.final_gap},
                    CsvCell{static_cast<long>(fw.trace.size())},
                    CsvCell{static_cast<long>(fw.converged ? 1 : 0)}});
    cvars.push_back(stats.cvar);
    dists.push_back(stats.dist_sq);
    values.push_back(value);
    if (!fw.converged) {
      aborted = true;
      report.exit_code = 1;
      std::ostringstream note;
      note << "solver did not converge at gamma " << gamma
           << " (gap " << fw.final_gap << "); table is partial";
      report.extra["failure"] = note.str();
      break;
    }
  }
  write_csv(join(config.out_dir, "sweep.csv"),
            {"gamma", "cvar", "dist_sq", "value", "gap", "iters", "converged"},
            rows);
  report.artifacts.push_back("sweep.csv");

  const double slack = 1e-6;
  bool cvar_monotone = true, dist_monotone = true, value_nonincreasing = true;
  for (std::size_t i = 1; i < cvars.size(); ++i) {
    cvar_monotone = cvar_monotone && cvars[i] >= cvars[i - 1] - slack;
    dist_monotone = dist_monotone && dists[i] >= dists[i - 1] - slack;
    value_nonincreasing =
        value_nonincreasing && values[i] <= values[i - 1] + slack;
  }
  push_metric(report, "n_gammas", static_cast<double>(cvars.size()));
  push_metric(report, "cvar_monotone", cvar_monotone ? 1.0 : 0.0);
  push_metric(report, "dist_sq_monotone", dist_monotone ? 1.0 : 0.0);
  push_metric(report, "value_nonincreasing", value_nonincreasing ? 1.0 : 0.0);
  push_metric(report, "aborted", aborted ? 1.0 : 0.0);
  for (std::size_t i = 0; i < cvars.size(); ++i) {
    const std::string tag = format_double(gammas[i]);
    push_metric(report, "cvar_at_" + tag, cvars[i]);
    push_metric(report, "dist_sq_at_" + tag, dists[i]);
    push_metric(report, "value_at_" + tag, values[i]);
  }

  if (!cvars.empty()) {
    Eigen::VectorXd gx(static_cast<Eigen::Index>(cvars.size()));
    Eigen::VectorXd cv(gx.size()), ds(gx.size()), vl(gx.size());
    for (Eigen::Index i = 0; i < gx.size(); ++i) {
      gx(i) = gammas[static_cast<std::size_t>(i)];
      cv(i) = cvars[static_cast<std::size_t>(i)];
      ds(i) = dists[static_cast<std::size_t>(i)];
      vl(i) = values[static_cast<std::size_t>(i)];
    }
    std::vector<LineSeries> series(3);
    series[0] = {gx, cv, "#1f77b4", "CVar"};
    series[1] = {gx, ds, "#ff7f0e", "Dist^2"};
    series[2] = {gx, vl, "#2ca02c", "value"};
    PlotAxes axes = auto_axes(series, false);
    axes.title = "plan statistics across gamma";
    axes.x_label = "gamma";
    write_svg_lines(join(config.out_dir, "sweep_stats.svg"), series, axes);
    report.artifacts.push_back("sweep_stats.svg");
  }
}

// ---------------------------------------------------------------------------
// dwot_solve: one discrete solve with full plan export.

void run_dwot_solve(const ExperimentConfig& config, ExperimentReport& report) {
  const int n = config.n_samples;
  const Eigen::MatrixXd xs =
      sample(*config.source, n, derive_seed(config.seed, "dwot_x")).points;
  const Eigen::MatrixXd ys =
      sample(*config.target, n, derive_seed(config.seed, "dwot_y")).points;
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(n, 1.0 / n);

  const FwResult fw = solve_frank_wolfe(config.cost, xs, ys, p, q, config.solver);
  write_fw_trace_csv(join(config.out_dir, "fw_trace.csv"), fw.trace);
  report.artifacts.push_back("fw_trace.csv");

  const PlanStats stats = plan_stats(config.cost, xs, ys, fw.plan);
  push_metric(report, "objective", wot_objective(config.cost, xs, ys, fw.plan));
  push_metric(report, "final_gap", fw.final_gap);
  push_metric(report, "converged", fw.converged ? 1.0 : 0.0);
  push_metric(report, "iters", static_cast<double>(fw.trace.size()));
  push_metric(report, "cvar", stats.cvar);
  push_metric(report, "dist_sq", stats.dist_sq);
  push_metric(report, "cost", stats.cost);
  push_metric(report, "gamma_warning", fw.gamma_warning ? 1.0 : 0.0);
  if (!fw.converged) {
    report.exit_code = 1;
    report.extra["failure"] =
        "discrete solver did not reach its duality-gap tolerance";
  }

  // Plan matrix, row per source atom.
  {
    std::vector<std::string> header = {"i"};
    for (int j = 0; j < n; ++j) header.push_back("j" + std::to_string(j));
    std::vector<std::vector<CsvCell>> rows;
    rows.reserve(n);
    for (int i = 0; i < n; ++i) {
      std::vector<CsvCell> row;
      row.reserve(n + 1);
      row.emplace_back(static_cast<long>(i));
      for (int j = 0; j < n; ++j) row.emplace_back(fw.plan.matrix(i, j));
      rows.push_back(std::move(row));
    }
    write_csv(join(config.out_dir, "plan.csv"), header, rows);
    report.artifacts.push_back("plan.csv");
  }
  // Supports with marginals.
  {
    const int d = static_cast<int>(xs.cols());
    std::vector<std::string> header = {"i"};
    for (int c = 0; c < d; ++c) header.push_back("x" + std::to_string(c));
    header.push_back("p");
    std::vector<std::vector<CsvCell>> rows;
    for (int i = 0; i < n; ++i) {
      std::vector<CsvCell> row{CsvCell{static_cast<long>(i)}};
      for (int c = 0; c < d; ++c) row.emplace_back(xs(i, c));
      row.emplace_back(p(i));
      rows.push_back(std::move(row));
    }
    write_csv(join(config.out_dir, "supports.csv"), header, rows);
    report.artifacts.push_back("supports.csv");

    std::vector<std::string> t_header = {"j"};
    for (int c = 0; c < d; ++c) t_header.push_back("y" + std::to_string(c));
    t_header.push_back("q");
    std::vector<std::vector<CsvCell>> t_rows;
    for (int j = 0; j < n; ++j) {
      std::vector<CsvCell> row{CsvCell{static_cast<long>(j)}};
      for (int c = 0; c < d; ++c) row.emplace_back(ys(j, c));
      row.emplace_back(q(j));
      t_rows.push_back(std::move(row));
    }
    write_csv(join(config.out_dir, "targets.csv"), t_header, t_rows);
    report.artifacts.push_back("targets.csv");
  }
  // Duality-gap trajectory.
  {
    Eigen::VectorXd it(static_cast<Eigen::Index>(fw.trace.size()));
    Eigen::VectorXd gap(it.size());
    bool all_positive = true;
    for (Eigen::Index i = 0; i < it.size(); ++i) {
      it(i) = fw.trace[static_cast<std::size_t>(i)].iter;
      gap(i) = fw.trace[static_cast<std::size_t>(i)].gap;
      if (!(gap(i) > 0.0)) all_positive = false;
    }
    std::vector<LineSeries> series(1);
    series[0] = {it, gap, "#d62728", "duality gap"};
    PlotAxes axes = auto_axes(series, all_positive);
    axes.title = "Frank-Wolfe duality gap";
    axes.x_label = "iteration";
    write_svg_lines(join(config.out_dir, "gap.svg"), series, axes);
    report.artifacts.push_back("gap.svg");
  }
}

// ---------------------------------------------------------------------------
// checks: batch verification suites.

void run_checks(const ExperimentConfig& config, ExperimentReport& report) {
  CheckOptions options;
  options.seed = config.seed;
  const std::vector<CheckResult> results =
      run_check_suites(options, config.only);
  if (results.empty()) {
    throw ConfigError("--only '" + config.only +
                      "' matches no check suite (available: identities, "
                      "unbiasedness, gradients, oracle, solver)");
  }
  bool all_passed = true;
  std::vector<std::vector<CsvCell>> rows;
  for (const auto& r : results) {
    all_passed = all_passed && r.passed;
    rows.push_back({CsvCell{r.name},
                    CsvCell{static_cast<long>(r.passed ? 1 : 0)},
                    CsvCell{r.detail}});
    push_metric(report, r.name + "_passed", r.passed ? 1.0 : 0.0);
    report.extra["timings"][r.name] = r.seconds;
    if (!r.passed) report.extra["failures"][r.name] = r.detail;
  }
  write_csv(join(config.out_dir, "checks.csv"), {"suite", "passed", "detail"},
            rows);
  report.artifacts.push_back("checks.csv");
  push_metric(report, "all_passed", all_passed ? 1.0 : 0.0);
  report.exit_code = all_passed ? 0 : 1;
}

}  // namespace

double mmd_baseline(const DistributionSpec& target, int n,
                    const KernelSpec& kernel, std::uint64_t seed,
                    int resamples) {
  if (resamples < 2) throw std::invalid_argument("mmd_baseline: resamples >= 2");
  std::vector<double> values(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    const Eigen::MatrixXd a =
        sample(target, n, derive_seed(seed, "baseline_a", r)).points;
    const Eigen::MatrixXd b =
        sample(target, n, derive_seed(seed, "baseline_b", r)).points;
    values[static_cast<std::size_t>(r)] =
        mmd_squared(kernel, a, b, MmdStatistic::U);
  }
  std::sort(values.begin(), values.end());
  const std::size_t index = static_cast<std::size_t>(
      std::ceil(0.95 * resamples)) - 1;
  return values[std::min(index, values.size() - 1)];
}

void write_report(const ExperimentReport& report, const std::string& out_dir) {
  ordered_json doc;
  doc["experiment"] = report.experiment;
  doc["version"] = report.version;
  doc["config"] = report.config;
  ordered_json metrics = ordered_json::object();
  for (const auto& [name, value] : report.metrics) metrics[name] = value;
  doc["metrics"] = std::move(metrics);
  doc["artifacts"] = report.artifacts;
  if (!report.extra.is_null()) doc["extra"] = report.extra;
  doc["exit_code"] = report.exit_code;
  doc["wall_time_s"] = report.wall_time_s;
  std::ofstream file(join(out_dir, "report.json"),
                     std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write report.json in " + out_dir);
  file << doc.dump(2) << '\n';
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) {
    throw ConfigError("cannot create out_dir '" + config.out_dir +
                      "': " + ec.message());
  }

  ExperimentReport report;
  report.experiment = config.experiment;
  report.config = config_echo(config);

  if (config.dry_run) {
    report.extra["dry_run"] = true;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    write_report(report, config.out_dir);
    return report;
  }

  try {
    if (config.experiment == "toy2d") {
      run_toy2d(config, report);
    } else if (config.experiment == "fake_demo") {
      run_fake_demo(config, report);
    } else if (config.experiment == "toy1d") {
      run_toy1d(config, report);
    } else if (config.experiment == "gamma_sweep") {
      run_gamma_sweep(config, report);
    } else if (config.experiment == "dwot_solve") {
      run_dwot_solve(config, report);
    } else if (config.experiment == "checks") {
      run_checks(config, report);
    } else {
      throw ConfigError("unknown experiment '" + config.experiment + "'");
    }
  } catch (const DivergenceError& e) {
    report.exit_code = 3;
    report.extra["divergence"] = e.what();
  }

  write_metrics_csv(join(config.out_dir, "metrics.csv"), report.metrics);
  report.artifacts.push_back("metrics.csv");

  for (const auto& name : report.artifacts) {
    if (!fs::exists(join(config.out_dir, name))) {
      throw std::logic_error("artifact listed but missing: " + name);
    }
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  write_report(report, config.out_dir);
  return report;
}

}  // namespace wotlab
