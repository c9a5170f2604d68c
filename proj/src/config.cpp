#include "wotlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "wotlab/errors.hpp"
#include "wotlab/kernels.hpp"
#include "wotlab/toml_lite.hpp"

namespace wotlab {
namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void reject_unknown_keys(const ordered_json& obj, const std::string& where,
                         const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) {
      fail("unknown key '" + key + "' in " + where);
    }
  }
}

double get_double(const ordered_json& obj, const std::string& key,
                  const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) fail("'" + key + "' in " + where + " must be a number");
  return v.get<double>();
}

double get_double_or(const ordered_json& obj, const std::string& key,
                     const std::string& where, double fallback) {
  return obj.contains(key) ? get_double(obj, key, where) : fallback;
}

long long get_int(const ordered_json& obj, const std::string& key,
                  const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    fail("'" + key + "' in " + where + " must be an integer");
  }
  return v.get<long long>();
}

long long get_int_or(const ordered_json& obj, const std::string& key,
                     const std::string& where, long long fallback) {
  return obj.contains(key) ? get_int(obj, key, where) : fallback;
}

std::string get_string(const ordered_json& obj, const std::string& key,
                       const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) fail("'" + key + "' in " + where + " must be a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const ordered_json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) {
    fail(where + " must be a non-empty array of numbers");
  }
  Eigen::VectorXd out(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) fail(where + " must contain only numbers");
    out(static_cast<Eigen::Index>(i)) = value[i].get<double>();
  }
  return out;
}

DistributionSpec parse_distribution(const ordered_json& obj,
                                    const std::string& where) {
  if (!obj.is_object()) fail(where + " must be a table");
  if (!obj.contains("family")) fail(where + " needs a 'family' key");
  const std::string family = get_string(obj, "family", where);
  if (family == "gaussian") {
    reject_unknown_keys(obj, where, {"family", "mean", "cov_diag"});
    if (!obj.contains("mean") || !obj.contains("cov_diag")) {
      fail(where + ": gaussian needs 'mean' and 'cov_diag'");
    }
    Gaussian g;
    g.mean = get_vector(obj.at("mean"), where + ".mean");
    g.cov_diag = get_vector(obj.at("cov_diag"), where + ".cov_diag");
    return g;
  }
  if (family == "gaussian_mixture") {
    reject_unknown_keys(obj, where,
                        {"family", "weights", "means", "cov_diags"});
    if (!obj.contains("weights") || !obj.contains("means") ||
        !obj.contains("cov_diags")) {
      fail(where + ": gaussian_mixture needs 'weights', 'means', 'cov_diags'");
    }
    const auto& weights = obj.at("weights");
    const auto& means = obj.at("means");
    const auto& covs = obj.at("cov_diags");
    if (!weights.is_array() || !means.is_array() || !covs.is_array() ||
        weights.size() != means.size() || weights.size() != covs.size() ||
        weights.empty()) {
      fail(where + ": mixture arrays must be equal-length and non-empty");
    }
    GaussianMixture mix;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!weights[i].is_number()) fail(where + ".weights must be numbers");
      mix.weights.push_back(weights[i].get<double>());
      Gaussian g;
      g.mean = get_vector(means[i], where + ".means[i]");
      g.cov_diag = get_vector(covs[i], where + ".cov_diags[i]");
      mix.components.push_back(std::move(g));
    }
    return mix;
  }
  if (family == "uniform_square") {
    reject_unknown_keys(obj, where, {"family", "low", "high"});
    if (!obj.contains("low") || !obj.contains("high")) {
      fail(where + ": uniform_square needs 'low' and 'high'");
    }
    UniformSquare u;
    u.low = get_vector(obj.at("low"), where + ".low");
    u.high = get_vector(obj.at("high"), where + ".high");
    return u;
  }
  if (family == "swiss_roll") {
    reject_unknown_keys(obj, where, {"family", "scale", "noise_std"});
    SwissRoll roll;
    roll.scale = get_double_or(obj, "scale", where, 1.0);
    roll.noise_std = get_double_or(obj, "noise_std", where, 0.0);
    return roll;
  }
  fail(where + ": unknown family '" + family +
       "' (expected gaussian, gaussian_mixture, uniform_square, swiss_roll)");
}

KernelSpec parse_kernel(const ordered_json& obj, const std::string& where,
                        int target_dim) {
  const std::string name = get_string(obj, "kernel", where);
  if (name == "bilinear") return Bilinear{};
  if (name == "distance") {
    DistanceInduced k;
    k.alpha = get_double_or(obj, "alpha", where, 1.0);
    return k;
  }
  if (name == "gaussian_rbf") {
    GaussianRBF k;
    k.bandwidth = get_double_or(obj, "bandwidth", where,
                                default_bandwidth(std::max(target_dim, 1)));
    return k;
  }
  if (name == "laplacian") {
    Laplacian k;
    k.bandwidth = get_double_or(obj, "bandwidth", where,
                                default_bandwidth(std::max(target_dim, 1)));
    return k;
  }
  fail(where + ": unknown kernel '" + name +
       "' (expected bilinear, distance, gaussian_rbf, laplacian)");
}

ordered_json dist_to_json(const DistributionSpec& spec) {
  ordered_json out;
  out["family"] = family_name(spec);
  if (const auto* g = std::get_if<Gaussian>(&spec)) {
    out["mean"] = std::vector<double>(g->mean.begin(), g->mean.end());
    out["cov_diag"] = std::vector<double>(g->cov_diag.begin(), g->cov_diag.end());
  } else if (const auto* mix = std::get_if<GaussianMixture>(&spec)) {
    out["weights"] = mix->weights;
    ordered_json means = ordered_json::array();
    ordered_json covs = ordered_json::array();
    for (const auto& g : mix->components) {
      means.push_back(std::vector<double>(g.mean.begin(), g.mean.end()));
      covs.push_back(std::vector<double>(g.cov_diag.begin(), g.cov_diag.end()));
    }
    out["means"] = std::move(means);
    out["cov_diags"] = std::move(covs);
  } else if (const auto* u = std::get_if<UniformSquare>(&spec)) {
    out["low"] = std::vector<double>(u->low.begin(), u->low.end());
    out["high"] = std::vector<double>(u->high.begin(), u->high.end());
  } else if (const auto* roll = std::get_if<SwissRoll>(&spec)) {
    out["scale"] = roll->scale;
    out["noise_std"] = roll->noise_std;
  }
  return out;
}

ordered_json kernel_to_json(const KernelSpec& kernel) {
  ordered_json out;
  if (std::holds_alternative<Bilinear>(kernel)) {
    out["kernel"] = "bilinear";
  } else if (const auto* d = std::get_if<DistanceInduced>(&kernel)) {
    out["kernel"] = "distance";
    out["alpha"] = d->alpha;
  } else if (const auto* g = std::get_if<GaussianRBF>(&kernel)) {
    out["kernel"] = "gaussian_rbf";
    out["bandwidth"] = g->bandwidth;
  } else if (const auto* l = std::get_if<Laplacian>(&kernel)) {
    out["kernel"] = "laplacian";
    out["bandwidth"] = l->bandwidth;
  }
  return out;
}

const std::set<std::string> kExperiments = {"toy1d",       "toy2d",
                                            "fake_demo",   "gamma_sweep",
                                            "dwot_solve",  "checks"};

}  // namespace

ExperimentConfig parse_experiment_config(const ordered_json& doc) {
  if (!doc.is_object()) fail("config root must be a table");
  reject_unknown_keys(doc, "config",
                      {"experiment", "seed", "out_dir", "n_samples", "source",
                       "target", "cost", "trainer", "solver", "sweep"});
  ExperimentConfig config;
  if (!doc.contains("experiment")) fail("config needs an 'experiment' key");
  config.experiment = get_string(doc, "experiment", "config");
  if (!kExperiments.count(config.experiment)) {
    fail("unknown experiment '" + config.experiment + "'");
  }

  const long long seed = get_int_or(doc, "seed", "config", 0);
  if (seed < 0) fail("'seed' must be non-negative");
  config.seed = static_cast<std::uint64_t>(seed);
  if (doc.contains("out_dir")) {
    config.out_dir = get_string(doc, "out_dir", "config");
  }
  const long long n_samples = get_int_or(doc, "n_samples", "config", 4096);
  if (n_samples < 2 || n_samples > 1000000) {
    fail("'n_samples' must be in [2, 1e6]");
  }
  config.n_samples = static_cast<int>(n_samples);

  if (doc.contains("source")) {
    config.source = parse_distribution(doc.at("source"), "[source]");
    try {
      validate(*config.source);
    } catch (const std::exception& e) {
      fail(std::string("[source]: ") + e.what());
    }
  }
  if (doc.contains("target")) {
    config.target = parse_distribution(doc.at("target"), "[target]");
    try {
      validate(*config.target);
    } catch (const std::exception& e) {
      fail(std::string("[target]: ") + e.what());
    }
  }

  const bool needs_pair = config.experiment != "checks";
  if (needs_pair) {
    if (!config.source || !config.target) {
      fail("experiment '" + config.experiment +
           "' needs [source] and [target] tables");
    }
    if (dim(*config.source) != dim(*config.target)) {
      std::ostringstream msg;
      msg << "source dimension " << dim(*config.source)
          << " does not match target dimension " << dim(*config.target);
      fail(msg.str());
    }
    if (config.experiment == "toy1d" && dim(*config.source) != 1) {
      fail("toy1d needs one-dimensional source and target");
    }
    if ((config.experiment == "toy2d" || config.experiment == "fake_demo") &&
        dim(*config.source) != 2) {
      fail(config.experiment + " needs two-dimensional source and target");
    }
  }

  const int target_dim = config.target ? dim(*config.target) : 1;
  if (doc.contains("cost")) {
    const auto& cost = doc.at("cost");
    if (!cost.is_object()) fail("[cost] must be a table");
    reject_unknown_keys(cost, "[cost]", {"kernel", "gamma", "alpha", "bandwidth"});
    if (!cost.contains("kernel")) fail("[cost] needs a 'kernel' key");
    config.cost.kernel = parse_kernel(cost, "[cost]", target_dim);
    config.cost.gamma = get_double_or(cost, "gamma", "[cost]", 1.0);
  } else if (needs_pair && config.experiment != "fake_demo") {
    fail("experiment '" + config.experiment + "' needs a [cost] table");
  }
  try {
    validate(config.cost);
  } catch (const std::exception& e) {
    fail(std::string("[cost]: ") + e.what());
  }

  // Trainer defaults, then overrides.
  config.trainer.cost = config.cost;
  config.trainer.seed = config.seed;
  config.trainer.latent_dim = (config.source && dim(*config.source) == 1) ? 1 : 2;
  if (doc.contains("trainer")) {
    const auto& tr = doc.at("trainer");
    if (!tr.is_object()) fail("[trainer] must be a table");
    reject_unknown_keys(
        tr, "[trainer]",
        {"total_f_iters", "k_t", "batch_x", "batch_z", "lr", "latent_dim",
         "eval_every", "hidden_width", "hidden_depth", "eval_n", "eval_inputs",
         "eval_z_per_x", "grad_smoothing_delta"});
    config.trainer.total_f_iters = static_cast<int>(
        get_int_or(tr, "total_f_iters", "[trainer]", config.trainer.total_f_iters));
    config.trainer.k_t =
        static_cast<int>(get_int_or(tr, "k_t", "[trainer]", config.trainer.k_t));
    config.trainer.batch_x = static_cast<int>(
        get_int_or(tr, "batch_x", "[trainer]", config.trainer.batch_x));
    config.trainer.batch_z = static_cast<int>(
        get_int_or(tr, "batch_z", "[trainer]", config.trainer.batch_z));
    config.trainer.lr = get_double_or(tr, "lr", "[trainer]", config.trainer.lr);
    config.trainer.latent_dim = static_cast<int>(
        get_int_or(tr, "latent_dim", "[trainer]", config.trainer.latent_dim));
    config.trainer.eval_every = static_cast<int>(
        get_int_or(tr, "eval_every", "[trainer]", config.trainer.eval_every));
    config.trainer.hidden_width = static_cast<int>(
        get_int_or(tr, "hidden_width", "[trainer]", config.trainer.hidden_width));
    config.trainer.hidden_depth = static_cast<int>(
        get_int_or(tr, "hidden_depth", "[trainer]", config.trainer.hidden_depth));
    config.trainer.eval_n = static_cast<int>(
        get_int_or(tr, "eval_n", "[trainer]", config.trainer.eval_n));
    config.trainer.eval_inputs = static_cast<int>(
        get_int_or(tr, "eval_inputs", "[trainer]", config.trainer.eval_inputs));
    config.trainer.eval_z_per_x = static_cast<int>(
        get_int_or(tr, "eval_z_per_x", "[trainer]", config.trainer.eval_z_per_x));
    config.trainer.grad_smoothing_delta =
        get_double_or(tr, "grad_smoothing_delta", "[trainer]",
                      config.trainer.grad_smoothing_delta);
  }
  try {
    validate(config.trainer);
  } catch (const std::exception& e) {
    fail(std::string("[trainer]: ") + e.what());
  }

  if (doc.contains("solver")) {
    const auto& sv = doc.at("solver");
    if (!sv.is_object()) fail("[solver] must be a table");
    reject_unknown_keys(sv, "[solver]", {"max_iters", "gap_tol", "line_search"});
    config.solver.max_iters = static_cast<int>(
        get_int_or(sv, "max_iters", "[solver]", config.solver.max_iters));
    if (config.solver.max_iters < 1) fail("[solver]: max_iters must be >= 1");
    if (sv.contains("gap_tol")) {
      const double tol = get_double(sv, "gap_tol", "[solver]");
      if (!(tol > 0.0)) fail("[solver]: gap_tol must be > 0");
      config.solver.gap_tol = tol;
    }
    if (sv.contains("line_search")) {
      const std::string ls = get_string(sv, "line_search", "[solver]");
      if (ls == "exact") {
        config.solver.line_search = LineSearch::kExact;
      } else if (ls == "diminishing") {
        config.solver.line_search = LineSearch::kDiminishing;
      } else {
        fail("[solver]: line_search must be 'exact' or 'diminishing'");
      }
    }
  }

  if (doc.contains("sweep")) {
    const auto& sw = doc.at("sweep");
    if (!sw.is_object()) fail("[sweep] must be a table");
    reject_unknown_keys(sw, "[sweep]", {"gammas"});
    if (sw.contains("gammas")) {
      const Eigen::VectorXd gs = get_vector(sw.at("gammas"), "[sweep].gammas");
      config.sweep_gammas.assign(gs.begin(), gs.end());
      for (double g : config.sweep_gammas) {
        if (!(g >= 0.0) || !std::isfinite(g)) {
          fail("[sweep]: gammas must be finite and >= 0");
        }
      }
      if (config.sweep_gammas.empty()) fail("[sweep]: gammas must be non-empty");
    }
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(parse_toml_file(path));
}

nlohmann::ordered_json config_echo(const ExperimentConfig& config) {
  ordered_json echo;
  echo["experiment"] = config.experiment;
  echo["seed"] = config.seed;
  echo["out_dir"] = config.out_dir;
  echo["n_samples"] = config.n_samples;
  if (config.source) echo["source"] = dist_to_json(*config.source);
  if (config.target) echo["target"] = dist_to_json(*config.target);
  ordered_json cost = kernel_to_json(config.cost.kernel);
  cost["gamma"] = config.cost.gamma;
  echo["cost"] = std::move(cost);
  ordered_json trainer;
  trainer["total_f_iters"] = config.trainer.total_f_iters;
  trainer["k_t"] = config.trainer.k_t;
  trainer["batch_x"] = config.trainer.batch_x;
  trainer["batch_z"] = config.trainer.batch_z;
  trainer["lr"] = config.trainer.lr;
  trainer["latent_dim"] = config.trainer.latent_dim;
  trainer["eval_every"] = config.trainer.eval_every;
  trainer["hidden_width"] = config.trainer.hidden_width;
  trainer["hidden_depth"] = config.trainer.hidden_depth;
  trainer["eval_n"] = config.trainer.eval_n;
  trainer["eval_inputs"] = config.trainer.eval_inputs;
  trainer["eval_z_per_x"] = config.trainer.eval_z_per_x;
  trainer["grad_smoothing_delta"] = config.trainer.grad_smoothing_delta;
  echo["trainer"] = std::move(trainer);
  ordered_json solver;
  solver["max_iters"] = config.solver.max_iters;
  if (config.solver.gap_tol) {
    solver["gap_tol"] = *config.solver.gap_tol;
  } else {
    solver["gap_tol"] = "auto";
  }
  solver["line_search"] = config.solver.line_search == LineSearch::kExact
                              ? "exact"
                              : "diminishing";
  echo["solver"] = std::move(solver);
  echo["sweep"] = {{"gammas", config.sweep_gammas}};
  echo["dry_run"] = config.dry_run;
  if (!config.only.empty()) echo["only"] = config.only;
  return echo;
}

}  // namespace wotlab
