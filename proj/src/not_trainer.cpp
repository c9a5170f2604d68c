#include "wotlab/not_trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "wotlab/errors.hpp"
#include "wotlab/kernels.hpp"
#include "wotlab/rng.hpp"

namespace wotlab {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t index) {
  return Rng::stream(seed, purpose, index).next_u64();
}

// Stacks map inputs as rows (x_i, z_{i,k}); z rows are grouped per input.
Eigen::MatrixXd build_map_inputs(const Eigen::MatrixXd& xs,
                                 const Eigen::MatrixXd& zs, int z_per_x) {
  const Eigen::Index n = xs.rows();
  Eigen::MatrixXd inputs(n * z_per_x, xs.cols() + zs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < z_per_x; ++k) {
      const Eigen::Index row = i * z_per_x + k;
      inputs.row(row).head(xs.cols()) = xs.row(i);
      inputs.row(row).tail(zs.cols()) = zs.row(row);
    }
  }
  return inputs;
}

int infer_z_per_x(const Eigen::MatrixXd& x_batch,
                  const Eigen::MatrixXd& z_batch) {
  if (x_batch.rows() == 0) {
    throw std::invalid_argument("not trainer: empty input batch");
  }
  if (z_batch.rows() % x_batch.rows() != 0) {
    throw std::invalid_argument(
        "not trainer: latent batch size must be a multiple of the input batch "
        "size");
  }
  return static_cast<int>(z_batch.rows() / x_batch.rows());
}

void accumulate(MlpGradients& into, const MlpGradients& other) {
  for (std::size_t l = 0; l < into.weights.size(); ++l) {
    into.weights[l] += other.weights[l];
    into.biases[l] += other.biases[l];
  }
}

std::vector<int> hidden_stack(int d_in, int width, int depth, int d_out) {
  std::vector<int> sizes;
  sizes.reserve(static_cast<std::size_t>(depth) + 2);
  sizes.push_back(d_in);
  for (int i = 0; i < depth; ++i) sizes.push_back(width);
  sizes.push_back(d_out);
  return sizes;
}

}  // namespace

void validate(const NotConfig& config) {
  validate(config.cost);
  if (config.k_t < 1) throw std::invalid_argument("NotConfig: k_t must be >= 1");
  if (config.batch_x < 1) {
    throw std::invalid_argument("NotConfig: batch_x must be >= 1");
  }
  if (config.batch_z < 2) {
    throw std::invalid_argument(
        "NotConfig: batch_z must be >= 2 (the cost estimator needs at least "
        "two latent draws per input)");
  }
  if (!(config.lr > 0.0)) throw std::invalid_argument("NotConfig: lr must be > 0");
  if (config.total_f_iters < 1) {
    throw std::invalid_argument("NotConfig: total_f_iters must be >= 1");
  }
  if (config.latent_dim < 1) {
    throw std::invalid_argument("NotConfig: latent_dim must be >= 1");
  }
  if (config.eval_every < 1) {
    throw std::invalid_argument("NotConfig: eval_every must be >= 1");
  }
  if (config.hidden_width < 1 || config.hidden_depth < 1) {
    throw std::invalid_argument("NotConfig: hidden layers must be non-trivial");
  }
  if (!(config.grad_smoothing_delta >= 0.0) ||
      !std::isfinite(config.grad_smoothing_delta)) {
    throw std::invalid_argument(
        "NotConfig: grad_smoothing_delta must be finite and >= 0");
  }
  if (config.eval_n < 2) {
    throw std::invalid_argument(
        "NotConfig: eval_n must be >= 2 for the unbiased MMD statistic");
  }
  if (config.eval_inputs < 1 || config.eval_z_per_x < 1) {
    throw std::invalid_argument("NotConfig: evaluation sizes must be >= 1");
  }
  if (config.latent.has_value()) {
    validate(*config.latent);
    if (dim(*config.latent) != config.latent_dim) {
      throw std::invalid_argument(
          "NotConfig: explicit latent distribution dimension must equal "
          "latent_dim");
    }
  }
}

DistributionSpec latent_spec(const NotConfig& config) {
  if (config.latent.has_value()) return *config.latent;
  Gaussian standard;
  standard.mean = Eigen::VectorXd::Zero(config.latent_dim);
  standard.cov_diag = Eigen::VectorXd::Ones(config.latent_dim);
  return standard;
}

TStepResult t_step(const NotConfig& config, const MlpNet& t_net,
                   const MlpNet& f_net, const Eigen::MatrixXd& x_batch,
                   const Eigen::MatrixXd& z_batch) {
  const int z_per_x = infer_z_per_x(x_batch, z_batch);
  if (z_per_x < 2) {
    throw std::invalid_argument(
        "t_step: need at least two latent draws per input");
  }
  const Eigen::Index n_x = x_batch.rows();
  const Eigen::Index n_out = z_batch.rows();
  const double delta = config.grad_smoothing_delta;

  const Eigen::MatrixXd map_inputs = build_map_inputs(x_batch, z_batch, z_per_x);
  const std::vector<Eigen::MatrixXd> t_acts =
      mlp_forward_cached(t_net, map_inputs);
  const Eigen::MatrixXd& outputs = t_acts.back();

  const std::vector<Eigen::MatrixXd> f_acts = mlp_forward_cached(f_net, outputs);
  const Eigen::MatrixXd& f_vals = f_acts.back();

  // Cost term and its gradient, group by group.
  double cost_sum = 0.0;
  Eigen::MatrixXd out_cotangent(n_out, outputs.cols());
  for (Eigen::Index i = 0; i < n_x; ++i) {
    const Eigen::MatrixXd group = outputs.middleRows(i * z_per_x, z_per_x);
    const Eigen::VectorXd x = x_batch.row(i).transpose();
    cost_sum += weak_cost_estimator(config.cost, x, group, delta);
    out_cotangent.middleRows(i * z_per_x, z_per_x) =
        weak_cost_estimator_grad(config.cost, x, group, delta) /
        static_cast<double>(n_x);
  }

  // Penalty term -mean f(T(x,z)); its pullback through f adds to the
  // cotangent on the map outputs.
  const double f_mean = f_vals.sum() / static_cast<double>(n_out);
  const Eigen::MatrixXd f_cot =
      Eigen::MatrixXd::Constant(n_out, 1, -1.0 / static_cast<double>(n_out));
  out_cotangent += mlp_backward_cached(f_net, f_acts, f_cot,
                                       /*want_param_grads=*/false,
                                       /*want_input_grads=*/true)
                       .inputs;

  TStepResult result;
  result.loss = cost_sum / static_cast<double>(n_x) - f_mean;
  result.t_grads = mlp_backward_cached(t_net, t_acts, out_cotangent,
                                       /*want_param_grads=*/true,
                                       /*want_input_grads=*/false)
                       .params;
  return result;
}

FStepResult f_step(const NotConfig& /*config*/, const MlpNet& t_net,
                   const MlpNet& f_net, const Eigen::MatrixXd& x_batch,
                   const Eigen::MatrixXd& z_batch,
                   const Eigen::MatrixXd& y_batch) {
  const int z_per_x = infer_z_per_x(x_batch, z_batch);
  if (y_batch.rows() == 0) {
    throw std::invalid_argument("f_step: empty target batch");
  }
  // The map is a constant here: no gradient flows through it.
  const Eigen::MatrixXd outputs =
      mlp_forward(t_net, build_map_inputs(x_batch, z_batch, z_per_x));

  const std::vector<Eigen::MatrixXd> acts_y = mlp_forward_cached(f_net, y_batch);
  const std::vector<Eigen::MatrixXd> acts_o = mlp_forward_cached(f_net, outputs);
  const double n_y = static_cast<double>(y_batch.rows());
  const double n_o = static_cast<double>(outputs.rows());

  FStepResult result;
  result.objective =
      acts_y.back().sum() / n_y - acts_o.back().sum() / n_o;

  const Eigen::MatrixXd cot_y =
      Eigen::MatrixXd::Constant(y_batch.rows(), 1, 1.0 / n_y);
  const Eigen::MatrixXd cot_o =
      Eigen::MatrixXd::Constant(outputs.rows(), 1, -1.0 / n_o);
  result.f_grads = mlp_backward_cached(f_net, acts_y, cot_y,
                                       /*want_param_grads=*/true,
                                       /*want_input_grads=*/false)
                       .params;
  accumulate(result.f_grads,
             mlp_backward_cached(f_net, acts_o, cot_o,
                                 /*want_param_grads=*/true,
                                 /*want_input_grads=*/false)
                 .params);
  return result;
}

TrainResult train_not(const DistributionSpec& source,
                      const DistributionSpec& target, const NotConfig& config,
                      const RestrictedPotentialQuadratic* oracle) {
  validate(config);
  validate(source);
  validate(target);
  const int dx = dim(source);
  const int dy = dim(target);
  const DistributionSpec latent = latent_spec(config);
  const int dz = dim(latent);

  TrainResult result;
  result.t_net = make_mlp(
      hidden_stack(dx + dz, config.hidden_width, config.hidden_depth, dy),
      derive_seed(config.seed, "init_t", 0));
  // The potential needs linear tails (softplus features, linear head): it
  // must dominate the cost's pairwise-spread reward far from the data, and a
  // bounded tanh network cannot, so the map-vs-potential game would be
  // unbounded for spread-rewarding costs (gamma > 1). The map itself only
  // ever needs to cover the target's support, so it keeps tanh features.
  result.f_net =
      make_mlp(hidden_stack(dy, config.hidden_width, config.hidden_depth, 1),
               derive_seed(config.seed, "init_f", 0), Activation::kSoftplus);

  Eigen::VectorXd t_params = flatten_params(result.t_net);
  Eigen::VectorXd f_params = flatten_params(result.f_net);
  AdamState adam_t = make_adam(t_params.size(), config.lr);
  AdamState adam_f = make_adam(f_params.size(), config.lr);

  const KernelSpec eval_kernel = DistanceInduced{1.0};
  const int n_z = config.batch_x * config.batch_z;
  double last_t_loss = std::numeric_limits<double>::quiet_NaN();
  double last_f_value = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 1; iter <= config.total_f_iters; ++iter) {
    for (int inner = 0; inner < config.k_t; ++inner) {
      const std::uint64_t idx =
          static_cast<std::uint64_t>(iter - 1) * config.k_t + inner;
      const Eigen::MatrixXd xb =
          sample(source, config.batch_x, derive_seed(config.seed, "tx", idx))
              .points;
      const Eigen::MatrixXd zb =
          sample(latent, n_z, derive_seed(config.seed, "tz", idx)).points;
      TStepResult step = t_step(config, result.t_net, result.f_net, xb, zb);
      if (!std::isfinite(step.loss)) {
        std::ostringstream msg;
        msg << "train_not: map loss diverged at iteration " << iter
            << " (inner step " << inner << "): " << step.loss;
        throw DivergenceError(msg.str());
      }
      adam_step(adam_t, t_params,
                flatten_gradients(result.t_net, step.t_grads));
      set_params(result.t_net, t_params);
      last_t_loss = step.loss;
    }

    {
      const std::uint64_t idx = static_cast<std::uint64_t>(iter);
      const Eigen::MatrixXd xb =
          sample(source, config.batch_x, derive_seed(config.seed, "fx", idx))
              .points;
      const Eigen::MatrixXd zb =
          sample(latent, n_z, derive_seed(config.seed, "fz", idx)).points;
      const Eigen::MatrixXd yb =
          sample(target, config.batch_x, derive_seed(config.seed, "fy", idx))
              .points;
      FStepResult step =
          f_step(config, result.t_net, result.f_net, xb, zb, yb);
      if (!std::isfinite(step.objective)) {
        std::ostringstream msg;
        msg << "train_not: potential objective diverged at iteration " << iter
            << ": " << step.objective;
        throw DivergenceError(msg.str());
      }
      // Adam minimizes, so feed the negated ascent gradient.
      adam_step(adam_f, f_params,
                -flatten_gradients(result.f_net, step.f_grads));
      set_params(result.f_net, f_params);
      last_f_value = step.objective;
    }

    const bool do_eval =
        (iter % config.eval_every == 0) || (iter == config.total_f_iters);
    if (!do_eval) continue;

    const std::uint64_t idx = static_cast<std::uint64_t>(iter);
    const SampleBatch xs_eval =
        sample(source, config.eval_n, derive_seed(config.seed, "ex", idx));
    const Eigen::MatrixXd pushed =
        map_samples(result.t_net, xs_eval.points, 1, latent,
                    derive_seed(config.seed, "ez", idx))
            .outputs;
    const Eigen::MatrixXd ys_eval =
        sample(target, config.eval_n, derive_seed(config.seed, "ey", idx))
            .points;

    TrainRecord record;
    record.iter = iter;
    record.mmd_sq = mmd_squared(eval_kernel, pushed, ys_eval, MmdStatistic::U);
    record.t_loss = last_t_loss;
    record.f_value = last_f_value;
    if (oracle != nullptr) {
      const SampleBatch xs_b = sample(source, config.eval_inputs,
                                      derive_seed(config.seed, "bx", idx));
      const GroupedOutputs grouped =
          map_samples(result.t_net, xs_b.points, config.eval_z_per_x, latent,
                      derive_seed(config.seed, "bz", idx));
      record.barycentric_error =
          barycentric_error(grouped, *oracle, xs_b.points);
    } else {
      record.barycentric_error = std::numeric_limits<double>::quiet_NaN();
    }
    result.trace.records.push_back(record);

    result.trace.checkpoint_ring.push_back(t_params);
    if (result.trace.checkpoint_ring.size() > TrainTrace::kCheckpointRing) {
      result.trace.checkpoint_ring.erase(result.trace.checkpoint_ring.begin());
    }
  }
  return result;
}

GroupedOutputs map_samples(const MlpNet& t_net, const Eigen::MatrixXd& xs,
                           int z_per_x, const DistributionSpec& latent,
                           std::uint64_t seed) {
  if (z_per_x < 1) throw std::invalid_argument("map_samples: z_per_x must be >= 1");
  if (xs.rows() == 0) throw std::invalid_argument("map_samples: empty inputs");
  const Eigen::MatrixXd zs =
      sample(latent, static_cast<int>(xs.rows()) * z_per_x, seed).points;
  GroupedOutputs grouped;
  grouped.outputs = mlp_forward(t_net, build_map_inputs(xs, zs, z_per_x));
  grouped.n_inputs = static_cast<int>(xs.rows());
  grouped.z_per_x = z_per_x;
  return grouped;
}

}  // namespace wotlab
