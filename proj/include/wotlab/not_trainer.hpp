#pragma once
// Adversarial training of a stochastic transport map T(x, z) against a
// potential network f, minimizing the weak kernel transport objective.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "wotlab/cost.hpp"
#include "wotlab/dist.hpp"
#include "wotlab/gaussian_oracle.hpp"
#include "wotlab/mlp.hpp"

namespace wotlab {

struct NotConfig {
  WeakCostSpec cost;
  int k_t = 10;      // map updates per potential update
  int batch_x = 64;  // source samples per step
  int batch_z = 4;   // latent draws per source sample (>= 2 for the estimator)
  double lr = 1e-4;
  int total_f_iters = 10000;  // outer iterations (potential updates)
  int latent_dim = 2;
  // Latent distribution; defaults to a standard Gaussian of latent_dim.
  std::optional<DistributionSpec> latent;
  int eval_every = 100;
  std::uint64_t seed = 0;
  int hidden_width = 128;
  int hidden_depth = 3;
  // Norm smoothing used inside the cost estimator and its gradient; keep 0
  // for exact values, set ~1e-6 when finite-difference checking gradients.
  double grad_smoothing_delta = 0.0;
  int eval_n = 1024;        // pushforward / target sample size for the MMD probe
  int eval_inputs = 256;    // inputs used for the conditional-mean probe
  int eval_z_per_x = 32;    // latent draws per input for the conditional mean
};

void validate(const NotConfig& config);

// Returns the latent distribution the config implies (explicit or default).
DistributionSpec latent_spec(const NotConfig& config);

// One evaluation record; barycentric_error is NaN when no oracle map was
// supplied. t_loss and f_value echo the most recent training steps.
struct TrainRecord {
  int iter = 0;
  double mmd_sq = 0.0;
  double barycentric_error = 0.0;
  double t_loss = 0.0;
  double f_value = 0.0;
};

struct TrainTrace {
  std::vector<TrainRecord> records;
  // Flattened map parameters at the trailing evaluations, oldest first,
  // capped at kCheckpointRing entries.
  std::vector<Eigen::VectorXd> checkpoint_ring;
  static constexpr std::size_t kCheckpointRing = 20;
};

// Map update: loss = mean_x [ estimated cost(x, T(x, Z)) - mean_z f(T(x,z)) ].
// z_batch holds batch_x groups of batch_z latent rows (grouped row blocks).
// Gradients are for the map parameters only; f is read, never written.
struct TStepResult {
  double loss = 0.0;
  MlpGradients t_grads;
};
TStepResult t_step(const NotConfig& config, const MlpNet& t_net,
                   const MlpNet& f_net, const Eigen::MatrixXd& x_batch,
                   const Eigen::MatrixXd& z_batch);

// Potential update: objective = mean_y f(y) - mean_{x,z} f(T(x,z)), with
// gradients of the *ascent* direction for f's parameters only; no gradient
// flows through the map.
struct FStepResult {
  double objective = 0.0;
  MlpGradients f_grads;
};
FStepResult f_step(const NotConfig& config, const MlpNet& t_net,
                   const MlpNet& f_net, const Eigen::MatrixXd& x_batch,
                   const Eigen::MatrixXd& z_batch,
                   const Eigen::MatrixXd& y_batch);

struct TrainResult {
  MlpNet t_net;
  MlpNet f_net;
  TrainTrace trace;
};

// Full adversarial loop: total_f_iters outer iterations, each running k_t map
// updates followed by one potential update, evaluating every eval_every
// iterations (and at the end). The evaluation records an unbiased MMD^2
// between the map's pushforward and fresh target samples, plus the relative
// conditional-mean error against `oracle` when one is given. Throws
// DivergenceError if any loss becomes non-finite. Fully deterministic in
// config.seed.
TrainResult train_not(const DistributionSpec& source,
                      const DistributionSpec& target, const NotConfig& config,
                      const RestrictedPotentialQuadratic* oracle = nullptr);

// Pushes each row of xs through the map with z_per_x fresh latent draws;
// output row block i holds the z_per_x images of xs row i.
GroupedOutputs map_samples(const MlpNet& t_net, const Eigen::MatrixXd& xs,
                           int z_per_x, const DistributionSpec& latent,
                           std::uint64_t seed);

}  // namespace wotlab
