#pragma once
// Small dense feed-forward networks with hand-written reverse-mode
// differentiation, plus the Adam optimizer state used to train them.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace wotlab {

// Hidden-layer nonlinearity. Both choices are smooth, so the networks stay
// differentiable everywhere; the output layer is always linear. They differ
// in their tails: tanh features are bounded, so the whole network is bounded,
// while softplus features grow linearly, so the network can represent
// functions with arbitrary linear growth.
enum class Activation { kTanh, kSoftplus };

// Fully connected network. layer_sizes = [d_in, h_1, ..., h_k, d_out];
// weights[l] has shape (layer_sizes[l+1] x layer_sizes[l]).
struct MlpNet {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::kTanh;
};

// Builds a network with weights and biases drawn uniformly from
// [-1/sqrt(fan_in), +1/sqrt(fan_in)], deterministically from `seed`.
MlpNet make_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed,
                Activation activation = Activation::kTanh);

// Builds a network of the given shape with all parameters zero.
MlpNet make_zero_mlp(const std::vector<int>& layer_sizes,
                     Activation activation = Activation::kTanh);

// Total number of scalar parameters: sum over layers of (in + 1) * out.
long param_count(const MlpNet& net);

// Forward pass on a batch; inputs and outputs are row-per-sample.
Eigen::MatrixXd mlp_forward(const MlpNet& net, const Eigen::MatrixXd& inputs);

// Forward pass that keeps every layer's post-activation output. Entry 0 is
// the input batch itself and the last entry is the network output; feed the
// result to mlp_backward_cached to avoid recomputing the forward pass.
std::vector<Eigen::MatrixXd> mlp_forward_cached(const MlpNet& net,
                                                const Eigen::MatrixXd& inputs);

// Gradients of a scalar objective with respect to every parameter, in the
// same shapes as MlpNet::weights / MlpNet::biases.
struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

MlpGradients zero_gradients(const MlpNet& net);

struct MlpBackwardResult {
  MlpGradients params;
  Eigen::MatrixXd inputs;  // d objective / d inputs, same shape as the batch
};

// Reverse-mode pass: given d objective / d outputs (`cotangents`, same shape
// as the forward output), returns exact gradients for the parameters and the
// inputs. The flags skip the parts the caller does not need.
MlpBackwardResult mlp_backward_cached(const MlpNet& net,
                                      const std::vector<Eigen::MatrixXd>& activations,
                                      const Eigen::MatrixXd& cotangents,
                                      bool want_param_grads = true,
                                      bool want_input_grads = true);

// Convenience wrapper that runs the forward pass internally.
MlpBackwardResult mlp_backward(const MlpNet& net, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& cotangents,
                               bool want_param_grads = true,
                               bool want_input_grads = true);

// Parameter vector layout: for each layer, the weight matrix in row-major
// order followed by the bias. flatten/set round-trip exactly.
Eigen::VectorXd flatten_params(const MlpNet& net);
void set_params(MlpNet& net, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_gradients(const MlpNet& net, const MlpGradients& grads);

// Adam optimizer state for one flattened parameter vector.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(long n_params, double lr);

// One bias-corrected Adam update, applied to `params` in place. Throws
// DivergenceError if any gradient entry is non-finite.
void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grads);

}  // namespace wotlab
