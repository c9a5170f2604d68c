#include "wotlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "wotlab/errors.hpp"
#include "wotlab/rng.hpp"

namespace wotlab {
namespace {

void check_shape(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("mlp: need at least input and output sizes");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
  }
}

MlpNet make_shaped(const std::vector<int>& layer_sizes, Activation activation) {
  check_shape(layer_sizes);
  MlpNet net;
  net.layer_sizes = layer_sizes;
  net.activation = activation;
  const std::size_t n_layers = layer_sizes.size() - 1;
  net.weights.reserve(n_layers);
  net.biases.reserve(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    net.weights.emplace_back(
        Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
    net.biases.emplace_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  return net;
}

// softplus(z) = log(1 + exp(z)), computed without overflow for large |z|.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

MlpNet make_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed,
                Activation activation) {
  MlpNet net = make_shaped(layer_sizes, activation);
  Rng rng = Rng::stream(seed, "mlp_init");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
        net.weights[l](r, c) = rng.uniform(-bound, bound);
      }
    }
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
      net.biases[l](r) = rng.uniform(-bound, bound);
    }
  }
  return net;
}

MlpNet make_zero_mlp(const std::vector<int>& layer_sizes,
                     Activation activation) {
  return make_shaped(layer_sizes, activation);
}

long param_count(const MlpNet& net) {
  long total = 0;
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    total += static_cast<long>(net.layer_sizes[l] + 1) * net.layer_sizes[l + 1];
  }
  return total;
}

std::vector<Eigen::MatrixXd> mlp_forward_cached(const MlpNet& net,
                                                const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != net.layer_sizes.front()) {
    std::ostringstream msg;
    msg << "mlp_forward: input has " << inputs.cols() << " columns, network expects "
        << net.layer_sizes.front();
    throw std::invalid_argument(msg.str());
  }
  const std::size_t n_layers = net.weights.size();
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(n_layers + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = acts.back() * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    if (l + 1 < n_layers) {
      switch (net.activation) {
        case Activation::kTanh:
          z = z.array().tanh();
          break;
        case Activation::kSoftplus:
          z = z.unaryExpr([](double v) { return softplus(v); });
          break;
      }
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

Eigen::MatrixXd mlp_forward(const MlpNet& net, const Eigen::MatrixXd& inputs) {
  return mlp_forward_cached(net, inputs).back();
}

MlpGradients zero_gradients(const MlpNet& net) {
  MlpGradients grads;
  grads.weights.reserve(net.weights.size());
  grads.biases.reserve(net.biases.size());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    grads.weights.emplace_back(
        Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    grads.biases.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return grads;
}

MlpBackwardResult mlp_backward_cached(const MlpNet& net,
                                      const std::vector<Eigen::MatrixXd>& activations,
                                      const Eigen::MatrixXd& cotangents,
                                      bool want_param_grads,
                                      bool want_input_grads) {
  const std::size_t n_layers = net.weights.size();
  if (activations.size() != n_layers + 1) {
    throw std::invalid_argument("mlp_backward: activation cache has wrong length");
  }
  if (cotangents.rows() != activations.back().rows() ||
      cotangents.cols() != activations.back().cols()) {
    throw std::invalid_argument("mlp_backward: cotangent shape mismatch");
  }
  MlpBackwardResult result;
  if (want_param_grads) result.params = zero_gradients(net);

  // The output layer is linear, so the first delta is the cotangent itself.
  Eigen::MatrixXd delta = cotangents;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (want_param_grads) {
      result.params.weights[l].noalias() = delta.transpose() * activations[l];
      result.params.biases[l] = delta.colwise().sum().transpose();
    }
    const bool need_prev = (l > 0) || want_input_grads;
    if (!need_prev) break;
    Eigen::MatrixXd prev = delta * net.weights[l];
    if (l > 0) {
      // The derivative is recovered from the cached post-activation a:
      // tanh' = 1 - a^2, and for a = softplus(z) the derivative sigmoid(z)
      // equals 1 - exp(-a) exactly (a >= 0, so this never overflows).
      switch (net.activation) {
        case Activation::kTanh:
          prev.array() *= 1.0 - activations[l].array().square();
          break;
        case Activation::kSoftplus:
          prev.array() *= 1.0 - (-activations[l].array()).exp();
          break;
      }
    }
    delta = std::move(prev);
  }
  if (want_input_grads) result.inputs = std::move(delta);
  return result;
}

MlpBackwardResult mlp_backward(const MlpNet& net, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& cotangents,
                               bool want_param_grads, bool want_input_grads) {
  return mlp_backward_cached(net, mlp_forward_cached(net, inputs), cotangents,
                             want_param_grads, want_input_grads);
}

Eigen::VectorXd flatten_params(const MlpNet& net) {
  Eigen::VectorXd flat(param_count(net));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat(at++) = w(r, c);
    }
    flat.segment(at, net.biases[l].size()) = net.biases[l];
    at += net.biases[l].size();
  }
  return flat;
}

void set_params(MlpNet& net, const Eigen::VectorXd& flat) {
  if (flat.size() != param_count(net)) {
    throw std::invalid_argument("set_params: flat vector has wrong length");
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat(at++);
    }
    net.biases[l] = flat.segment(at, net.biases[l].size());
    at += net.biases[l].size();
  }
}

Eigen::VectorXd flatten_gradients(const MlpNet& net, const MlpGradients& grads) {
  Eigen::VectorXd flat(param_count(net));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    const auto& w = grads.weights[l];
    if (w.rows() != net.weights[l].rows() || w.cols() != net.weights[l].cols()) {
      throw std::invalid_argument("flatten_gradients: shape mismatch");
    }
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat(at++) = w(r, c);
    }
    flat.segment(at, grads.biases[l].size()) = grads.biases[l];
    at += grads.biases[l].size();
  }
  return flat;
}

AdamState make_adam(long n_params, double lr) {
  if (n_params <= 0) throw std::invalid_argument("make_adam: need n_params > 0");
  if (!(lr > 0.0)) throw std::invalid_argument("make_adam: need lr > 0");
  AdamState state;
  state.m = Eigen::VectorXd::Zero(n_params);
  state.v = Eigen::VectorXd::Zero(n_params);
  state.lr = lr;
  return state;
}

void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grads) {
  if (params.size() != state.m.size() || grads.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  if (!grads.allFinite()) {
    std::ostringstream msg;
    msg << "adam_step: non-finite gradient at step " << (state.step + 1);
    throw DivergenceError(msg.str());
  }
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v.array().matrix() +
            (1.0 - state.beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Eigen::ArrayXd m_hat = state.m.array() / bc1;
  const Eigen::ArrayXd v_hat = state.v.array() / bc2;
  params.array() -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
}

}  // namespace wotlab
