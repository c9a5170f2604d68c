#include "wotlab/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wotlab {

namespace {

inline double smoothed_norm(double sq_norm, double delta) {
  return std::sqrt(sq_norm + delta * delta);
}

// |v|^a with the smoothing convention; sq is |v|^2.
inline double pow_norm(double sq, double alpha, double delta) {
  const double s = smoothed_norm(sq, delta);
  if (s == 0.0) return 0.0;
  return std::pow(s, alpha);
}

}  // namespace

double default_bandwidth(int dim) { return 2.0 * static_cast<double>(dim); }

void validate(const KernelSpec& kernel) {
  if (const auto* d = std::get_if<DistanceInduced>(&kernel)) {
    if (!(d->alpha > 0.0 && d->alpha <= 2.0))
      throw std::invalid_argument("distance kernel: alpha must be in (0,2]");
  } else if (const auto* g = std::get_if<GaussianRBF>(&kernel)) {
    if (!(g->bandwidth > 0.0))
      throw std::invalid_argument("rbf kernel: bandwidth must be positive");
  } else if (const auto* l = std::get_if<Laplacian>(&kernel)) {
    if (!(l->bandwidth > 0.0))
      throw std::invalid_argument(
          "laplacian kernel: bandwidth must be positive");
  }
}

bool characteristic(const KernelSpec& kernel) {
  if (std::holds_alternative<Bilinear>(kernel)) return false;
  if (const auto* d = std::get_if<DistanceInduced>(&kernel))
    return d->alpha < 2.0;
  return true;
}

std::string kernel_name(const KernelSpec& kernel) {
  if (std::holds_alternative<Bilinear>(kernel)) return "bilinear";
  if (const auto* d = std::get_if<DistanceInduced>(&kernel))
    return "distance_alpha_" + std::to_string(d->alpha);
  if (std::holds_alternative<GaussianRBF>(kernel)) return "gaussian_rbf";
  return "laplacian";
}

double kernel_eval_smoothed(const KernelSpec& kernel, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double delta) {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  if (std::holds_alternative<Bilinear>(kernel)) return x.dot(y);
  if (const auto* d = std::get_if<DistanceInduced>(&kernel)) {
    const double a = d->alpha;
    return 0.5 * (pow_norm(x.squaredNorm(), a, delta) +
                  pow_norm(y.squaredNorm(), a, delta) -
                  pow_norm((x - y).squaredNorm(), a, delta));
  }
  if (const auto* g = std::get_if<GaussianRBF>(&kernel))
    return std::exp(-((x - y).squaredNorm() + delta * delta) / g->bandwidth);
  const auto& l = std::get<Laplacian>(kernel);
  return std::exp(-smoothed_norm((x - y).squaredNorm(), delta) / l.bandwidth);
}

double kernel_eval(const KernelSpec& kernel, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  return kernel_eval_smoothed(kernel, x, y, 0.0);
}

Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::MatrixXd& a,
                     const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("gram: dimension mismatch");
  const Eigen::MatrixXd dots = a * b.transpose();
  if (std::holds_alternative<Bilinear>(kernel)) return dots;

  // Pairwise squared distances via the dot-product expansion, clipped at 0
  // against cancellation.
  const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd sq =
      (a2.replicate(1, b.rows()) + b2.transpose().replicate(a.rows(), 1) -
       2.0 * dots)
          .cwiseMax(0.0);

  if (const auto* d = std::get_if<DistanceInduced>(&kernel)) {
    const double half_a = 0.5 * d->alpha;
    const auto powed = [half_a](const auto& m) {
      return m.array().pow(half_a).matrix();
    };
    return 0.5 * (powed(a2).replicate(1, b.rows()) +
                  powed(b2).transpose().replicate(a.rows(), 1) - powed(sq));
  }
  if (const auto* g = std::get_if<GaussianRBF>(&kernel))
    return (-sq.array() / g->bandwidth).exp().matrix();
  const auto& l = std::get<Laplacian>(kernel);
  return (-sq.array().sqrt() / l.bandwidth).exp().matrix();
}

Eigen::VectorXd gram_diag(const KernelSpec& kernel, const Eigen::MatrixXd& a) {
  if (std::holds_alternative<Bilinear>(kernel))
    return a.rowwise().squaredNorm();
  if (const auto* d = std::get_if<DistanceInduced>(&kernel))
    return a.rowwise().squaredNorm().array().pow(0.5 * d->alpha).matrix();
  return Eigen::VectorXd::Ones(a.rows());  // RBF and Laplacian: exp(0)
}

namespace {

// d |v|^a / d v = a * s^(a-2) * v with s = sqrt(|v|^2 + delta^2); zero vector
// when that expression is singular (v = 0, delta = 0).
Eigen::VectorXd pow_norm_grad(const Eigen::VectorXd& v, double alpha,
                              double delta) {
  const double s = smoothed_norm(v.squaredNorm(), delta);
  if (s == 0.0) return Eigen::VectorXd::Zero(v.size());
  return alpha * std::pow(s, alpha - 2.0) * v;
}

}  // namespace

Eigen::VectorXd kernel_grad_y(const KernelSpec& kernel,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, double delta) {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_grad_y: dimension mismatch");
  if (std::holds_alternative<Bilinear>(kernel)) return x;
  if (const auto* d = std::get_if<DistanceInduced>(&kernel)) {
    // d/dy [ (|x|^a + |y|^a - |x-y|^a) / 2 ]
    return 0.5 * (pow_norm_grad(y, d->alpha, delta) +
                  pow_norm_grad(x - y, d->alpha, delta));
  }
  if (const auto* g = std::get_if<GaussianRBF>(&kernel)) {
    const double k = kernel_eval_smoothed(kernel, x, y, delta);
    return (2.0 * k / g->bandwidth) * (x - y);
  }
  const auto& l = std::get<Laplacian>(kernel);
  const double s = smoothed_norm((x - y).squaredNorm(), delta);
  if (s == 0.0) return Eigen::VectorXd::Zero(y.size());
  const double k = kernel_eval_smoothed(kernel, x, y, delta);
  return (k / (l.bandwidth * s)) * (x - y);
}

Eigen::VectorXd kernel_grad_x(const KernelSpec& kernel,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, double delta) {
  return kernel_grad_y(kernel, y, x, delta);
}

Eigen::VectorXd kernel_diag_grad(const KernelSpec& kernel,
                                 const Eigen::VectorXd& o, double delta) {
  if (std::holds_alternative<Bilinear>(kernel)) return 2.0 * o;
  if (const auto* d = std::get_if<DistanceInduced>(&kernel)) {
    // k(o,o) = s(o)^a - s(0)^a / 2; the second term is constant in o.
    return pow_norm_grad(o, d->alpha, delta);
  }
  return Eigen::VectorXd::Zero(o.size());  // RBF/Laplacian diagonal constant
}

}  // namespace wotlab
