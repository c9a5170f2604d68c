#pragma once
// Positive-definite symmetric kernels, their Gram matrices and gradients.
//
// Families: Bilinear <x,y>; DistanceInduced
// k(x,y) = (|x|^a + |y|^a - |x-y|^a)/2 for a in (0,2]; GaussianRBF
// exp(-|x-y|^2/bandwidth); Laplacian exp(-|x-y|/bandwidth).  Bilinear and
// DistanceInduced with a=2 coincide and are not characteristic; the others
// are.
//
// Gradients accept a smoothing parameter delta: every Euclidean norm |v| in
// a kernel formula is replaced by sqrt(|v|^2 + delta^2).  delta = 0 is the
// exact kernel with the convention that the gradient of |v|^a at v = 0 is 0.
// The smoothed *evaluation* is exposed too, so finite-difference checks can
// differentiate exactly the function whose gradient is computed.

#include <variant>

#include <Eigen/Dense>

namespace wotlab {

struct Bilinear {};

struct DistanceInduced {
  double alpha = 1.0;  // in (0, 2]
};

struct GaussianRBF {
  double bandwidth = 1.0;  // positive
};

struct Laplacian {
  double bandwidth = 1.0;  // positive
};

using KernelSpec = std::variant<Bilinear, DistanceInduced, GaussianRBF, Laplacian>;

// Appendix-style default exp(-|x-y|^2 / (2 * dim)).
double default_bandwidth(int dim);

void validate(const KernelSpec& kernel);

// True when the kernel mean embedding is injective: DistanceInduced with
// alpha in (0,2), GaussianRBF, Laplacian.  False for Bilinear and for
// DistanceInduced alpha = 2 (which only sees means and variances).
bool characteristic(const KernelSpec& kernel);

std::string kernel_name(const KernelSpec& kernel);

double kernel_eval(const KernelSpec& kernel, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

// Smoothed evaluation (see header comment); delta = 0 is kernel_eval.
double kernel_eval_smoothed(const KernelSpec& kernel, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double delta);

// Gram matrix K(i,j) = k(a_i, b_j) for row-sample matrices.
Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::MatrixXd& a,
                     const Eigen::MatrixXd& b);

// Diagonal terms k(a_i, a_i).
Eigen::VectorXd gram_diag(const KernelSpec& kernel, const Eigen::MatrixXd& a);

// d k(x,y) / d y at the smoothing level delta.
Eigen::VectorXd kernel_grad_y(const KernelSpec& kernel,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, double delta);

// d k(x,y) / d x; equals kernel_grad_y with arguments swapped (symmetry).
Eigen::VectorXd kernel_grad_x(const KernelSpec& kernel,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, double delta);

// d k(o,o) / d o, both slots moving together.
Eigen::VectorXd kernel_diag_grad(const KernelSpec& kernel,
                                 const Eigen::VectorXd& o, double delta);

}  // namespace wotlab
