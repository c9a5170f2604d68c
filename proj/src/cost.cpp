#include "wotlab/cost.hpp"

#include <stdexcept>

namespace wotlab {

void validate(const WeakCostSpec& spec) {
  validate(spec.kernel);
  if (!(spec.gamma >= 0.0))
    throw std::invalid_argument("weak cost: gamma must be nonnegative");
}

bool appropriate(const WeakCostSpec& spec) {
  return spec.gamma >= 0.0 && spec.gamma <= 1.0;
}

double weak_cost_exact(const WeakCostSpec& spec, const Eigen::VectorXd& x,
                       const Empirical& mu) {
  validate(spec);
  validate(mu);
  const Eigen::Index m = mu.points.rows();
  Eigen::Map<const Eigen::VectorXd> w(mu.weights.data(), m);

  const double kxx = kernel_eval(spec.kernel, x, x);
  const Eigen::VectorXd diag = gram_diag(spec.kernel, mu.points);
  const Eigen::MatrixXd kxy =
      gram(spec.kernel, x.transpose(), mu.points);  // 1 x m
  const Eigen::MatrixXd kyy = gram(spec.kernel, mu.points, mu.points);

  const double e_diag = w.dot(diag);
  const double e_cross = kxy.row(0).dot(w);
  const double e_pair = w.dot(kyy * w);
  return 0.5 * kxx + 0.5 * (1.0 - spec.gamma) * e_diag - e_cross +
         0.5 * spec.gamma * e_pair;
}

double weak_cost_estimator(const WeakCostSpec& spec, const Eigen::VectorXd& x,
                           const Eigen::MatrixXd& outputs, double delta) {
  validate(spec);
  const Eigen::Index zn = outputs.rows();
  if (zn < 2)
    throw std::invalid_argument(
        "weak_cost_estimator: at least two outputs required for the "
        "unbiased pair term");

  const double kxx = kernel_eval_smoothed(spec.kernel, x, x, delta);
  double e_diag = 0.0, e_cross = 0.0, pair_sum = 0.0;
  for (Eigen::Index i = 0; i < zn; ++i) {
    const Eigen::VectorXd oi = outputs.row(i);
    e_diag += kernel_eval_smoothed(spec.kernel, oi, oi, delta);
    e_cross += kernel_eval_smoothed(spec.kernel, x, oi, delta);
    for (Eigen::Index j = 0; j < zn; ++j) {
      if (j == i) continue;
      pair_sum += kernel_eval_smoothed(spec.kernel, oi, outputs.row(j), delta);
    }
  }
  const double n = static_cast<double>(zn);
  return 0.5 * kxx + 0.5 * (1.0 - spec.gamma) * e_diag / n - e_cross / n +
         0.5 * spec.gamma * pair_sum / (n * (n - 1.0));
}

Eigen::MatrixXd weak_cost_estimator_grad(const WeakCostSpec& spec,
                                         const Eigen::VectorXd& x,
                                         const Eigen::MatrixXd& outputs,
                                         double delta) {
  validate(spec);
  const Eigen::Index zn = outputs.rows();
  if (zn < 2)
    throw std::invalid_argument(
        "weak_cost_estimator_grad: at least two outputs required");
  const double n = static_cast<double>(zn);
  Eigen::MatrixXd grad(zn, outputs.cols());
  for (Eigen::Index i = 0; i < zn; ++i) {
    const Eigen::VectorXd oi = outputs.row(i);
    Eigen::VectorXd g =
        (0.5 * (1.0 - spec.gamma) / n) *
            kernel_diag_grad(spec.kernel, oi, delta) -
        (1.0 / n) * kernel_grad_y(spec.kernel, x, oi, delta);
    // The ordered pair sum hits o_i once in each slot; symmetry folds the
    // two into a single grad_x term with weight gamma / (n(n-1)).
    Eigen::VectorXd pair = Eigen::VectorXd::Zero(outputs.cols());
    for (Eigen::Index j = 0; j < zn; ++j) {
      if (j == i) continue;
      pair += kernel_grad_x(spec.kernel, oi, outputs.row(j), delta);
    }
    g += (spec.gamma / (n * (n - 1.0))) * pair;
    grad.row(i) = g;
  }
  return grad;
}

VarianceForms variance_forms(const Empirical& points) {
  validate(points);
  const Eigen::Index m = points.points.rows();
  Eigen::Map<const Eigen::VectorXd> w(points.weights.data(), m);
  VarianceForms out;

  const Eigen::VectorXd mean = points.points.transpose() * w;
  const Eigen::MatrixXd centered =
      points.points.rowwise() - mean.transpose();
  out.centered = w.dot(centered.rowwise().squaredNorm());

  // Pairwise form via the dot-product expansion: E|y-y'|^2 / 2
  // = E|y|^2 - |E y|^2 in exact arithmetic, but evaluate the double sum
  // directly so the identity is a genuine cross-check.
  double pair = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      pair += w[i] * w[j] *
              (points.points.row(i) - points.points.row(j)).squaredNorm();
  out.pairwise = 0.5 * pair;
  return out;
}

double kernel_variance(const KernelSpec& kernel, const Empirical& points) {
  validate(kernel);
  validate(points);
  const Eigen::Index m = points.points.rows();
  Eigen::Map<const Eigen::VectorXd> w(points.weights.data(), m);
  const Eigen::VectorXd diag = gram_diag(kernel, points.points);
  const Eigen::MatrixXd kyy = gram(kernel, points.points, points.points);
  return w.dot(diag) - w.dot(kyy * w);
}

double mmd_squared(const KernelSpec& kernel, const Eigen::MatrixXd& a,
                   const Eigen::MatrixXd& b, MmdStatistic statistic) {
  validate(kernel);
  if (a.cols() != b.cols())
    throw std::invalid_argument("mmd_squared: dimension mismatch");
  const Eigen::Index n = a.rows(), m = b.rows();
  if (n < 1 || m < 1) throw std::invalid_argument("mmd_squared: empty batch");
  const Eigen::MatrixXd kaa = gram(kernel, a, a);
  const Eigen::MatrixXd kbb = gram(kernel, b, b);
  const Eigen::MatrixXd kab = gram(kernel, a, b);
  const double cross = 2.0 * kab.sum() / (static_cast<double>(n) * m);
  if (statistic == MmdStatistic::V)
    return kaa.mean() - cross + kbb.mean();
  if (n < 2 || m < 2)
    throw std::invalid_argument(
        "mmd_squared: U-statistic needs at least two points per batch");
  const double ua = (kaa.sum() - kaa.trace()) /
                    (static_cast<double>(n) * (n - 1));
  const double ub = (kbb.sum() - kbb.trace()) /
                    (static_cast<double>(m) * (m - 1));
  return ua - cross + ub;
}

double mmd_squared(const KernelSpec& kernel, const SampleBatch& a,
                   const SampleBatch& b, MmdStatistic statistic) {
  return mmd_squared(kernel, a.points, b.points, statistic);
}

}  // namespace wotlab
