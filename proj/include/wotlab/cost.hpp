#pragma once
// Weak kernel transport costs on discrete conditionals, the unbiased
// minibatch estimator used by the neural trainer, variance identities, and
// MMD^2 two-sample statistics.
//
// The exact cost of sending mass at x to the conditional mu is
//   C(x, mu) = k(x,x)/2 + (1-gamma)/2 * E k(y,y) - E k(x,y)
//              + gamma/2 * E k(y,y'),
// the barycentric term plus a gamma-weighted variance credit in feature
// space.  gamma in [0,1] keeps the cost "appropriate" (jointly convex with
// nonnegative variance credit); larger gamma is accepted for stress
// experiments but flagged.

#include <Eigen/Dense>

#include "wotlab/dist.hpp"
#include "wotlab/kernels.hpp"

namespace wotlab {

struct WeakCostSpec {
  KernelSpec kernel;
  double gamma = 1.0;  // >= 0
};

void validate(const WeakCostSpec& spec);

// True iff gamma lies in [0,1], the regime where the cost is known convex in
// the conditional distribution.
bool appropriate(const WeakCostSpec& spec);

// Exact double-sum evaluation against a weighted point set.
double weak_cost_exact(const WeakCostSpec& spec, const Eigen::VectorXd& x,
                       const Empirical& mu);

// Unbiased estimator from a batch of >= 2 conditional outputs (rows).  The
// off-diagonal pair sum uses divisor |Z|(|Z|-1), which makes the expectation
// over i.i.d. outputs equal weak_cost_exact.  delta smooths norms for
// gradient checking (see kernels.hpp); 0 is the exact estimator.
double weak_cost_estimator(const WeakCostSpec& spec, const Eigen::VectorXd& x,
                           const Eigen::MatrixXd& outputs, double delta = 0.0);

// d weak_cost_estimator / d outputs, same shape as outputs.
Eigen::MatrixXd weak_cost_estimator_grad(const WeakCostSpec& spec,
                                         const Eigen::VectorXd& x,
                                         const Eigen::MatrixXd& outputs,
                                         double delta = 0.0);

struct VarianceForms {
  double centered = 0.0;  // E |y - mean|^2
  double pairwise = 0.0;  // E |y - y'|^2 / 2
};

VarianceForms variance_forms(const Empirical& points);

// Var(u # mu) = E k(y,y) - E k(y,y'); nonnegative for PSD kernels.
double kernel_variance(const KernelSpec& kernel, const Empirical& points);

enum class MmdStatistic { V, U };

// Squared maximum mean discrepancy between two sample batches.  V-statistic
// is nonnegative; U-statistic is unbiased and may go negative.
double mmd_squared(const KernelSpec& kernel, const SampleBatch& a,
                   const SampleBatch& b, MmdStatistic statistic);
double mmd_squared(const KernelSpec& kernel, const Eigen::MatrixXd& a,
                   const Eigen::MatrixXd& b, MmdStatistic statistic);

}  // namespace wotlab
