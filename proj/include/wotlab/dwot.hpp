#pragma once
// Discrete weak optimal transport on sample supports, solved by
// conditional-gradient (Frank-Wolfe) iterations with an exact linear-OT
// oracle, plus the plan statistics used to study how the variance credit
// reshapes plans.
//
// For a plan pi with row marginals p, the objective is
//   F(pi) = sum_i p_i * C(x_i, pi(.|x_i))
//         = <L, pi> + (gamma/2) sum_i <pi_i, (pi K) _i> / p_i,
// where K is the target Gram matrix and L the per-pair linear cost
//   L_ij = k(x_i,x_i)/2 + (1-gamma)/2 k(y_j,y_j) - k(x_i,y_j).
// F is convex in pi for every gamma >= 0 (the quadratic part is a sum of
// PSD forms), so the FW duality gap is a sound optimality certificate; the
// gamma <= 1 regime is additionally the one where the underlying weak cost
// is a bona fide transport cost.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wotlab/cost.hpp"
#include "wotlab/coupling.hpp"

namespace wotlab {

enum class LineSearch { kExact, kDiminishing };

struct FwConfig {
  int max_iters = 2000;
  // Absolute duality-gap stop; when unset, 1e-6 * |initial objective| (or
  // 1e-12 if that objective is 0).
  std::optional<double> gap_tol;
  LineSearch line_search = LineSearch::kExact;
};

struct FwTraceRow {
  int iter = 0;
  double objective = 0.0;
  double gap = 0.0;
  double step = 0.0;
};

struct FwResult {
  Coupling plan;
  std::vector<FwTraceRow> trace;
  bool converged = false;
  double final_gap = 0.0;
  bool gamma_warning = false;  // gamma > 1: cost not "appropriate"
};

double wot_objective(const WeakCostSpec& spec, const Eigen::MatrixXd& xs,
                     const Eigen::MatrixXd& ys, const Coupling& plan);

// Entrywise gradient with the row marginals held at plan.p:
// G_ij = L_ij + (gamma/p_i) (pi K)_ij.
Eigen::MatrixXd wot_gradient(const WeakCostSpec& spec,
                             const Eigen::MatrixXd& xs,
                             const Eigen::MatrixXd& ys, const Coupling& plan);

// Starts from the product coupling.  Exact line search minimizes the
// quadratic restriction in closed form; when its curvature vanishes
// (gamma = 0 or a flat direction) the classic 2/(t+2) step applies, which
// at t=0 is a full step onto the linear-OT vertex.
FwResult solve_frank_wolfe(const WeakCostSpec& spec, const Eigen::MatrixXd& xs,
                           const Eigen::MatrixXd& ys, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& q, const FwConfig& config);

struct PlanStats {
  double cvar = 0.0;     // sum_i p_i Var(u # pi(.|x_i)), >= 0
  double dist_sq = 0.0;  // sum_ij pi_ij |u(x_i) - u(y_j)|_H^2, >= 0
  double cost = 0.0;     // = dist_sq/2 - gamma*cvar/2
};

PlanStats plan_stats(const WeakCostSpec& spec, const Eigen::MatrixXd& xs,
                     const Eigen::MatrixXd& ys, const Coupling& plan);

struct ConditionalProfile {
  Eigen::VectorXd mean;      // per input row
  Eigen::VectorXd variance;  // per input row
};

// First two moments of each conditional pi(.|x_i) for scalar targets.
ConditionalProfile conditional_profile(const Coupling& plan,
                                       const Eigen::VectorXd& ys);

}  // namespace wotlab
