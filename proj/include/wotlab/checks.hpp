#pragma once
// Batch-runnable verification suites: algebraic identities, estimator
// unbiasedness, gradient correctness, closed-form oracle agreement, and
// discrete-solver cross-checks against an independent projected-gradient
// reference. Used both by the CLI `checks` subcommand and by tests.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wotlab/cost.hpp"

namespace wotlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;  // first failure, or a summary of what was verified
};

// Cost estimator hook so tests can inject deliberately broken estimators
// (mutation testing of the unbiasedness suite).
using EstimatorFn = std::function<double(
    const WeakCostSpec&, const Eigen::VectorXd&, const Eigen::MatrixXd&)>;

struct CheckOptions {
  std::uint64_t seed = 20260817;
  int identity_instances = 100;
  double identity_tol = 1e-10;
  int unbias_fixed_batches = 100000;
  int unbias_random_specs = 12;
  int unbias_random_batches = 4000;
  int gradient_seeds = 10;
  double net_grad_tol = 1e-5;
  double solver_grad_tol = 1e-6;
  int solver_instances = 20;
  double solver_rel_tol = 1e-3;
  EstimatorFn estimator;  // defaults to the library estimator when empty
};

CheckResult check_identities(const CheckOptions& options);
CheckResult check_unbiasedness(const CheckOptions& options);
CheckResult check_gradients(const CheckOptions& options);
CheckResult check_oracle(const CheckOptions& options);
CheckResult check_solver(const CheckOptions& options);

// Runs the suites whose name contains `only` (all when empty), in a fixed
// order: identities, unbiasedness, gradients, oracle, solver.
std::vector<CheckResult> run_check_suites(const CheckOptions& options,
                                          const std::string& only);

// Independent reference solver for the discrete weak OT objective:
// accelerated projected gradient with Dykstra projection onto the
// transportation polytope, stopped at duality gap <= rel_gap_tol *
// max(1, |F(initial)|).
struct PgResult {
  double objective = 0.0;
  double gap = 0.0;
  int iters = 0;
  bool converged = false;
};
PgResult projected_gradient_wot(const WeakCostSpec& spec,
                                const Eigen::MatrixXd& xs,
                                const Eigen::MatrixXd& ys,
                                const Eigen::VectorXd& p,
                                const Eigen::VectorXd& q, double rel_gap_tol,
                                int max_iters);

}  // namespace wotlab
