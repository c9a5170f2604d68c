#pragma once
// Exact solver for the discrete linear transport problem
//   min <cost, pi>  over  pi >= 0, pi 1 = p, pi^T 1 = q,
// returning a vertex of the transportation polytope.  Used as the linear
// minimization oracle inside the conditional-gradient solver, where an exact
// vertex answer is what makes the duality-gap certificate valid.

#include <Eigen/Dense>

#include "wotlab/coupling.hpp"

namespace wotlab {

// Network simplex on the bipartite flow formulation.  Requires
// |sum(p) - sum(q)| <= 1e-9 and nonnegative marginals; throws
// std::invalid_argument otherwise.
Coupling linear_ot(const Eigen::MatrixXd& cost, const Eigen::VectorXd& p,
                   const Eigen::VectorXd& q);

}  // namespace wotlab
