#pragma once
// Transport plans on the discrete polytope: nonnegative matrices with fixed
// row and column sums.

#include <Eigen/Dense>

namespace wotlab {

struct Coupling {
  Eigen::MatrixXd matrix;  // n x m, entries >= 0
  Eigen::VectorXd p;       // row marginal, length n
  Eigen::VectorXd q;       // column marginal, length m
};

// Row sums must equal p and column sums q within 1e-9; entries >= -1e-12.
// Throws std::invalid_argument when violated.
void validate(const Coupling& plan);

// Independent coupling p q^T.
Coupling product_coupling(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// diag(p); requires matching point sets, i.e. square with q = p.
Coupling identity_coupling(const Eigen::VectorXd& p);

}  // namespace wotlab
