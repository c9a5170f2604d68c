#include "wotlab/coupling.hpp"

#include <stdexcept>

namespace wotlab {

void validate(const Coupling& plan) {
  const Eigen::Index n = plan.matrix.rows(), m = plan.matrix.cols();
  if (plan.p.size() != n || plan.q.size() != m)
    throw std::invalid_argument("coupling: marginal length mismatch");
  if ((plan.matrix.array() < -1e-12).any())
    throw std::invalid_argument("coupling: negative entry");
  if (((plan.matrix.rowwise().sum() - plan.p).array().abs() > 1e-9).any())
    throw std::invalid_argument("coupling: row sums do not match p");
  if (((plan.matrix.colwise().sum().transpose() - plan.q).array().abs() >
       1e-9)
          .any())
    throw std::invalid_argument("coupling: column sums do not match q");
}

Coupling product_coupling(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  Coupling plan{p * q.transpose(), p, q};
  return plan;
}

Coupling identity_coupling(const Eigen::VectorXd& p) {
  Coupling plan;
  plan.matrix = p.asDiagonal();
  plan.p = p;
  plan.q = p;
  return plan;
}

}  // namespace wotlab
