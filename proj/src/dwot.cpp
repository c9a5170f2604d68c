#include "wotlab/dwot.hpp"

#include <cmath>
#include <stdexcept>

#include "wotlab/linear_ot.hpp"

namespace wotlab {

namespace {

void check_instance(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                    const Coupling& plan) {
  if (plan.matrix.rows() != xs.rows() || plan.matrix.cols() != ys.rows())
    throw std::invalid_argument("weak ot: plan shape does not match supports");
  if (xs.cols() != ys.cols())
    throw std::invalid_argument("weak ot: support dimension mismatch");
  if ((plan.p.array() <= 0.0).any())
    throw std::invalid_argument(
        "weak ot: zero row marginal; conditionals undefined");
}

// L_ij = k(x_i,x_i)/2 + (1-gamma)/2 k(y_j,y_j) - k(x_i,y_j)
Eigen::MatrixXd linear_part(const WeakCostSpec& spec,
                            const Eigen::MatrixXd& xs,
                            const Eigen::MatrixXd& ys) {
  const Eigen::VectorXd kxx = gram_diag(spec.kernel, xs);
  const Eigen::VectorXd kyy = gram_diag(spec.kernel, ys);
  Eigen::MatrixXd l = -gram(spec.kernel, xs, ys);
  l.colwise() += 0.5 * kxx;
  l.rowwise() += (0.5 * (1.0 - spec.gamma)) * kyy.transpose();
  return l;
}

// sum_i <pi_i, (pi K)_i> / p_i given W = pi*K.
double quadratic_part(const Eigen::MatrixXd& pi, const Eigen::MatrixXd& w,
                      const Eigen::VectorXd& p) {
  return ((pi.array() * w.array()).rowwise().sum() / p.array()).sum();
}

}  // namespace

double wot_objective(const WeakCostSpec& spec, const Eigen::MatrixXd& xs,
                     const Eigen::MatrixXd& ys, const Coupling& plan) {
  validate(spec);
  check_instance(xs, ys, plan);
  const Eigen::MatrixXd l = linear_part(spec, xs, ys);
  const Eigen::MatrixXd k = gram(spec.kernel, ys, ys);
  const Eigen::MatrixXd w = plan.matrix * k;
  return (l.array() * plan.matrix.array()).sum() +
         0.5 * spec.gamma * quadratic_part(plan.matrix, w, plan.p);
}

Eigen::MatrixXd wot_gradient(const WeakCostSpec& spec,
                             const Eigen::MatrixXd& xs,
                             const Eigen::MatrixXd& ys, const Coupling& plan) {
  validate(spec);
  check_instance(xs, ys, plan);
  const Eigen::MatrixXd k = gram(spec.kernel, ys, ys);
  Eigen::MatrixXd g = spec.gamma * (plan.matrix * k);
  g.array().colwise() /= plan.p.array();
  g += linear_part(spec, xs, ys);
  return g;
}

FwResult solve_frank_wolfe(const WeakCostSpec& spec, const Eigen::MatrixXd& xs,
                           const Eigen::MatrixXd& ys, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& q, const FwConfig& config) {
  validate(spec);
  if (config.max_iters < 1)
    throw std::invalid_argument("frank-wolfe: max_iters must be >= 1");
  if (config.gap_tol && !(*config.gap_tol > 0.0))
    throw std::invalid_argument("frank-wolfe: gap_tol must be positive");
  if ((p.array() <= 0.0).any())
    throw std::invalid_argument("frank-wolfe: zero row marginal");
  if ((q.array() < 0.0).any())
    throw std::invalid_argument("frank-wolfe: negative column marginal");

  FwResult result;
  result.gamma_warning = spec.gamma > 1.0;
  Coupling plan = product_coupling(p, q);
  check_instance(xs, ys, plan);

  const Eigen::MatrixXd l = linear_part(spec, xs, ys);
  const Eigen::MatrixXd k = gram(spec.kernel, ys, ys);
  const double gamma = spec.gamma;
  const Eigen::VectorXd inv_p = p.array().inverse();

  // W = pi*K is maintained incrementally: FW vertices are sparse, so the
  // convex-combination update costs O(nnz(s) * m) instead of a dense
  // product.  A periodic dense refresh bounds accumulation error.
  Eigen::MatrixXd w = plan.matrix * k;
  constexpr int kRefreshEvery = 64;

  const auto objective_of = [&](const Eigen::MatrixXd& pi,
                                const Eigen::MatrixXd& w_pi) {
    return (l.array() * pi.array()).sum() +
           0.5 * gamma * quadratic_part(pi, w_pi, p);
  };

  double gap_tol = config.gap_tol.value_or(0.0);
  result.trace.reserve(std::min(config.max_iters, 4096));

  for (int t = 0; t < config.max_iters; ++t) {
    if (t > 0 && t % kRefreshEvery == 0) w = plan.matrix * k;

    Eigen::MatrixXd g = gamma * w;
    g.array().colwise() *= inv_p.array();
    g += l;

    const double objective = objective_of(plan.matrix, w);
    if (t == 0 && !config.gap_tol) {
      gap_tol = 1e-6 * std::abs(objective);
      if (gap_tol == 0.0) gap_tol = 1e-12;
    }

    const Coupling vertex = linear_ot(g, p, q);
    const Eigen::MatrixXd d = vertex.matrix - plan.matrix;
    const double gap = -(g.array() * d.array()).sum();
    result.final_gap = gap;

    if (gap <= gap_tol) {
      result.trace.push_back({t, objective, gap, 0.0});
      result.converged = true;
      break;
    }

    // W_s = s*K through the vertex's nonzeros.
    Eigen::MatrixXd w_s = Eigen::MatrixXd::Zero(w.rows(), w.cols());
    for (Eigen::Index i = 0; i < vertex.matrix.rows(); ++i)
      for (Eigen::Index j = 0; j < vertex.matrix.cols(); ++j)
        if (vertex.matrix(i, j) != 0.0)
          w_s.row(i) += vertex.matrix(i, j) * k.row(j);

    // Along pi + eta*d the objective is a*eta^2 + b*eta + const with
    // b = <G, d> = -gap and a = (gamma/2) sum_i <d_i, (dK)_i> / p_i >= 0.
    double eta;
    if (config.line_search == LineSearch::kExact) {
      const Eigen::MatrixXd w_d = w_s - w;
      const double a = 0.5 * gamma * quadratic_part(d, w_d, p);
      eta = a > 1e-15 ? std::clamp(gap / (2.0 * a), 0.0, 1.0)
                      : 2.0 / (t + 2.0);
    } else {
      eta = 2.0 / (t + 2.0);
    }

    result.trace.push_back({t, objective, gap, eta});
    plan.matrix += eta * d;
    w = (1.0 - eta) * w + eta * w_s;
  }

  if (!result.converged && static_cast<int>(result.trace.size()) ==
                               config.max_iters) {
    // Record the state reached at the iteration cap.
    w = plan.matrix * k;
    Eigen::MatrixXd g = gamma * w;
    g.array().colwise() *= inv_p.array();
    g += l;
    const Coupling vertex = linear_ot(g, p, q);
    const double gap =
        (g.array() * (plan.matrix - vertex.matrix).array()).sum();
    result.final_gap = gap;
    result.converged = gap <= gap_tol;
    result.trace.push_back(
        {config.max_iters, objective_of(plan.matrix, w), gap, 0.0});
  }

  result.plan = std::move(plan);
  validate(result.plan);
  return result;
}

PlanStats plan_stats(const WeakCostSpec& spec, const Eigen::MatrixXd& xs,
                     const Eigen::MatrixXd& ys, const Coupling& plan) {
  validate(spec);
  check_instance(xs, ys, plan);
  const Eigen::VectorXd kxx = gram_diag(spec.kernel, xs);
  const Eigen::VectorXd kyy = gram_diag(spec.kernel, ys);
  const Eigen::MatrixXd kxy = gram(spec.kernel, xs, ys);
  const Eigen::MatrixXd k = gram(spec.kernel, ys, ys);
  const Eigen::MatrixXd w = plan.matrix * k;

  PlanStats stats;
  const double e_kyy = (plan.matrix * kyy).sum();
  stats.cvar = e_kyy - quadratic_part(plan.matrix, w, plan.p);
  stats.dist_sq = plan.matrix.cwiseProduct(
                      kxx.replicate(1, ys.rows()) +
                      kyy.transpose().replicate(xs.rows(), 1) - 2.0 * kxy)
                      .sum();
  stats.cost = 0.5 * stats.dist_sq - 0.5 * spec.gamma * stats.cvar;
  return stats;
}

ConditionalProfile conditional_profile(const Coupling& plan,
                                       const Eigen::VectorXd& ys) {
  if (plan.matrix.cols() != ys.size())
    throw std::invalid_argument("conditional_profile: support size mismatch");
  if ((plan.p.array() <= 0.0).any())
    throw std::invalid_argument("conditional_profile: zero row marginal");
  ConditionalProfile prof;
  prof.mean = (plan.matrix * ys).array() / plan.p.array();
  const Eigen::VectorXd second =
      (plan.matrix * ys.array().square().matrix()).array() / plan.p.array();
  prof.variance =
      (second.array() - prof.mean.array().square()).cwiseMax(0.0);
  return prof;
}

}  // namespace wotlab
