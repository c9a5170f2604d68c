#include "wotlab/gaussian_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace wotlab {

namespace {

constexpr double kMeanTol = 1e-12;
constexpr double kDegenerateTol = 1e-9;

void check_pair(const Gaussian& p, const Gaussian& q) {
  validate(DistributionSpec(p));
  validate(DistributionSpec(q));
  if (p.mean.size() != q.mean.size())
    throw std::invalid_argument("gaussian oracle: dimension mismatch");
}

double second_moment(const Gaussian& g) {
  return g.mean.squaredNorm() + g.cov_diag.sum();
}

}  // namespace

Eigen::VectorXd AffineDiagMap::operator()(const Eigen::VectorXd& x) const {
  return (scale.array() * (x - input_mean).array()).matrix() + output_mean;
}

Eigen::MatrixXd AffineDiagMap::apply_rows(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd out = points.rowwise() - input_mean.transpose();
  out.array().rowwise() *= scale.transpose().array();
  out.rowwise() += output_mean.transpose();
  return out;
}

AffineDiagMap RestrictedPotentialQuadratic::map() const {
  return AffineDiagMap{slope_diag, input_mean, output_mean};
}

AffineDiagMap ot_map_gaussian(const Gaussian& p, const Gaussian& q) {
  check_pair(p, q);
  AffineDiagMap m;
  m.scale = (q.cov_diag.array() / p.cov_diag.array()).sqrt();
  m.input_mean = p.mean;
  m.output_mean = q.mean;
  return m;
}

bool convex_order_gaussian(const Gaussian& p, const Gaussian& q) {
  check_pair(p, q);
  if (((p.mean - q.mean).array().abs() > kMeanTol).any()) return false;
  return (p.cov_diag.array() <= q.cov_diag.array() + kMeanTol).all();
}

GaussianProjection projection_gaussian(const Gaussian& p, const Gaussian& q,
                                       double gamma) {
  check_pair(p, q);
  if (!(gamma > 0.0))
    throw std::invalid_argument("projection: gamma must be positive");

  const Gaussian scaled{p.mean / gamma,
                        p.cov_diag / (gamma * gamma)};
  if (((scaled.mean - q.mean).array().abs() > kMeanTol).any())
    throw std::domain_error(
        "projection: rescaled source and target means differ; only the "
        "mean-matched comparable case has a closed form");

  const auto sv = scaled.cov_diag.array();
  const auto qv = q.cov_diag.array();
  GaussianProjection out;
  if ((sv >= qv - kDegenerateTol).all()) {
    out.target = q;
    out.target_is_q = true;
  } else if ((sv <= qv + kDegenerateTol).all()) {
    out.target = scaled;
    out.target_is_q = false;
  } else {
    throw std::domain_error(
        "projection: rescaled source and target are incomparable in convex "
        "order (mixed variance signs); out of scope");
  }

  RestrictedPotentialQuadratic& pot = out.potential;
  pot.gamma = gamma;
  pot.slope_diag =
      (out.target.cov_diag.array() / p.cov_diag.array()).sqrt();
  pot.psi_curvature_diag =
      pot.slope_diag.array().inverse() - gamma;
  pot.degenerate =
      (pot.psi_curvature_diag.array().abs() <= kDegenerateTol).any();
  pot.input_mean = p.mean;
  pot.output_mean = out.target.mean;
  return out;
}

std::string verdict_name(SaddleVerdict verdict) {
  switch (verdict) {
    case SaddleVerdict::kFakeSaddlePointsExist:
      return "FAKE_SADDLE_POINTS_EXIST";
    case SaddleVerdict::kArginfUnique:
      return "ARGINF_UNIQUE";
    case SaddleVerdict::kDegenerateBoundary:
      return "DEGENERATE_BOUNDARY";
  }
  return "UNKNOWN";
}

FakeSolutionReport fake_solution_diagnostic(const Gaussian& p,
                                            const Gaussian& q, double gamma) {
  const GaussianProjection proj = projection_gaussian(p, q, gamma);
  FakeSolutionReport report;
  report.projection_equals_q =
      proj.target_is_q ||
      (((proj.target.mean - q.mean).array().abs() <= kMeanTol).all() &&
       ((proj.target.cov_diag - q.cov_diag).array().abs() <= kDegenerateTol)
           .all());
  report.psi_degenerate = proj.potential.degenerate;
  if (!report.projection_equals_q)
    report.verdict = SaddleVerdict::kFakeSaddlePointsExist;
  else if (!report.psi_degenerate)
    report.verdict = SaddleVerdict::kArginfUnique;
  else
    report.verdict = SaddleVerdict::kDegenerateBoundary;
  return report;
}

double w2_squared_gaussian(const Gaussian& p, const Gaussian& q) {
  check_pair(p, q);
  const double mean_part = (p.mean - q.mean).squaredNorm();
  const double sd_part =
      (p.cov_diag.array().sqrt() - q.cov_diag.array().sqrt())
          .square()
          .sum();
  return 0.5 * (mean_part + sd_part);
}

double w2_gamma_squared_gaussian(const Gaussian& p, const Gaussian& q,
                                 double gamma) {
  const GaussianProjection proj = projection_gaussian(p, q, gamma);
  const Gaussian scaled{p.mean / gamma, p.cov_diag / (gamma * gamma)};
  const double transport = gamma * w2_squared_gaussian(scaled, proj.target);
  const double source_term =
      (gamma - 1.0) / (2.0 * gamma) * second_moment(p);
  const double target_term = 0.5 * (1.0 - gamma) * second_moment(q);
  return transport + source_term + target_term;
}

double barycentric_error(const GroupedOutputs& outputs,
                         const RestrictedPotentialQuadratic& potential,
                         const Eigen::MatrixXd& inputs) {
  if (outputs.n_inputs != inputs.rows())
    throw std::invalid_argument("barycentric_error: input count mismatch");
  if (outputs.z_per_x < 1 ||
      outputs.outputs.rows() !=
          static_cast<Eigen::Index>(outputs.n_inputs) * outputs.z_per_x)
    throw std::invalid_argument("barycentric_error: bad output grouping");

  const AffineDiagMap map = potential.map();
  double err_sum = 0.0, ref_sum = 0.0;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const Eigen::VectorXd bary =
        outputs.outputs
            .middleRows(i * outputs.z_per_x, outputs.z_per_x)
            .colwise()
            .mean();
    const Eigen::VectorXd ref = map(inputs.row(i));
    err_sum += (bary - ref).norm();
    ref_sum += ref.norm();
  }
  if (ref_sum == 0.0)
    throw std::domain_error(
        "barycentric_error: reference map is identically zero; relative "
        "error undefined");
  return err_sum / ref_sum;
}

}  // namespace wotlab
