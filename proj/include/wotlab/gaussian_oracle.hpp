#pragma once
// Closed-form ground truth for axis-aligned Gaussian pairs: Monge maps,
// convex-order tests, the convex-order projection of the rescaled source,
// the gamma-weak transport value, and the saddle-point diagnostic that
// classifies when adversarial training can return non-optimal maps.
//
// Everything here assumes diagonal covariances, which keeps each quantity an
// exact per-coordinate formula.  All W2 values carry the 1/2 factor of the
// quadratic cost |x-y|^2 / 2.

#include <Eigen/Dense>

#include "wotlab/dist.hpp"

namespace wotlab {

// y = scale .* (x - input_mean) + output_mean, coordinatewise.
struct AffineDiagMap {
  Eigen::VectorXd scale;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd output_mean;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& points) const;
};

// The optimal-map derivative data in the restricted quadratic family:
// map(x) = diag(slope_diag) (x - input_mean) + output_mean, with the
// curvature c_i = 1/a_i - gamma of the associated potential.  c_i > 0 for
// every coordinate certifies a unique arginf; any c_i = 0 puts the problem
// on a degenerate boundary where extra optimizers appear.
struct RestrictedPotentialQuadratic {
  Eigen::VectorXd slope_diag;          // a_i > 0
  double gamma = 0.0;
  Eigen::VectorXd psi_curvature_diag;  // c_i = 1/a_i - gamma
  bool degenerate = false;             // any |c_i| <= 1e-9
  Eigen::VectorXd input_mean;
  Eigen::VectorXd output_mean;

  AffineDiagMap map() const;
};

// Monge map of the (1/2)|x-y|^2 cost between diagonal Gaussians:
// x -> diag(sigma_Q / sigma_P) (x - m_P) + m_Q.
AffineDiagMap ot_map_gaussian(const Gaussian& p, const Gaussian& q);

// True iff the means agree (1e-12) and every source variance is <= the
// matching target variance: the dilation / convex order for diagonal
// Gaussians.
bool convex_order_gaussian(const Gaussian& p, const Gaussian& q);

struct GaussianProjection {
  Gaussian target;  // projection of (1/gamma)#P onto {mu dominated by Q}
  RestrictedPotentialQuadratic potential;
  bool target_is_q = false;
};

// Requires the rescaled source and q to be comparable: equal means and the
// per-coordinate variances of (1/gamma)#P all >= (or all <=) those of q.
// Ties resolve toward target = q.  Throws std::domain_error otherwise.
GaussianProjection projection_gaussian(const Gaussian& p, const Gaussian& q,
                                       double gamma);

enum class SaddleVerdict {
  kFakeSaddlePointsExist,  // projection != q: fake optima certified
  kArginfUnique,           // projection = q and all c_i > 0
  kDegenerateBoundary,     // projection = q but some c_i = 0
};

std::string verdict_name(SaddleVerdict verdict);

struct FakeSolutionReport {
  bool projection_equals_q = false;
  bool psi_degenerate = false;
  SaddleVerdict verdict = SaddleVerdict::kDegenerateBoundary;
};

FakeSolutionReport fake_solution_diagnostic(const Gaussian& p,
                                            const Gaussian& q, double gamma);

// (1/2) [ |m_P - m_Q|^2 + sum_i (sigma_P,i - sigma_Q,i)^2 ].
double w2_squared_gaussian(const Gaussian& p, const Gaussian& q);

// Exact gamma-weak quadratic transport value for comparable pairs:
//   gamma * W2^2((1/gamma)#P, Proj) + (gamma-1)/(2 gamma) * M2(P)
//   + (1-gamma)/2 * M2(Q),
// with M2 the full second moment.  Derived by expanding the weak cost over
// barycenters and completing the square in x/gamma; note the sign of the
// source-moment term, which makes the value vanish at gamma = 1 for
// dominated pairs and stay non-increasing in gamma.
double w2_gamma_squared_gaussian(const Gaussian& p, const Gaussian& q,
                                 double gamma);

// mean_x | mean_z T_x(z) - map(x) |, normalized by mean_x |map(x)|.
double barycentric_error(const GroupedOutputs& outputs,
                         const RestrictedPotentialQuadratic& potential,
                         const Eigen::MatrixXd& inputs);

}  // namespace wotlab
