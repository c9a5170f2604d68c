#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wotlab/gaussian_oracle.hpp"

using namespace wotlab;

namespace {

Gaussian g1d(double mean, double var) {
  Gaussian g;
  g.mean = Eigen::VectorXd::Constant(1, mean);
  g.cov_diag = Eigen::VectorXd::Constant(1, var);
  return g;
}

Gaussian g2d(double var) {
  Gaussian g;
  g.mean = Eigen::VectorXd::Zero(2);
  g.cov_diag = Eigen::VectorXd::Constant(2, var);
  return g;
}

}  // namespace

TEST_CASE("quadratic transport between diagonal gaussians") {
  // Half-convention: W(P,Q) = |dm|^2/2 + sum (sigma_p - sigma_q)^2 / 2.
  CHECK(w2_squared_gaussian(g1d(0.0, 0.25), g1d(0.0, 1.0)) ==
        doctest::Approx(0.125));
  CHECK(w2_squared_gaussian(g1d(2.0, 1.0), g1d(-1.0, 1.0)) ==
        doctest::Approx(4.5));
  CHECK(w2_squared_gaussian(g2d(0.25), g2d(1.0)) == doctest::Approx(0.25));
  // Symmetry and identity.
  CHECK(w2_squared_gaussian(g2d(1.0), g2d(1.0)) == doctest::Approx(0.0));
  CHECK(w2_squared_gaussian(g1d(1.0, 2.0), g1d(0.0, 0.5)) ==
        doctest::Approx(w2_squared_gaussian(g1d(0.0, 0.5), g1d(1.0, 2.0))));
}

TEST_CASE("transport map pushes P onto Q") {
  const Gaussian p = g1d(1.0, 0.25);
  const Gaussian q = g1d(-2.0, 4.0);
  const AffineDiagMap map = ot_map_gaussian(p, q);
  CHECK(map.scale(0) == doctest::Approx(4.0));  // sigma_q / sigma_p = 2/0.5
  Eigen::VectorXd x(1);
  x << 1.5;
  const Eigen::VectorXd y = map(x);
  CHECK(y(0) == doctest::Approx(-2.0 + 4.0 * 0.5));
}

TEST_CASE("gamma-weak value on the canonical pairs") {
  const Gaussian p1 = g1d(0.0, 0.25), q1 = g1d(0.0, 1.0);
  CHECK(w2_gamma_squared_gaussian(p1, q1, 0.25) == doctest::Approx(0.125));
  CHECK(w2_gamma_squared_gaussian(p1, q1, 0.5) == doctest::Approx(0.125));
  CHECK(w2_gamma_squared_gaussian(p1, q1, 0.75) ==
        doctest::Approx(1.0 / 12.0));
  CHECK(w2_gamma_squared_gaussian(p1, q1, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  const Gaussian p2 = g2d(0.25), q2 = g2d(1.0);
  CHECK(w2_gamma_squared_gaussian(p2, q2, 0.25) == doctest::Approx(0.25));
  CHECK(w2_gamma_squared_gaussian(p2, q2, 0.5) == doctest::Approx(0.25));
  CHECK(w2_gamma_squared_gaussian(p2, q2, 0.75) == doctest::Approx(1.0 / 6.0));
  CHECK(w2_gamma_squared_gaussian(p2, q2, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Values never increase in gamma.
  double prev = w2_gamma_squared_gaussian(p1, q1, 0.05);
  for (double gamma = 0.1; gamma <= 1.0001; gamma += 0.05) {
    const double value = w2_gamma_squared_gaussian(p1, q1, gamma);
    CHECK(value <= prev + 1e-12);
    prev = value;
  }
}

TEST_CASE("projection geometry for the canonical pair") {
  const Gaussian p = g2d(0.25), q = g2d(1.0);

  SUBCASE("gamma 1/4: rescaled source dominates, projection is Q") {
    const GaussianProjection proj = projection_gaussian(p, q, 0.25);
    CHECK(proj.target_is_q);
    CHECK(proj.potential.slope_diag(0) == doctest::Approx(2.0));
    CHECK(proj.potential.psi_curvature_diag(0) ==
          doctest::Approx(1.0 / 2.0 - 0.25));
    CHECK(!proj.potential.degenerate);
    Eigen::VectorXd x(2);
    x << 1.0, -0.5;
    CHECK(proj.potential.map()(x)(0) == doctest::Approx(2.0));
    CHECK(proj.potential.map()(x)(1) == doctest::Approx(-1.0));
  }

  SUBCASE("gamma 1/2: boundary tie resolves to Q with flat curvature") {
    const GaussianProjection proj = projection_gaussian(p, q, 0.5);
    CHECK(proj.target_is_q);
    CHECK(proj.potential.slope_diag(0) == doctest::Approx(2.0));
    CHECK(proj.potential.degenerate);
  }

  SUBCASE("gamma 3/4: Q dominates, projection is the rescaled source") {
    const GaussianProjection proj = projection_gaussian(p, q, 0.75);
    CHECK(!proj.target_is_q);
    CHECK(proj.target.cov_diag(0) == doctest::Approx(0.25 / (0.75 * 0.75)));
    // Slope a = sigma_target / sigma_p = (0.5 / 0.75) / 0.5 = 1 / gamma.
    CHECK(proj.potential.slope_diag(0) == doctest::Approx(1.0 / 0.75));
  }

  SUBCASE("gamma 1: projection is the source itself, identity map") {
    const GaussianProjection proj = projection_gaussian(p, q, 1.0);
    CHECK(!proj.target_is_q);
    CHECK(proj.potential.slope_diag(0) == doctest::Approx(1.0));
    CHECK(proj.potential.degenerate);
    Eigen::VectorXd x(2);
    x << 0.7, 0.1;
    CHECK((proj.potential.map()(x) - x).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("slope never exceeds 1/gamma") {
    for (const double gamma : {0.25, 0.5, 0.75, 1.0}) {
      const GaussianProjection proj = projection_gaussian(p, q, gamma);
      CHECK(proj.potential.slope_diag.maxCoeff() <= 1.0 / gamma + 1e-9);
    }
  }
}

TEST_CASE("projection rejects incomparable pairs") {
  // Different means cannot be matched by the restricted potential class.
  CHECK_THROWS_AS(projection_gaussian(g1d(1.0, 0.25), g1d(0.0, 1.0), 1.0),
                  std::domain_error);
  // Mixed variance dominance across coordinates.
  Gaussian p = g2d(0.25), q = g2d(1.0);
  p.cov_diag(1) = 9.0;
  CHECK_THROWS_AS(projection_gaussian(p, q, 1.0), std::domain_error);
}

TEST_CASE("saddle diagnostic matches the phase diagram") {
  const Gaussian p = g2d(0.25), q = g2d(1.0);
  CHECK(fake_solution_diagnostic(p, q, 0.25).verdict ==
        SaddleVerdict::kArginfUnique);
  CHECK(fake_solution_diagnostic(p, q, 0.5).verdict ==
        SaddleVerdict::kDegenerateBoundary);
  CHECK(fake_solution_diagnostic(p, q, 0.75).verdict ==
        SaddleVerdict::kFakeSaddlePointsExist);
  const FakeSolutionReport at_one = fake_solution_diagnostic(p, q, 1.0);
  CHECK(at_one.verdict == SaddleVerdict::kFakeSaddlePointsExist);
  CHECK(at_one.psi_degenerate);
  CHECK(!at_one.projection_equals_q);
  CHECK(verdict_name(SaddleVerdict::kFakeSaddlePointsExist) ==
        "FAKE_SADDLE_POINTS_EXIST");
  CHECK(verdict_name(SaddleVerdict::kArginfUnique) == "ARGINF_UNIQUE");
  CHECK(verdict_name(SaddleVerdict::kDegenerateBoundary) ==
        "DEGENERATE_BOUNDARY");
}

TEST_CASE("convex order for diagonal gaussians") {
  CHECK(convex_order_gaussian(g2d(0.25), g2d(1.0)));
  CHECK(!convex_order_gaussian(g2d(1.0), g2d(0.25)));
  CHECK(convex_order_gaussian(g2d(1.0), g2d(1.0)));
  CHECK(!convex_order_gaussian(g1d(0.5, 0.25), g1d(0.0, 1.0)));
}

TEST_CASE("barycentric error vanishes exactly on the oracle map") {
  const Gaussian p = g2d(0.25), q = g2d(1.0);
  const GaussianProjection proj = projection_gaussian(p, q, 0.5);
  const AffineDiagMap map = proj.potential.map();

  Eigen::MatrixXd inputs(3, 2);
  inputs << 1.0, 0.0, -0.5, 2.0, 0.25, -1.0;
  GroupedOutputs outputs;
  outputs.n_inputs = 3;
  outputs.z_per_x = 2;
  outputs.outputs = Eigen::MatrixXd(6, 2);
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd y = map(inputs.row(i).transpose());
    // Two outputs per input whose mean is exactly the map value.
    outputs.outputs.row(2 * i) = (y + Eigen::VectorXd::Constant(2, 0.3))
                                     .transpose();
    outputs.outputs.row(2 * i + 1) = (y - Eigen::VectorXd::Constant(2, 0.3))
                                         .transpose();
  }
  CHECK(barycentric_error(outputs, proj.potential, inputs) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Shifting every output by a constant produces a visible error.
  outputs.outputs.array() += 0.5;
  CHECK(barycentric_error(outputs, proj.potential, inputs) > 0.1);
}
