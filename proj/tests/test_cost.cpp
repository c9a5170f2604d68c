#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wotlab/cost.hpp"
#include "wotlab/dist.hpp"
#include "wotlab/rng.hpp"

using namespace wotlab;

namespace {

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

Empirical two_atoms(double a, double b, double wa) {
  Empirical emp;
  emp.points = Eigen::MatrixXd(2, 1);
  emp.points << a, b;
  emp.weights = {wa, 1.0 - wa};
  return emp;
}

}  // namespace

TEST_CASE("bilinear weak cost equals the moment form") {
  // For k(x,y) = <x,y>:
  //   C(x, mu) = |x - m|^2 / 2 + (1 - gamma)/2 * Var(mu).
  const Empirical mu = two_atoms(-1.0, 3.0, 0.25);
  const double m = 0.25 * -1.0 + 0.75 * 3.0;               // 2
  const double var = 0.25 * 9.0 + 0.75 * 1.0;              // E (y-m)^2
  const Eigen::VectorXd x = vec1(0.5);
  for (const double gamma : {0.0, 0.5, 1.0}) {
    const WeakCostSpec spec{Bilinear{}, gamma};
    const double expected =
        0.5 * (0.5 - m) * (0.5 - m) + 0.5 * (1.0 - gamma) * var;
    CHECK(weak_cost_exact(spec, x, mu) == doctest::Approx(expected));
  }
}

TEST_CASE("distance kernel weak cost reduces to distance moments") {
  // For the distance-induced kernel:
  //   C(x, mu) = E|x - y|^a / 2 - gamma/4 * E|y - y'|^a.
  const Empirical mu = two_atoms(-1.0, 2.0, 0.5);
  const Eigen::VectorXd x = vec1(1.0);
  for (const double alpha : {1.0, 1.5}) {
    for (const double gamma : {0.25, 1.0}) {
      const WeakCostSpec spec{DistanceInduced{alpha}, gamma};
      const double e_xy = 0.5 * std::pow(2.0, alpha) + 0.5 * std::pow(1.0, alpha);
      const double e_yy = 0.5 * std::pow(3.0, alpha);  // cross pairs only
      CHECK(weak_cost_exact(spec, x, mu) ==
            doctest::Approx(0.5 * e_xy - 0.25 * gamma * e_yy));
    }
  }
}

TEST_CASE("estimator matches the exact cost on equal-weight support") {
  // Feeding the support of a uniform empirical measure into the estimator
  // reproduces the exact cost except for the pair-term divisor; check the
  // two agree after reweighting n(n-1) vs n^2 by hand.
  Eigen::MatrixXd outputs(3, 2);
  outputs << 0.0, 1.0, -1.0, 0.5, 2.0, -0.3;
  Empirical mu;
  mu.points = outputs;
  mu.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  Eigen::VectorXd x(2);
  x << 0.3, -0.7;
  const WeakCostSpec spec{DistanceInduced{1.0}, 0.8};
  const double exact = weak_cost_exact(spec, x, mu);
  const double est = weak_cost_estimator(spec, x, outputs);
  // Move the pair term from the unbiased divisor to the V-statistic one.
  double pair_mean_u = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) {
        pair_mean_u += kernel_eval(spec.kernel, outputs.row(i).transpose(),
                                   outputs.row(j).transpose());
      }
    }
  }
  pair_mean_u /= 3.0 * 2.0;
  double pair_mean_v = pair_mean_u * (3.0 * 2.0) / 9.0;
  for (int i = 0; i < 3; ++i) {
    pair_mean_v += kernel_eval(spec.kernel, outputs.row(i).transpose(),
                               outputs.row(i).transpose()) /
                   9.0;
  }
  const double adjusted = est + 0.5 * spec.gamma * (pair_mean_v - pair_mean_u);
  CHECK(adjusted == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("estimator requires at least two outputs") {
  Eigen::MatrixXd one(1, 1);
  one << 2.0;
  const WeakCostSpec spec{Bilinear{}, 1.0};
  CHECK_THROWS_AS(weak_cost_estimator(spec, vec1(0.0), one),
                  std::invalid_argument);
}

TEST_CASE("estimator gradient matches finite differences") {
  Rng rng = Rng::stream(77, "cost_grad");
  for (const KernelSpec kernel :
       {KernelSpec{Bilinear{}}, KernelSpec{DistanceInduced{1.0}},
        KernelSpec{GaussianRBF{3.0}}}) {
    Eigen::MatrixXd outputs(4, 2);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) outputs(i, j) = rng.uniform(-2.0, 2.0);
    Eigen::VectorXd x(2);
    x << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    const WeakCostSpec spec{kernel, 0.7};
    const double delta = 1e-6;
    const Eigen::MatrixXd grad =
        weak_cost_estimator_grad(spec, x, outputs, delta);
    const double h = 1e-6;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd hi = outputs, lo = outputs;
        hi(i, j) += h;
        lo(i, j) -= h;
        const double fd = (weak_cost_estimator(spec, x, hi, delta) -
                           weak_cost_estimator(spec, x, lo, delta)) /
                          (2 * h);
        CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("variance forms agree") {
  const Empirical mu = two_atoms(-2.0, 1.0, 0.3);
  const VarianceForms forms = variance_forms(mu);
  CHECK(forms.centered == doctest::Approx(forms.pairwise).epsilon(1e-12));
  // Hand value: mean = 0.3*-2 + 0.7*1 = 0.1; var = 0.3*4.41 + 0.7*0.81.
  CHECK(forms.centered == doctest::Approx(0.3 * 4.41 + 0.7 * 0.81));
}

TEST_CASE("kernel variance of the bilinear kernel is the plain variance") {
  const Empirical mu = two_atoms(-2.0, 1.0, 0.3);
  CHECK(kernel_variance(KernelSpec{Bilinear{}}, mu) ==
        doctest::Approx(variance_forms(mu).centered).epsilon(1e-12));
}

TEST_CASE("mmd statistics: V nonnegative, U unbiased in expectation") {
  const DistributionSpec spec = Gaussian{vec1(0.0), vec1(1.0)};
  const KernelSpec kernel = DistanceInduced{1.0};
  // V-statistic is a squared RKHS norm: nonnegative even for tiny samples.
  for (int s = 0; s < 20; ++s) {
    const Eigen::MatrixXd a = sample(spec, 4, 100 + s).points;
    const Eigen::MatrixXd b = sample(spec, 4, 200 + s).points;
    CHECK(mmd_squared(kernel, a, b, MmdStatistic::V) >= -1e-12);
  }
  // U-statistic averages to ~0 for equal distributions.
  double mean_u = 0.0;
  const int reps = 400;
  for (int s = 0; s < reps; ++s) {
    const Eigen::MatrixXd a = sample(spec, 16, 1000 + s).points;
    const Eigen::MatrixXd b = sample(spec, 16, 5000 + s).points;
    mean_u += mmd_squared(kernel, a, b, MmdStatistic::U);
  }
  mean_u /= reps;
  CHECK(std::abs(mean_u) < 0.01);
  // U needs two points per side.
  Eigen::MatrixXd one(1, 1);
  one << 0.0;
  CHECK_THROWS_AS(mmd_squared(kernel, one, one, MmdStatistic::U),
                  std::invalid_argument);
}

TEST_CASE("mmd separates distinct distributions under characteristic kernels") {
  const Eigen::MatrixXd a =
      sample(DistributionSpec{Gaussian{vec1(0.0), vec1(1.0)}}, 256, 1).points;
  const Eigen::MatrixXd b =
      sample(DistributionSpec{Gaussian{vec1(2.0), vec1(1.0)}}, 256, 2).points;
  CHECK(mmd_squared(KernelSpec{DistanceInduced{1.0}}, a, b, MmdStatistic::U) >
        0.1);
}

TEST_CASE("cost spec validation and appropriateness") {
  CHECK_THROWS_AS(validate(WeakCostSpec{Bilinear{}, -0.5}),
                  std::invalid_argument);
  CHECK_NOTHROW(validate(WeakCostSpec{Bilinear{}, 10.0}));
  CHECK(appropriate(WeakCostSpec{Bilinear{}, 1.0}));
  CHECK(!appropriate(WeakCostSpec{Bilinear{}, 1.5}));
}
