#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wotlab/kernels.hpp"

using namespace wotlab;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Central finite difference of k(x, .) at y.
Eigen::VectorXd fd_grad_y(const KernelSpec& kernel, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y, double delta,
                          double h = 1e-6) {
  Eigen::VectorXd grad(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Eigen::VectorXd hi = y, lo = y;
    hi(i) += h;
    lo(i) -= h;
    grad(i) = (kernel_eval_smoothed(kernel, x, hi, delta) -
               kernel_eval_smoothed(kernel, x, lo, delta)) /
              (2 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("kernel values match hand evaluation") {
  const Eigen::VectorXd x = vec2(1.0, 2.0);
  const Eigen::VectorXd y = vec2(-1.0, 0.5);
  const double dot = 1.0 * -1.0 + 2.0 * 0.5;           // 0
  const double dist = (x - y).norm();                  // sqrt(4 + 2.25)
  CHECK(kernel_eval(Bilinear{}, x, y) == doctest::Approx(dot));
  CHECK(kernel_eval(DistanceInduced{1.0}, x, y) ==
        doctest::Approx(0.5 * (x.norm() + y.norm() - dist)));
  CHECK(kernel_eval(DistanceInduced{1.5}, x, y) ==
        doctest::Approx(0.5 * (std::pow(x.norm(), 1.5) +
                               std::pow(y.norm(), 1.5) -
                               std::pow(dist, 1.5))));
  CHECK(kernel_eval(GaussianRBF{2.0}, x, y) ==
        doctest::Approx(std::exp(-dist * dist / 2.0)));
  CHECK(kernel_eval(Laplacian{2.0}, x, y) ==
        doctest::Approx(std::exp(-dist / 2.0)));
}

TEST_CASE("distance-induced kernel reproduces the negative distance form") {
  // k(x,y) + k(x',y') - k(x,y') - k(x',y) telescopes to a pure distance
  // expression; check on a random quadruple for alpha = 1.
  const Eigen::VectorXd x = vec2(0.3, -1.2), xp = vec2(2.0, 0.1);
  const Eigen::VectorXd y = vec2(-0.7, 0.4), yp = vec2(1.1, 1.9);
  const DistanceInduced k{1.0};
  const double lhs = kernel_eval(k, x, y) + kernel_eval(k, xp, yp) -
                     kernel_eval(k, x, yp) - kernel_eval(k, xp, y);
  const double rhs = 0.5 * ((x - yp).norm() + (xp - y).norm() -
                            (x - y).norm() - (xp - yp).norm());
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("gram agrees with pointwise evaluation") {
  Eigen::MatrixXd a(3, 2), b(2, 2);
  a << 0, 0, 1, -1, 0.5, 2;
  b << 1, 1, -2, 0.25;
  for (const KernelSpec kernel :
       {KernelSpec{Bilinear{}}, KernelSpec{DistanceInduced{1.0}},
        KernelSpec{GaussianRBF{3.0}}, KernelSpec{Laplacian{1.5}}}) {
    const Eigen::MatrixXd g = gram(kernel, a, b);
    REQUIRE(g.rows() == 3);
    REQUIRE(g.cols() == 2);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(g(i, j) == doctest::Approx(kernel_eval(
                             kernel, a.row(i).transpose(),
                             b.row(j).transpose())));
      }
    }
    const Eigen::VectorXd d = gram_diag(kernel, a);
    for (int i = 0; i < 3; ++i) {
      CHECK(d(i) == doctest::Approx(kernel_eval(kernel, a.row(i).transpose(),
                                                a.row(i).transpose())));
    }
  }
}

TEST_CASE("kernel gradients match finite differences") {
  const Eigen::VectorXd x = vec2(0.7, -0.3);
  const Eigen::VectorXd y = vec2(-0.2, 1.4);
  for (const KernelSpec kernel :
       {KernelSpec{Bilinear{}}, KernelSpec{DistanceInduced{1.0}},
        KernelSpec{DistanceInduced{1.5}}, KernelSpec{GaussianRBF{2.5}},
        KernelSpec{Laplacian{2.0}}}) {
    for (const double delta : {0.0, 1e-3}) {
      const Eigen::VectorXd fd = fd_grad_y(kernel, x, y, delta);
      const Eigen::VectorXd an = kernel_grad_y(kernel, x, y, delta);
      CHECK((fd - an).cwiseAbs().maxCoeff() < 1e-6);
      // Gradient in the first slot by symmetry of all these kernels.
      const Eigen::VectorXd an_x = kernel_grad_x(kernel, x, y, delta);
      const Eigen::VectorXd fd_x = fd_grad_y(kernel, y, x, delta);
      CHECK((fd_x - an_x).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("smoothing regularizes the distance kernel at coincidence") {
  const Eigen::VectorXd x = vec2(0.5, 0.5);
  const DistanceInduced k{1.0};
  // Exact evaluation at y = x is finite; the non-smooth |x-y| term follows
  // the gradient-zero convention there, leaving only the |y| term.
  CHECK(std::isfinite(kernel_eval(k, x, x)));
  const Eigen::VectorXd g0 = kernel_grad_y(KernelSpec{k}, x, x, 0.0);
  const Eigen::VectorXd norm_term = x / (2.0 * x.norm());
  CHECK((g0 - norm_term).cwiseAbs().maxCoeff() < 1e-12);
  // Smoothed gradient is finite and close to FD of the smoothed kernel.
  const double delta = 1e-2;
  const Eigen::VectorXd fd = fd_grad_y(KernelSpec{k}, x, x, delta);
  const Eigen::VectorXd an = kernel_grad_y(KernelSpec{k}, x, x, delta);
  CHECK((fd - an).cwiseAbs().maxCoeff() < 1e-6);
  // Smoothed value approaches the exact one as delta -> 0.
  const Eigen::VectorXd y = vec2(-1.0, 2.0);
  CHECK(kernel_eval_smoothed(KernelSpec{k}, x, y, 1e-9) ==
        doctest::Approx(kernel_eval(KernelSpec{k}, x, y)).epsilon(1e-8));
}

TEST_CASE("diagonal gradient differentiates k(o,o)") {
  const Eigen::VectorXd o = vec2(1.2, -0.8);
  for (const KernelSpec kernel :
       {KernelSpec{Bilinear{}}, KernelSpec{DistanceInduced{1.0}},
        KernelSpec{DistanceInduced{1.7}}}) {
    const double h = 1e-6;
    Eigen::VectorXd fd(2);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd hi = o, lo = o;
      hi(i) += h;
      lo(i) -= h;
      fd(i) = (kernel_eval_smoothed(kernel, hi, hi, 0.0) -
               kernel_eval_smoothed(kernel, lo, lo, 0.0)) /
              (2 * h);
    }
    const Eigen::VectorXd an = kernel_diag_grad(kernel, o, 0.0);
    CHECK((fd - an).cwiseAbs().maxCoeff() < 1e-5);
  }
  // RBF and Laplacian have constant diagonal.
  CHECK(kernel_diag_grad(KernelSpec{GaussianRBF{2.0}}, o, 0.0)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("metadata and validation") {
  CHECK(default_bandwidth(2) == doctest::Approx(4.0));
  CHECK(default_bandwidth(1) == doctest::Approx(2.0));
  CHECK(!characteristic(KernelSpec{Bilinear{}}));
  CHECK(characteristic(KernelSpec{DistanceInduced{1.0}}));
  CHECK(!characteristic(KernelSpec{DistanceInduced{2.0}}));
  CHECK(characteristic(KernelSpec{GaussianRBF{1.0}}));
  CHECK(characteristic(KernelSpec{Laplacian{1.0}}));
  CHECK(kernel_name(KernelSpec{DistanceInduced{1.0}}).rfind("distance", 0) ==
        0);
  CHECK_THROWS_AS(validate(KernelSpec{DistanceInduced{0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(KernelSpec{DistanceInduced{2.5}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(KernelSpec{GaussianRBF{0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(KernelSpec{Laplacian{-1.0}}),
                  std::invalid_argument);
}
