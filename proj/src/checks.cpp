#include "wotlab/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "wotlab/coupling.hpp"
#include "wotlab/dwot.hpp"
#include "wotlab/gaussian_oracle.hpp"
#include "wotlab/linear_ot.hpp"
#include "wotlab/mlp.hpp"
#include "wotlab/not_trainer.hpp"
#include "wotlab/rng.hpp"

namespace wotlab {
namespace {

using Clock = std::chrono::steady_clock;

// Collects assertion failures; the suite passes when none were recorded.
struct Recorder {
  bool passed = true;
  std::string first_failure;
  int assertions = 0;

  void expect(bool ok, const std::string& what) {
    ++assertions;
    if (!ok && passed) {
      passed = false;
      first_failure = what;
    }
  }

  void expect_near(double actual, double expected, double tol,
                   const std::string& what) {
    std::ostringstream msg;
    msg << what << ": got " << actual << ", expected " << expected
        << " (tol " << tol << ")";
    expect(std::isfinite(actual) && std::abs(actual - expected) <= tol,
           msg.str());
  }

  CheckResult finish(const std::string& name, Clock::time_point start) const {
    CheckResult result;
    result.name = name;
    result.passed = passed;
    result.seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    if (passed) {
      std::ostringstream msg;
      msg << assertions << " assertions";
      result.detail = msg.str();
    } else {
      result.detail = first_failure;
    }
    return result;
  }
};

Eigen::VectorXd random_vector(Rng& rng, int d, double scale) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * rng.normal();
  return v;
}

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

Empirical random_empirical(Rng& rng, int d, int atoms, double mean_shift) {
  Empirical mu;
  mu.points = random_matrix(rng, atoms, d, 1.0);
  mu.points.array() += mean_shift;
  double total = 0.0;
  mu.weights.resize(atoms);
  for (auto& w : mu.weights) {
    w = 0.1 + rng.uniform01();
    total += w;
  }
  for (auto& w : mu.weights) w /= total;
  return mu;
}

KernelSpec kernel_cycle(int index, Rng& rng) {
  switch (index % 4) {
    case 0: return Bilinear{};
    case 1: return DistanceInduced{rng.uniform(0.3, 1.9)};
    case 2: return GaussianRBF{rng.uniform(0.5, 4.0)};
    default: return Laplacian{rng.uniform(0.5, 4.0)};
  }
}

// E_mu k(x, y) and the double integral E_{mu x mu} k(y, y').
double mean_cross(const KernelSpec& kernel, const Eigen::VectorXd& x,
                  const Empirical& mu) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < mu.points.rows(); ++i) {
    out += mu.weights[i] * kernel_eval(kernel, x, mu.points.row(i).transpose());
  }
  return out;
}

double mean_pair(const KernelSpec& kernel, const Empirical& mu) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < mu.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu.points.rows(); ++j) {
      out += mu.weights[i] * mu.weights[j] *
             kernel_eval(kernel, mu.points.row(i).transpose(),
                         mu.points.row(j).transpose());
    }
  }
  return out;
}

double mean_diag(const KernelSpec& kernel, const Empirical& mu) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < mu.points.rows(); ++i) {
    const Eigen::VectorXd y = mu.points.row(i).transpose();
    out += mu.weights[i] * kernel_eval(kernel, y, y);
  }
  return out;
}

// Random feasible plan: rows are p_i times a random simplex point.
Coupling random_plan(Rng& rng, int n, int m) {
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = 0.2 + rng.uniform01();
  p /= p.sum();
  Eigen::MatrixXd pi(n, m);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row(m);
    double total = 0.0;
    for (int j = 0; j < m; ++j) {
      row(j) = 0.05 + rng.uniform01();
      total += row(j);
    }
    pi.row(i) = (p(i) / total) * row.transpose();
  }
  Coupling plan;
  plan.matrix = pi;
  plan.p = p;
  plan.q = pi.colwise().sum().transpose();
  return plan;
}

EstimatorFn effective_estimator(const CheckOptions& options) {
  if (options.estimator) return options.estimator;
  return [](const WeakCostSpec& spec, const Eigen::VectorXd& x,
            const Eigen::MatrixXd& outputs) {
    return weak_cost_estimator(spec, x, outputs);
  };
}

// Euclidean projection onto {pi >= 0, pi 1 = p, pi^T 1 = q} via Dykstra's
// alternating method between the marginal affine subspace and the
// nonnegative cone.
Eigen::MatrixXd project_transport(const Eigen::MatrixXd& v,
                                  const Eigen::VectorXd& p,
                                  const Eigen::VectorXd& q) {
  const Eigen::Index n = v.rows(), m = v.cols();
  Eigen::MatrixXd x = v;
  Eigen::MatrixXd inc_a = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd inc_c = Eigen::MatrixXd::Zero(n, m);
  const double nm = static_cast<double>(n) * static_cast<double>(m);
  for (int it = 0; it < 600; ++it) {
    // Affine part: subtract the least-squares marginal correction.
    Eigen::MatrixXd work = x + inc_a;
    const Eigen::VectorXd r = work.rowwise().sum() - p;
    const Eigen::VectorXd c = work.colwise().sum().transpose() - q;
    const double total = r.sum();
    Eigen::MatrixXd y = work;
    y.colwise() -= r / static_cast<double>(m);
    y.rowwise() -= (c / static_cast<double>(n)).transpose();
    y.array() += total / nm;
    inc_a = work - y;
    // Cone part: clip.
    work = y + inc_c;
    Eigen::MatrixXd x_next = work.cwiseMax(0.0);
    inc_c = work - x_next;
    const double change = (x_next - x).cwiseAbs().maxCoeff();
    x = std::move(x_next);
    if (change <= 1e-14) break;
  }
  return x;
}

double spectral_norm_upper(const Eigen::MatrixXd& k) {
  // Power iteration on the PSD Gram matrix, padded by 5% for safety.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(k.rows());
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd w = k * v;
    lambda = w.norm();
    if (lambda <= 0.0) return 1e-12;
    v = w / lambda;
  }
  return 1.05 * lambda + 1e-12;
}

}  // namespace

PgResult projected_gradient_wot(const WeakCostSpec& spec,
                                const Eigen::MatrixXd& xs,
                                const Eigen::MatrixXd& ys,
                                const Eigen::VectorXd& p,
                                const Eigen::VectorXd& q, double rel_gap_tol,
                                int max_iters) {
  Coupling state = product_coupling(p, q);
  const double f0 = wot_objective(spec, xs, ys, state);
  const double tol = rel_gap_tol * std::max(1.0, std::abs(f0));

  const Eigen::MatrixXd k = gram(spec.kernel, ys, ys);
  const double l_const =
      spec.gamma * p.array().inverse().maxCoeff() * spectral_norm_upper(k);
  const double step = l_const > 0.0 ? 1.0 / l_const : 1.0;

  PgResult result;
  Eigen::MatrixXd x = state.matrix;
  Eigen::MatrixXd y = x;
  double momentum_t = 1.0;

  for (int it = 0; it < max_iters; ++it) {
    result.iters = it;
    if (it % 20 == 0) {
      state.matrix = x;
      const Eigen::MatrixXd g = wot_gradient(spec, xs, ys, state);
      const Coupling vertex = linear_ot(g, p, q);
      result.gap = (g.array() * (x - vertex.matrix).array()).sum();
      if (result.gap <= tol) {
        result.converged = true;
        break;
      }
    }
    state.matrix = y;
    const Eigen::MatrixXd g = wot_gradient(spec, xs, ys, state);
    Eigen::MatrixXd x_next = project_transport(y - step * g, p, q);
    // Gradient-based restart keeps the momentum sequence monotone.
    if ((g.array() * (x_next - x).array()).sum() > 0.0) {
      momentum_t = 1.0;
      y = x_next;
    } else {
      const double t_next =
          0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
      y = x_next + ((momentum_t - 1.0) / t_next) * (x_next - x);
      momentum_t = t_next;
    }
    x = std::move(x_next);
  }
  state.matrix = x;
  result.objective = wot_objective(spec, xs, ys, state);
  return result;
}

CheckResult check_identities(const CheckOptions& options) {
  const auto start = Clock::now();
  Recorder rec;
  Rng rng = Rng::stream(options.seed, "check_identities");
  for (int inst = 0; inst < options.identity_instances && rec.passed; ++inst) {
    const int d = 1 + inst % 3;
    const int atoms = 2 + inst % 5;
    const double gamma = rng.uniform(0.0, 1.2);
    const Empirical mu = random_empirical(rng, d, atoms, rng.uniform(-1.5, 1.5));
    const Eigen::VectorXd x = random_vector(rng, d, 1.5);

    // Centered and pairwise variance forms agree.
    const VarianceForms forms = variance_forms(mu);
    rec.expect_near(forms.pairwise, forms.centered,
                    options.identity_tol * std::max(1.0, forms.centered),
                    "variance pairwise vs centered");

    // Bilinear weak cost equals the moment form
    // |x - mean|^2/2 + (1-gamma)/2 Var(mu).
    {
      const WeakCostSpec spec{Bilinear{}, gamma};
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
      double second = 0.0;
      for (Eigen::Index i = 0; i < mu.points.rows(); ++i) {
        mean += mu.weights[i] * mu.points.row(i).transpose();
        second += mu.weights[i] * mu.points.row(i).squaredNorm();
      }
      const double variance = second - mean.squaredNorm();
      const double moment_form =
          0.5 * (x - mean).squaredNorm() + 0.5 * (1.0 - gamma) * variance;
      const double exact = weak_cost_exact(spec, x, mu);
      rec.expect_near(exact, moment_form,
                      options.identity_tol * std::max(1.0, std::abs(exact)),
                      "bilinear cost vs quadratic moment form");
    }

    // Every kernel family: the expanded form equals the
    // "feature distance minus variance credit" form, and for distance
    // kernels also the raw-distance reduction.
    for (int fam = 0; fam < 4 && rec.passed; ++fam) {
      const KernelSpec kernel = kernel_cycle(fam, rng);
      const WeakCostSpec spec{kernel, gamma};
      const double exact = weak_cost_exact(spec, x, mu);
      const double kxx = kernel_eval(kernel, x, x);
      const double cross = mean_cross(kernel, x, mu);
      const double diag = mean_diag(kernel, mu);
      const double pair = mean_pair(kernel, mu);
      const double feature_dist_sq = kxx - 2.0 * cross + diag;
      const double variance_credit = diag - pair;
      const double dual_form =
          0.5 * feature_dist_sq - 0.5 * gamma * variance_credit;
      rec.expect_near(dual_form, exact,
                      options.identity_tol * std::max(1.0, std::abs(exact)),
                      "kernel cost dual form (" + kernel_name(kernel) + ")");
      rec.expect_near(kernel_variance(kernel, mu), variance_credit,
                      options.identity_tol * std::max(1.0, std::abs(variance_credit)),
                      "kernel variance vs credit term");
      if (const auto* dk = std::get_if<DistanceInduced>(&kernel)) {
        double e_xy = 0.0, e_yy = 0.0;
        for (Eigen::Index i = 0; i < mu.points.rows(); ++i) {
          e_xy += mu.weights[i] *
                  std::pow((x - mu.points.row(i).transpose()).norm(), dk->alpha);
          for (Eigen::Index j = 0; j < mu.points.rows(); ++j) {
            e_yy += mu.weights[i] * mu.weights[j] *
                    std::pow((mu.points.row(i) - mu.points.row(j)).norm(),
                             dk->alpha);
          }
        }
        const double reduced = 0.5 * e_xy - 0.25 * gamma * e_yy;
        rec.expect_near(reduced, exact,
                        options.identity_tol * std::max(1.0, std::abs(exact)),
                        "distance kernel reduction");
      }
    }

    // Plan statistics identity: cost = dist^2/2 - (gamma/2) cvar, and both
    // equal the solver objective.
    {
      const int n = 3 + inst % 3, m = 2 + inst % 4;
      const Coupling plan = random_plan(rng, n, m);
      const Eigen::MatrixXd xs = random_matrix(rng, n, d, 1.0);
      const Eigen::MatrixXd ys = random_matrix(rng, m, d, 1.0);
      const KernelSpec kernel = kernel_cycle(inst, rng);
      const WeakCostSpec spec{kernel, gamma};
      const PlanStats stats = plan_stats(spec, xs, ys, plan);
      const double combined = 0.5 * stats.dist_sq - 0.5 * gamma * stats.cvar;
      rec.expect_near(stats.cost, combined,
                      options.identity_tol * std::max(1.0, std::abs(combined)),
                      "plan stats identity");
      const double objective = wot_objective(spec, xs, ys, plan);
      rec.expect_near(stats.cost, objective,
                      options.identity_tol * std::max(1.0, std::abs(objective)),
                      "plan stats vs solver objective");
    }
  }
  return rec.finish("identities", start);
}

CheckResult check_unbiasedness(const CheckOptions& options) {
  const auto start = Clock::now();
  Recorder rec;
  const EstimatorFn estimator = effective_estimator(options);
  Rng rng = Rng::stream(options.seed, "check_unbiasedness");

  // Fixed case: x = 0, mu uniform on {-1,+1}, bilinear, gamma = 1.
  {
    const WeakCostSpec spec{Bilinear{}, 1.0};
    Empirical mu;
    mu.points = Eigen::MatrixXd(2, 1);
    mu.points << -1.0, 1.0;
    mu.weights = {0.5, 0.5};
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    const double exact = weak_cost_exact(spec, x, mu);
    rec.expect_near(exact, 0.0, 1e-14, "fixed-case exact value");
    double sum = 0.0;
    Eigen::MatrixXd batch(2, 1);
    for (int b = 0; b < options.unbias_fixed_batches; ++b) {
      batch(0, 0) = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      batch(1, 0) = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      sum += estimator(spec, x, batch);
    }
    const double mc_mean = sum / options.unbias_fixed_batches;
    rec.expect_near(mc_mean, exact, 0.01, "fixed-case Monte Carlo mean");
  }

  // Randomized specs: Monte Carlo mean within 3 standard errors of exact.
  for (int s = 0; s < options.unbias_random_specs && rec.passed; ++s) {
    const int d = 1 + s % 2;
    const WeakCostSpec spec{kernel_cycle(s, rng), rng.uniform(0.0, 1.0)};
    const Empirical mu =
        random_empirical(rng, d, 3 + s % 3, rng.uniform(-2.0, 2.0));
    const Eigen::VectorXd x = random_vector(rng, d, 1.0);
    const double exact = weak_cost_exact(spec, x, mu);
    const int batch_size = 2 + s % 3;
    double sum = 0.0, sum_sq = 0.0;
    Eigen::MatrixXd batch(batch_size, d);
    for (int b = 0; b < options.unbias_random_batches; ++b) {
      for (int r = 0; r < batch_size; ++r) {
        batch.row(r) = mu.points.row(
            static_cast<Eigen::Index>(rng.categorical(mu.weights)));
      }
      const double value = estimator(spec, x, batch);
      sum += value;
      sum_sq += value * value;
    }
    const double n_b = options.unbias_random_batches;
    const double mean = sum / n_b;
    const double variance = std::max(0.0, sum_sq / n_b - mean * mean);
    const double std_err = std::sqrt(variance / n_b);
    std::ostringstream what;
    what << "randomized spec " << s << " (" << kernel_name(spec.kernel)
         << ", gamma " << spec.gamma << ")";
    rec.expect_near(mean, exact,
                    std::max(3.0 * std_err, 1e-12 * (1.0 + std::abs(exact))),
                    what.str());
  }
  return rec.finish("unbiasedness", start);
}

CheckResult check_gradients(const CheckOptions& options) {
  const auto start = Clock::now();
  Recorder rec;

  const auto fd_check = [&](const std::string& what,
                            const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& at,
                            const Eigen::VectorXd& analytic, double h,
                            double tol) {
    Eigen::VectorXd fd(at.size());
    Eigen::VectorXd point = at;
    for (Eigen::Index i = 0; i < at.size(); ++i) {
      point(i) = at(i) + h;
      const double up = f(point);
      point(i) = at(i) - h;
      const double down = f(point);
      point(i) = at(i);
      fd(i) = (up - down) / (2.0 * h);
    }
    const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1e-8);
    const double rel = (fd - analytic).cwiseAbs().maxCoeff() / scale;
    std::ostringstream msg;
    msg << what << ": max relative error " << rel << " (tol " << tol << ")";
    rec.expect(rel <= tol, msg.str());
  };

  for (int s = 0; s < options.gradient_seeds && rec.passed; ++s) {
    Rng rng = Rng::stream(options.seed, "check_gradients", s);

    // Backpropagation through a small network, parameters and inputs;
    // alternating seeds cover both hidden activations.
    {
      const Activation act =
          (s % 2 == 0) ? Activation::kTanh : Activation::kSoftplus;
      const std::string act_name =
          (act == Activation::kTanh) ? "tanh" : "softplus";
      MlpNet net = make_mlp({3, 8, 8, 2}, rng.next_u64(), act);
      const Eigen::MatrixXd inputs = random_matrix(rng, 4, 3, 1.0);
      const Eigen::MatrixXd cot = random_matrix(rng, 4, 2, 1.0);
      const auto objective_at = [&](const Eigen::VectorXd& params) {
        MlpNet probe = net;
        set_params(probe, params);
        return (mlp_forward(probe, inputs).array() * cot.array()).sum();
      };
      const MlpBackwardResult back = mlp_backward(net, inputs, cot);
      fd_check("mlp_backward params (seed " + std::to_string(s) + ", " +
                   act_name + ")",
               objective_at, flatten_params(net),
               flatten_gradients(net, back.params), 1e-4,
               options.net_grad_tol);

      const auto objective_inputs = [&](const Eigen::VectorXd& flat) {
        Eigen::MatrixXd pts = inputs;
        for (Eigen::Index i = 0; i < flat.size(); ++i) {
          pts(i / pts.cols(), i % pts.cols()) = flat(i);
        }
        return (mlp_forward(net, pts).array() * cot.array()).sum();
      };
      Eigen::VectorXd flat_inputs(inputs.size());
      Eigen::VectorXd flat_grad(inputs.size());
      for (Eigen::Index i = 0; i < inputs.size(); ++i) {
        flat_inputs(i) = inputs(i / inputs.cols(), i % inputs.cols());
        flat_grad(i) = back.inputs(i / inputs.cols(), i % inputs.cols());
      }
      fd_check("mlp_backward inputs (seed " + std::to_string(s) + ", " +
                   act_name + ")",
               objective_inputs, flat_inputs, flat_grad, 1e-4,
               options.net_grad_tol);
    }

    // Map-update and potential-update losses through the full stack.
    {
      NotConfig config;
      config.cost = WeakCostSpec{kernel_cycle(s, rng), rng.uniform(0.1, 1.0)};
      config.grad_smoothing_delta = 1e-6;
      const MlpNet t_net = make_mlp({4, 8, 8, 2}, rng.next_u64());
      // The potential mirrors the trainer: softplus features, linear head.
      const MlpNet f_net =
          make_mlp({2, 8, 8, 1}, rng.next_u64(), Activation::kSoftplus);
      const Eigen::MatrixXd xb = random_matrix(rng, 3, 2, 1.0);
      const Eigen::MatrixXd zb = random_matrix(rng, 6, 2, 1.0);
      const Eigen::MatrixXd yb = random_matrix(rng, 4, 2, 1.0);

      const TStepResult t_result = t_step(config, t_net, f_net, xb, zb);
      const auto t_loss_at = [&](const Eigen::VectorXd& params) {
        MlpNet probe = t_net;
        set_params(probe, params);
        return t_step(config, probe, f_net, xb, zb).loss;
      };
      fd_check("t_step gradient (seed " + std::to_string(s) + ", " +
                   kernel_name(config.cost.kernel) + ")",
               t_loss_at, flatten_params(t_net),
               flatten_gradients(t_net, t_result.t_grads), 1e-4,
               options.net_grad_tol);

      const FStepResult f_result = f_step(config, t_net, f_net, xb, zb, yb);
      const auto f_obj_at = [&](const Eigen::VectorXd& params) {
        MlpNet probe = f_net;
        set_params(probe, params);
        return f_step(config, t_net, probe, xb, zb, yb).objective;
      };
      fd_check("f_step gradient (seed " + std::to_string(s) + ")", f_obj_at,
               flatten_params(f_net),
               flatten_gradients(f_net, f_result.f_grads), 1e-4,
               options.net_grad_tol);
    }

    // Solver gradient, entrywise against the objective.
    {
      const int n = 5, m = 4;
      const WeakCostSpec spec{DistanceInduced{1.3}, rng.uniform(0.2, 1.0)};
      const Eigen::MatrixXd xs = random_matrix(rng, n, 2, 1.0);
      const Eigen::MatrixXd ys = random_matrix(rng, m, 2, 1.0);
      Coupling plan = random_plan(rng, n, m);
      const Eigen::MatrixXd analytic = wot_gradient(spec, xs, ys, plan);
      const auto objective_at = [&](const Eigen::VectorXd& flat) {
        Coupling probe = plan;
        for (Eigen::Index i = 0; i < flat.size(); ++i) {
          probe.matrix(i / m, i % m) = flat(i);
        }
        return wot_objective(spec, xs, ys, probe);
      };
      Eigen::VectorXd flat(n * m), flat_grad(n * m);
      for (Eigen::Index i = 0; i < flat.size(); ++i) {
        flat(i) = plan.matrix(i / m, i % m);
        flat_grad(i) = analytic(i / m, i % m);
      }
      fd_check("wot_gradient (seed " + std::to_string(s) + ")", objective_at,
               flat, flat_grad, 1e-5, options.solver_grad_tol);
    }
  }
  return rec.finish("gradients", start);
}

CheckResult check_oracle(const CheckOptions& options) {
  const auto start = Clock::now();
  Recorder rec;
  Rng rng = Rng::stream(options.seed, "check_oracle");

  const auto gaussian = [](std::initializer_list<double> mean,
                           std::initializer_list<double> var) {
    Gaussian g;
    g.mean = Eigen::VectorXd(static_cast<Eigen::Index>(mean.size()));
    g.cov_diag = Eigen::VectorXd(static_cast<Eigen::Index>(var.size()));
    Eigen::Index i = 0;
    for (double v : mean) g.mean(i++) = v;
    i = 0;
    for (double v : var) g.cov_diag(i++) = v;
    return g;
  };

  const Gaussian p1 = gaussian({0.0}, {0.25});
  const Gaussian q1 = gaussian({0.0}, {1.0});
  const Gaussian p2 = gaussian({0.0, 0.0}, {0.25, 0.25});
  const Gaussian q2 = gaussian({0.0, 0.0}, {1.0, 1.0});

  // Plain 1/2-convention W2^2 values.
  rec.expect_near(w2_squared_gaussian(p1, q1), 0.125, 1e-12, "W2^2 1D");
  rec.expect_near(w2_squared_gaussian(p2, q2), 0.25, 1e-12, "W2^2 2D");

  // Gamma-weak values across the grid (frozen from the independent
  // discrete-solver prototype before implementation).
  const double third = 1.0 / 12.0;
  rec.expect_near(w2_gamma_squared_gaussian(p1, q1, 0.25), 0.125, 1e-12,
                  "gamma-weak value 1D gamma=1/4");
  rec.expect_near(w2_gamma_squared_gaussian(p1, q1, 0.5), 0.125, 1e-12,
                  "gamma-weak value 1D gamma=1/2");
  rec.expect_near(w2_gamma_squared_gaussian(p1, q1, 0.75), third, 1e-12,
                  "gamma-weak value 1D gamma=3/4");
  rec.expect_near(w2_gamma_squared_gaussian(p1, q1, 1.0), 0.0, 1e-12,
                  "gamma-weak value 1D gamma=1");
  rec.expect_near(w2_gamma_squared_gaussian(p2, q2, 0.25), 0.25, 1e-12,
                  "gamma-weak value 2D gamma=1/4");
  rec.expect_near(w2_gamma_squared_gaussian(p2, q2, 0.5), 0.25, 1e-12,
                  "gamma-weak value 2D gamma=1/2");
  rec.expect_near(w2_gamma_squared_gaussian(p2, q2, 0.75), 1.0 / 6.0, 1e-12,
                  "gamma-weak value 2D gamma=3/4");
  rec.expect_near(w2_gamma_squared_gaussian(p2, q2, 1.0), 0.0, 1e-12,
                  "gamma-weak value 2D gamma=1");

  // Monge map between arbitrary diagonal Gaussians.
  {
    const Gaussian a = gaussian({1.0, -1.0}, {4.0, 1.0});
    const Gaussian b = gaussian({0.0, 2.0}, {1.0, 9.0});
    const AffineDiagMap map = ot_map_gaussian(a, b);
    rec.expect_near(map.scale(0), 0.5, 1e-12, "map scale x");
    rec.expect_near(map.scale(1), 3.0, 1e-12, "map scale y");
    const Eigen::VectorXd at_mean = map(a.mean);
    rec.expect_near((at_mean - b.mean).norm(), 0.0, 1e-12,
                    "map sends source mean to target mean");
  }

  // Convex order.
  rec.expect(convex_order_gaussian(p2, q2), "P dominated by Q");
  rec.expect(!convex_order_gaussian(q2, p2), "Q not dominated by P");
  rec.expect(!convex_order_gaussian(gaussian({0.1, 0.0}, {0.25, 0.25}), q2),
             "mean shift breaks convex order");

  // Verdicts across gamma for the canonical pair.
  const auto verdict_at = [&](double gamma) {
    return fake_solution_diagnostic(p2, q2, gamma).verdict;
  };
  rec.expect(verdict_at(0.25) == SaddleVerdict::kArginfUnique,
             "gamma=1/4 verdict unique");
  rec.expect(verdict_at(0.5) == SaddleVerdict::kDegenerateBoundary,
             "gamma=1/2 verdict degenerate boundary");
  rec.expect(verdict_at(0.75) == SaddleVerdict::kFakeSaddlePointsExist,
             "gamma=3/4 verdict fake saddles");
  rec.expect(verdict_at(1.0) == SaddleVerdict::kFakeSaddlePointsExist,
             "gamma=1 verdict fake saddles");
  rec.expect(fake_solution_diagnostic(p2, q2, 1.0).psi_degenerate,
             "gamma=1 potential degenerate");

  // Slope invariant a_i <= 1/gamma on random comparable pairs, both
  // dominance directions.
  for (int inst = 0; inst < 40 && rec.passed; ++inst) {
    const int d = 1 + inst % 3;
    const double gamma = rng.uniform(0.2, 1.5);
    Gaussian q;
    q.mean = random_vector(rng, d, 1.0);
    q.cov_diag = Eigen::VectorXd(d);
    for (int i = 0; i < d; ++i) q.cov_diag(i) = rng.uniform(0.3, 2.0);
    Gaussian p;
    p.mean = gamma * q.mean;  // scaled means must match
    p.cov_diag = Eigen::VectorXd(d);
    const bool dominated = inst % 2 == 0;
    for (int i = 0; i < d; ++i) {
      const double factor =
          dominated ? rng.uniform(0.2, 1.0) : rng.uniform(1.0, 2.5);
      const double sigma_scaled = std::sqrt(q.cov_diag(i)) * factor;
      p.cov_diag(i) = gamma * gamma * sigma_scaled * sigma_scaled;
    }
    const GaussianProjection proj = projection_gaussian(p, q, gamma);
    const double max_slope = proj.potential.slope_diag.maxCoeff();
    std::ostringstream what;
    what << "slope bound, instance " << inst;
    rec.expect(max_slope <= 1.0 / gamma + 1e-9, what.str());
  }

  // The potential map reproduces conditional means exactly.
  {
    const GaussianProjection proj = projection_gaussian(p2, q2, 0.5);
    const AffineDiagMap map = proj.potential.map();
    const Eigen::MatrixXd inputs = random_matrix(rng, 6, 2, 1.0);
    GroupedOutputs grouped;
    grouped.n_inputs = 6;
    grouped.z_per_x = 3;
    grouped.outputs = Eigen::MatrixXd(18, 2);
    for (int i = 0; i < 6; ++i) {
      const Eigen::VectorXd image = map(inputs.row(i).transpose());
      for (int k = 0; k < 3; ++k) {
        grouped.outputs.row(3 * i + k) = image.transpose();
      }
    }
    rec.expect_near(barycentric_error(grouped, proj.potential, inputs), 0.0,
                    1e-13, "barycentric error of exact map");
    grouped.outputs.array() += 0.25;
    rec.expect(barycentric_error(grouped, proj.potential, inputs) > 0.01,
               "barycentric error detects displaced outputs");
  }
  return rec.finish("oracle", start);
}

CheckResult check_solver(const CheckOptions& options) {
  const auto start = Clock::now();
  Recorder rec;
  Rng rng = Rng::stream(options.seed, "check_solver");

  // gamma = 0: the problem is linear, so exact line search converges in one
  // Frank-Wolfe step to the classical OT optimum.
  for (int inst = 0; inst < 5 && rec.passed; ++inst) {
    const int n = 3 + inst, m = 4 + inst;
    const Eigen::MatrixXd xs = random_matrix(rng, n, 2, 1.5);
    const Eigen::MatrixXd ys = random_matrix(rng, m, 2, 1.5);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(m, 1.0 / m);
    const WeakCostSpec spec{DistanceInduced{1.0}, 0.0};
    const FwResult fw = solve_frank_wolfe(spec, xs, ys, p, q, FwConfig{});
    rec.expect(fw.converged, "gamma=0 converged");
    rec.expect(fw.trace.size() <= 2, "gamma=0 needs one step");
    // At gamma = 0 the gradient is the constant linear cost, so one
    // classical-OT call gives the true optimum.
    const Coupling direct = linear_ot(wot_gradient(spec, xs, ys, fw.plan), p, q);
    const double f_fw = wot_objective(spec, xs, ys, fw.plan);
    const double f_direct = wot_objective(spec, xs, ys, direct);
    rec.expect_near(f_fw, f_direct, 1e-10 * std::max(1.0, std::abs(f_direct)),
                    "gamma=0 equals linear OT optimum");
  }

  // Random instances against the projected-gradient reference.
  const double gammas[3] = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  for (int inst = 0; inst < options.solver_instances && rec.passed; ++inst) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 14);
    const int m = 3 + static_cast<int>(rng.next_u64() % 14);
    const double gamma = gammas[inst % 3];
    const double alpha = inst % 2 == 0 ? 1.0 : 1.5;
    const WeakCostSpec spec{DistanceInduced{alpha}, gamma};
    const Eigen::MatrixXd xs = random_matrix(rng, n, 2, 1.5);
    const Eigen::MatrixXd ys = random_matrix(rng, m, 2, 1.5);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(m, 1.0 / m);

    FwConfig config;
    config.max_iters = 4000;
    const FwResult fw = solve_frank_wolfe(spec, xs, ys, p, q, config);
    const double f_fw = wot_objective(spec, xs, ys, fw.plan);

    for (std::size_t t = 1; t < fw.trace.size(); ++t) {
      if (!(fw.trace[t].objective <=
            fw.trace[t - 1].objective +
                1e-12 * std::max(1.0, std::abs(fw.trace[0].objective)))) {
        std::ostringstream what;
        what << "objective trace monotone, instance " << inst << " step " << t;
        rec.expect(false, what.str());
        break;
      }
    }

    const PgResult pg =
        projected_gradient_wot(spec, xs, ys, p, q, 1e-8, 400000);
    std::ostringstream what;
    what << "instance " << inst << " (n=" << n << ", m=" << m
         << ", gamma=" << gamma << ", alpha=" << alpha << ")";
    rec.expect(pg.converged, "projected-gradient reference converged, " +
                                 what.str());
    rec.expect_near(f_fw, pg.objective,
                    options.solver_rel_tol *
                        std::max(std::abs(pg.objective), 1e-12),
                    "FW vs projected gradient, " + what.str());
  }
  return rec.finish("solver", start);
}

std::vector<CheckResult> run_check_suites(const CheckOptions& options,
                                          const std::string& only) {
  std::vector<CheckResult> results;
  const auto matches = [&](const std::string& name) {
    return only.empty() || name.find(only) != std::string::npos;
  };
  if (matches("identities")) results.push_back(check_identities(options));
  if (matches("unbiasedness")) results.push_back(check_unbiasedness(options));
  if (matches("gradients")) results.push_back(check_gradients(options));
  if (matches("oracle")) results.push_back(check_oracle(options));
  if (matches("solver")) results.push_back(check_solver(options));
  return results;
}

}  // namespace wotlab
