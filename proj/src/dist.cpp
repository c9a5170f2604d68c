#include "wotlab/dist.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "wotlab/rng.hpp"

namespace wotlab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_weights(const std::vector<double>& w, const char* who) {
  require(!w.empty(), std::string(who) + ": empty weight vector");
  double total = 0.0;
  for (double x : w) {
    require(x >= 0.0, std::string(who) + ": negative weight");
    total += x;
  }
  require(std::abs(total - 1.0) <= 1e-12,
          std::string(who) + ": weights must sum to 1");
}

// Feed doubles/ints into an FNV-style rolling hash by exact byte image.
struct Digest {
  std::uint64_t h = 0xCBF29CE484222325ull;
  void bytes(const void* p, std::size_t n) {
    auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001B3ull;
    }
  }
  void num(double x) { bytes(&x, sizeof x); }
  void num(std::uint64_t x) { bytes(&x, sizeof x); }
  void tag(const char* t) { bytes(t, std::strlen(t)); }
  void vec(const Eigen::VectorXd& v) {
    num(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) num(v[i]);
  }
};

constexpr double kRollTMin = 1.5 * std::numbers::pi;
constexpr double kRollTMax = 4.5 * std::numbers::pi;

}  // namespace

int dim(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Gaussian>)
          return static_cast<int>(s.mean.size());
        else if constexpr (std::is_same_v<T, GaussianMixture>)
          return s.components.empty()
                     ? 0
                     : static_cast<int>(s.components.front().mean.size());
        else if constexpr (std::is_same_v<T, UniformSquare>)
          return static_cast<int>(s.low.size());
        else if constexpr (std::is_same_v<T, SwissRoll>)
          return 2;
        else
          return static_cast<int>(s.points.cols());
      },
      spec);
}

void validate(const DistributionSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          require(s.mean.size() > 0, "gaussian: empty mean");
          require(s.cov_diag.size() == s.mean.size(),
                  "gaussian: mean/covariance dimension mismatch");
          require((s.cov_diag.array() > 0.0).all(),
                  "gaussian: covariance entries must be strictly positive");
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          require(!s.components.empty(), "mixture: no components");
          require(s.weights.size() == s.components.size(),
                  "mixture: weight/component count mismatch");
          check_weights(s.weights, "mixture");
          const auto d = s.components.front().mean.size();
          for (const auto& c : s.components) {
            require(c.mean.size() == d && c.cov_diag.size() == d,
                    "mixture: component dimension mismatch");
            require((c.cov_diag.array() > 0.0).all(),
                    "mixture: covariance entries must be strictly positive");
          }
        } else if constexpr (std::is_same_v<T, UniformSquare>) {
          require(s.low.size() > 0 && s.low.size() == s.high.size(),
                  "uniform square: bound dimension mismatch");
          require((s.high.array() >= s.low.array()).all(),
                  "uniform square: high < low");
        } else if constexpr (std::is_same_v<T, SwissRoll>) {
          require(s.scale > 0.0, "swiss roll: scale must be positive");
          require(s.noise_std >= 0.0, "swiss roll: negative noise");
        } else {
          require(s.points.rows() > 0, "empirical: no atoms");
          require(s.points.cols() > 0, "empirical: zero-dimensional atoms");
          require(static_cast<Eigen::Index>(s.weights.size()) ==
                      s.points.rows(),
                  "empirical: weight/atom count mismatch");
          check_weights(s.weights, "empirical");
        }
      },
      spec);
}

void validate(const Empirical& points) {
  require(points.points.rows() > 0, "empirical: no atoms");
  require(points.points.cols() > 0, "empirical: zero-dimensional atoms");
  require(static_cast<Eigen::Index>(points.weights.size()) ==
              points.points.rows(),
          "empirical: weight/atom count mismatch");
  check_weights(points.weights, "empirical");
}

std::uint64_t spec_digest(const DistributionSpec& spec) {
  Digest d;
  std::visit(
      [&d](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          d.tag("gaussian");
          d.vec(s.mean);
          d.vec(s.cov_diag);
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          d.tag("mixture");
          d.num(static_cast<std::uint64_t>(s.components.size()));
          for (std::size_t i = 0; i < s.components.size(); ++i) {
            d.num(s.weights[i]);
            d.vec(s.components[i].mean);
            d.vec(s.components[i].cov_diag);
          }
        } else if constexpr (std::is_same_v<T, UniformSquare>) {
          d.tag("uniform_square");
          d.vec(s.low);
          d.vec(s.high);
        } else if constexpr (std::is_same_v<T, SwissRoll>) {
          d.tag("swiss_roll");
          d.num(s.scale);
          d.num(s.noise_std);
        } else {
          d.tag("empirical");
          d.num(static_cast<std::uint64_t>(s.points.rows()));
          for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
            d.num(s.weights[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < s.points.cols(); ++j)
              d.num(s.points(i, j));
          }
        }
      },
      spec);
  return d.h;
}

namespace {

void sample_gaussian_rows(const Gaussian& g, Eigen::MatrixXd& out,
                          Eigen::Index row_begin, Eigen::Index row_end,
                          Rng& rng) {
  const Eigen::VectorXd sd = g.cov_diag.array().sqrt();
  for (Eigen::Index i = row_begin; i < row_end; ++i)
    for (Eigen::Index j = 0; j < g.mean.size(); ++j)
      out(i, j) = g.mean[j] + sd[j] * rng.normal();
}

}  // namespace

SampleBatch sample(const DistributionSpec& spec, int n, std::uint64_t seed) {
  validate(spec);
  require(n > 0, "sample: n must be positive");
  const int d = dim(spec);
  SampleBatch batch;
  batch.source_seed = seed;
  batch.spec_digest = wotlab::spec_digest(spec);
  batch.points.resize(n, d);
  Rng rng = Rng::stream(seed ^ batch.spec_digest, "sample");

  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          sample_gaussian_rows(s, batch.points, 0, n, rng);
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          for (int i = 0; i < n; ++i) {
            const std::size_t c = rng.categorical(s.weights);
            sample_gaussian_rows(s.components[c], batch.points, i, i + 1, rng);
          }
        } else if constexpr (std::is_same_v<T, UniformSquare>) {
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
              batch.points(i, j) = rng.uniform(s.low[j], s.high[j]);
        } else if constexpr (std::is_same_v<T, SwissRoll>) {
          for (int i = 0; i < n; ++i) {
            const double t = rng.uniform(kRollTMin, kRollTMax);
            const double r = s.scale * t / kRollTMax;
            batch.points(i, 0) = r * std::cos(t) + s.noise_std * rng.normal();
            batch.points(i, 1) = r * std::sin(t) + s.noise_std * rng.normal();
          }
        } else {
          for (int i = 0; i < n; ++i)
            batch.points.row(i) = s.points.row(
                static_cast<Eigen::Index>(rng.categorical(s.weights)));
        }
      },
      spec);
  return batch;
}

Moments empirical_moments(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  if (n < 2)
    throw std::invalid_argument(
        "empirical_moments: need at least two samples for covariance");
  Moments m;
  m.mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - m.mean.transpose();
  m.cov_diag =
      centered.array().square().colwise().sum() / static_cast<double>(n - 1);
  m.second_moment = points.array().square().rowwise().sum().mean();
  return m;
}

Moments empirical_moments(const SampleBatch& batch) {
  return empirical_moments(batch.points);
}

std::optional<Moments> analytic_moments(const DistributionSpec& spec) {
  if (const auto* g = std::get_if<Gaussian>(&spec)) {
    Moments m{g->mean, g->cov_diag, 0.0};
    m.second_moment = g->mean.squaredNorm() + g->cov_diag.sum();
    return m;
  }
  if (const auto* mix = std::get_if<GaussianMixture>(&spec)) {
    const int d = dim(spec);
    Moments m;
    m.mean = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd second = Eigen::VectorXd::Zero(d);
    for (std::size_t c = 0; c < mix->components.size(); ++c) {
      const auto& g = mix->components[c];
      m.mean += mix->weights[c] * g.mean;
      second += mix->weights[c] *
                (g.cov_diag + g.mean.array().square().matrix()).eval();
    }
    m.cov_diag = second - m.mean.array().square().matrix();
    m.second_moment = second.sum();
    return m;
  }
  if (const auto* box = std::get_if<UniformSquare>(&spec)) {
    Moments m;
    m.mean = 0.5 * (box->low + box->high);
    m.cov_diag = (box->high - box->low).array().square() / 12.0;
    m.second_moment = m.mean.squaredNorm() + m.cov_diag.sum();
    return m;
  }
  return std::nullopt;
}

std::string family_name(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
        else if constexpr (std::is_same_v<T, GaussianMixture>) return "mixture";
        else if constexpr (std::is_same_v<T, UniformSquare>)
          return "uniform_square";
        else if constexpr (std::is_same_v<T, SwissRoll>) return "swiss_roll";
        else return "empirical";
      },
      spec);
}

}  // namespace wotlab
