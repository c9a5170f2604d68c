#pragma once
// Source/target distribution specifications and deterministic sampling.
//
// A DistributionSpec is a closed set of synthetic families used throughout
// the experiments.  sample() is a pure function of (spec, n, seed): identical
// arguments give bit-identical batches.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace wotlab {

// Axis-aligned Gaussian: independent coordinates, strictly positive
// per-coordinate variances.
struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::VectorXd cov_diag;
};

struct GaussianMixture {
  std::vector<Gaussian> components;
  std::vector<double> weights;  // nonnegative, sum 1
};

struct UniformSquare {
  Eigen::VectorXd low;
  Eigen::VectorXd high;
};

// Planar spiral: angle t ~ Uniform[1.5*pi, 4.5*pi], point
// scale * t * (cos t, sin t) / (4.5*pi) plus isotropic Gaussian jitter of
// standard deviation noise_std.  Two-dimensional by construction.
struct SwissRoll {
  double scale = 1.0;
  double noise_std = 0.0;
};

// Finite weighted point set; rows of points are atoms.
struct Empirical {
  Eigen::MatrixXd points;
  std::vector<double> weights;  // nonnegative, sum 1
};

using DistributionSpec =
    std::variant<Gaussian, GaussianMixture, UniformSquare, SwissRoll,
                 Empirical>;

int dim(const DistributionSpec& spec);

// Throws std::invalid_argument on dimension mismatches, non-positive
// variances, or weights that do not sum to 1 within 1e-12.
void validate(const DistributionSpec& spec);
void validate(const Empirical& points);  // same checks, no variant copy

// Stable content hash of a distribution spec (family tag + parameters), carried in
// sample batches so downstream artifacts can name their source.
std::uint64_t spec_digest(const DistributionSpec& spec);

struct SampleBatch {
  Eigen::MatrixXd points;  // n x d, one sample per row
  std::uint64_t source_seed = 0;
  std::uint64_t spec_digest = 0;
};

SampleBatch sample(const DistributionSpec& spec, int n, std::uint64_t seed);

// Outputs grouped by conditioning input: row block z_per_x*i .. z_per_x*(i+1)
// holds the draws attached to input i.
struct GroupedOutputs {
  Eigen::MatrixXd outputs;
  int n_inputs = 0;
  int z_per_x = 1;
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd cov_diag;     // unbiased per-coordinate variance, 1/(n-1)
  double second_moment = 0.0;   // mean of squared norms
};

// Requires n >= 2 (sample covariance needs it); throws otherwise.
Moments empirical_moments(const SampleBatch& batch);
Moments empirical_moments(const Eigen::MatrixXd& points);

// Closed-form moments where the family admits them (Gaussian, mixture,
// uniform square); nullopt for the others.
std::optional<Moments> analytic_moments(const DistributionSpec& spec);

std::string family_name(const DistributionSpec& spec);

}  // namespace wotlab
