#pragma once
// Deterministic random number generation with named substreams.
//
// Everything stochastic in this project draws from Rng so that a run is
// reproducible from (seed, purpose, index) alone.  The generator is
// xoshiro256++ seeded through splitmix64; normals use the Marsaglia polar
// method.  None of this delegates to <random> distributions, whose output
// is implementation-defined and would tie results to a standard library
// version.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace wotlab {

std::uint64_t splitmix64_next(std::uint64_t& state);

// FNV-1a, used to fold substream purpose strings into the seed.
std::uint64_t hash64(std::string_view text);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent substream: all draws for a given (seed, purpose, index) are
  // identical across runs and unrelated to draws of any other substream.
  static Rng stream(std::uint64_t seed, std::string_view purpose,
                    std::uint64_t index = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);

  // Standard normal via the polar method (log/sqrt only; no libm sin/cos).
  double normal();

  // Index i with probability weights[i] / sum(weights).
  std::size_t categorical(const std::vector<double>& weights);

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace wotlab
