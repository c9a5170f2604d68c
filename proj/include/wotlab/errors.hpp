#pragma once
// Error taxonomy shared across modules; the CLI maps these to exit codes.

#include <stdexcept>
#include <string>

namespace wotlab {

// Invalid or inconsistent experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training or optimization produced non-finite values (CLI exit code 3).
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace wotlab
