#pragma once
// Binary serialization of network parameters (little-endian, fixed layout:
// magic, layer count, layer sizes, activation tag, then per layer the weight
// matrix in row-major order followed by the bias vector).

#include <iosfwd>
#include <string>

#include "wotlab/mlp.hpp"

namespace wotlab {

void write_mlp(std::ostream& out, const MlpNet& net);
MlpNet read_mlp(std::istream& in);

void save_checkpoint(const MlpNet& net, const std::string& path);
MlpNet load_checkpoint(const std::string& path);

}  // namespace wotlab
