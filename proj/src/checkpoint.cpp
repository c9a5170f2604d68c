#include "wotlab/checkpoint.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace wotlab {
namespace {

constexpr std::array<char, 8> kMagic = {'W', 'O', 'T', 'M', 'L', 'P', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t value) {
  std::array<char, 4> bytes;
  for (int i = 0; i < 4; ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(std::istream& in) {
  std::array<char, 4> bytes;
  in.read(bytes.data(), bytes.size());
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    value |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i]))
             << (8 * i);
  }
  return value;
}

void put_f64(std::ostream& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

double get_f64(std::istream& in) {
  std::array<char, 8> bytes;
  in.read(bytes.data(), bytes.size());
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i]))
            << (8 * i);
  }
  double value;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

}  // namespace

void write_mlp(std::ostream& out, const MlpNet& net) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
  for (int s : net.layer_sizes) put_u32(out, static_cast<std::uint32_t>(s));
  put_u32(out, static_cast<std::uint32_t>(net.activation));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    }
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
      put_f64(out, net.biases[l](r));
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

MlpNet read_mlp(std::istream& in) {
  std::array<char, 8> magic;
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw std::runtime_error("checkpoint: bad magic header");
  }
  const std::uint32_t n_sizes = get_u32(in);
  if (!in || n_sizes < 2 || n_sizes > 1024) {
    throw std::runtime_error("checkpoint: implausible layer count");
  }
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) {
    s = static_cast<int>(get_u32(in));
    if (!in || s <= 0 || s > (1 << 20)) {
      throw std::runtime_error("checkpoint: implausible layer size");
    }
  }
  const std::uint32_t activation_tag = get_u32(in);
  if (activation_tag != static_cast<std::uint32_t>(Activation::kTanh) &&
      activation_tag != static_cast<std::uint32_t>(Activation::kSoftplus)) {
    throw std::runtime_error("checkpoint: unknown activation tag");
  }
  MlpNet net = make_zero_mlp(sizes, static_cast<Activation>(activation_tag));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get_f64(in);
    }
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
      net.biases[l](r) = get_f64(in);
    }
  }
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return net;
}

void save_checkpoint(const MlpNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  write_mlp(out, net);
}

MlpNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  return read_mlp(in);
}

}  // namespace wotlab
