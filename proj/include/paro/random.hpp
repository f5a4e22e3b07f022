#pragma once

// Seeded random streams. The engine is std::mt19937_64; uniforms take the top
// 53 bits of one draw and normals use the Box-Muller transform with the
// second variate cached, so sequences are identical across standard
// libraries. Independent substreams are seeded by hashing (seed, keys...)
// with splitmix64.

#include <cstdint>
#include <initializer_list>
#include <random>

#include "paro/tensor.hpp"

namespace paro {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the substream identified by `keys` under `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Vector normal_vector(std::size_t n);
  Matrix normal_matrix(std::size_t rows, std::size_t cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace paro
