#pragma once

// Benchmark tensors: matrix-multiplication tensors, seeded random Kruskal
// tensors (optionally with highly collinear column blocks), Gaussian tensors
// and additive noise at a prescribed SNR.

#include <cstdint>
#include <optional>
#include <vector>

#include "paro/tensor.hpp"

namespace paro {

struct MultTensorSpec {
  std::size_t m = 2, n = 2, p = 2;
};

/// Tensor Y of shape (mn) x (np) x (mp) with vec(AB) = Y x_1 vec(A^T) x_2
/// vec(B^T) for A (m x n) and B (n x p); vec is column-major. Entry
/// (j + n i, k + p j, i + m k) is 1 for all i < m, j < n, k < p.
DenseTensor mult_tensor(const MultTensorSpec& spec);

/// Known tensor rank for (2,2,2), (2,3,2) and (3,3,3).
std::optional<std::size_t> known_rank(const MultTensorSpec& spec);

struct Collinearity {
  double lo = 0.95;
  double hi = 0.999;
  /// Column counts of the blocks; they must sum to R.
  std::vector<std::size_t> blocks;
};

struct RandomKruskal {
  KruskalModel model;
  DenseTensor tensor;
};

/// Unit-norm standard normal columns. With a collinearity range, every
/// pair of columns within a block has cosine in [lo, hi] on every mode.
/// Throws std::invalid_argument for an empty or infeasible range.
RandomKruskal random_kruskal(const Shape& dims, std::size_t rank, std::uint64_t seed,
                             const std::optional<Collinearity>& collinearity = std::nullopt);

/// Independent standard normal entries.
DenseTensor gaussian_tensor(const Shape& dims, std::uint64_t seed);

/// t + n with ||t||^2 / ||n||^2 = 10^(snr_db / 10). An infinite snr_db
/// returns t unchanged. Throws std::invalid_argument for a zero t.
DenseTensor add_noise(const DenseTensor& t, double snr_db, std::uint64_t seed);

}  // namespace paro
