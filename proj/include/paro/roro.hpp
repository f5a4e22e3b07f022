#pragma once

// Rotational best rank-1 update: each unit factor is rotated inside the plane
// spanned by itself and its normalized Lagrangian gradient, which reduces the
// step to a best rank-1 problem on a 2 x ... x 2 projection of the data.

#include <optional>
#include <vector>

#include "paro/quantized.hpp"
#include "paro/rank1.hpp"
#include "paro/target.hpp"

namespace paro {

/// Per-mode basis [u_n, g_n]; `frozen` marks modes of extent 1 whose
/// factor cannot rotate.
struct RotationBasis {
  std::vector<Matrix> bases;
  std::vector<bool> frozen;
  std::vector<bool> degenerate;
  double xi = 0.0;
};

/// Unit vector orthogonal to unit u: the first canonical vector whose
/// Gram-Schmidt residual has squared norm >= 1/I. Throws ShapeError for I = 1.
Vector degenerate_mode_basis(const Vector& u);

/// Builds the rotation bases at unit factors. Gradients below
/// 1e-12 * max(1, xi^2) are replaced by degenerate_mode_basis.
RotationBasis rotation_basis(const MultilinearTarget& target, const std::vector<Vector>& unit);

/// Best rank-1 of a 2 x ... x 2 tensor with unit factors; the incumbent
/// (all factors [1, 0]) is returned when nothing beats it.
QuantizedFit best_rank1_quantized(const DenseTensor& w);

/// One RORO step. Factors are unit on return and the weight is xi.
Rank1Model roro_step(const MultilinearTarget& target, const Rank1Model& model);
Rank1Model roro_step(const DenseTensor& t, const Rank1Model& model);

}  // namespace paro
