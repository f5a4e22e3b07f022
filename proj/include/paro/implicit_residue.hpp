#pragma once

// Target e + w * u_1 o ... o u_N where e is a shared dense residue and the
// rank-1 part is kept in factored form. Contractions are the dense
// contraction plus a closed-form rank-1 correction; the sum is never formed.

#include <vector>

#include "paro/target.hpp"

namespace paro {

class ImplicitResidue final : public MultilinearTarget {
 public:
  /// Non-owning view of `e`; `e_sq_norm` must equal ||e||_F^2.
  ImplicitResidue(const DenseTensor& e, double e_sq_norm, std::vector<Vector> factors,
                  double weight);

  const Shape& shape() const override { return e_->shape(); }
  Vector contract_all_but(std::span<const Vector> vectors, std::size_t skip) const override;
  double contract_all(std::span<const Vector> vectors) const override;
  DenseTensor project(std::span<const Matrix> mats) const override;
  double squared_norm() const override { return sq_norm_; }
  double residual_squared_norm(const Rank1Model& model) const override;
  DenseTensor materialize() const override;

  const DenseTensor& dense_part() const { return *e_; }
  const std::vector<Vector>& factors() const { return factors_; }
  double weight() const { return weight_; }

 private:
  const DenseTensor* e_;
  std::vector<Vector> factors_;
  double weight_;
  double sq_norm_;
};

}  // namespace paro
