#pragma once

// Read-only view of a tensor that rank-1 solvers fit. Solvers only need
// multilinear contractions, so a target need not be stored densely.

#include <span>

#include "paro/tensor.hpp"

namespace paro {

struct Rank1Model;

class MultilinearTarget {
 public:
  virtual ~MultilinearTarget() = default;

  virtual const Shape& shape() const = 0;
  std::size_t order() const { return shape().size(); }

  /// Contraction with vectors[k] on every mode k != skip.
  virtual Vector contract_all_but(std::span<const Vector> vectors, std::size_t skip) const = 0;
  virtual double contract_all(std::span<const Vector> vectors) const = 0;
  /// Multi-mode product with mats[k] on mode k (columns become extents).
  virtual DenseTensor project(std::span<const Matrix> mats) const = 0;
  virtual double squared_norm() const = 0;
  /// ||target - model||_F^2, accumulated entry by entry.
  virtual double residual_squared_norm(const Rank1Model& model) const = 0;
  /// Dense copy for initializations that need the whole array.
  virtual DenseTensor materialize() const = 0;
};

/// Non-owning view of a dense tensor; the tensor must outlive the view.
class DenseTarget final : public MultilinearTarget {
 public:
  explicit DenseTarget(const DenseTensor& t);

  const Shape& shape() const override { return t_->shape(); }
  Vector contract_all_but(std::span<const Vector> vectors, std::size_t skip) const override;
  double contract_all(std::span<const Vector> vectors) const override;
  DenseTensor project(std::span<const Matrix> mats) const override;
  double squared_norm() const override { return sq_norm_; }
  double residual_squared_norm(const Rank1Model& model) const override;
  DenseTensor materialize() const override { return *t_; }

  const DenseTensor& tensor() const { return *t_; }

 private:
  const DenseTensor* t_;
  double sq_norm_;
};

/// Entry (i_1..i_N) of scale * u_1 o ... o u_N, evaluated as
/// u_1(i_1) * (u_2(i_2) * (...)) and written to out in column-major order.
void outer_product_into(std::span<double> out, std::span<const Vector> factors, double scale);

}  // namespace paro
