#include "paro/implicit_residue.hpp"

#include "paro/rank1.hpp"

namespace paro {

namespace {

void check_vectors(const Shape& shape, std::span<const Vector> vectors, std::size_t skip) {
  if (vectors.size() != shape.size()) throw ShapeError("one vector per mode expected");
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k != skip && static_cast<std::size_t>(vectors[k].size()) != shape[k]) {
      throw ShapeError("vector length does not match the mode extent");
    }
  }
}

}  // namespace

ImplicitResidue::ImplicitResidue(const DenseTensor& e, double e_sq_norm,
                                 std::vector<Vector> factors, double weight)
    : e_(&e), factors_(std::move(factors)), weight_(weight) {
  check_vectors(e.shape(), factors_, factors_.size());
  double gamma = 1.0;
  for (const Vector& u : factors_) gamma *= u.squaredNorm();
  const double cross = paro::contract_all(e, factors_);
  sq_norm_ = e_sq_norm + 2.0 * weight_ * cross + weight_ * weight_ * gamma;
}

Vector ImplicitResidue::contract_all_but(std::span<const Vector> vectors,
                                         std::size_t skip) const {
  check_vectors(shape(), vectors, skip);
  Vector t = paro::contract_all_but(*e_, vectors, skip);
  double s = weight_;
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    if (k != skip) s *= factors_[k].dot(vectors[k]);
  }
  t += s * factors_[skip];
  return t;
}

double ImplicitResidue::contract_all(std::span<const Vector> vectors) const {
  check_vectors(shape(), vectors, vectors.size());
  double s = weight_;
  for (std::size_t k = 0; k < factors_.size(); ++k) s *= factors_[k].dot(vectors[k]);
  return paro::contract_all(*e_, vectors) + s;
}

DenseTensor ImplicitResidue::project(std::span<const Matrix> mats) const {
  if (mats.size() != factors_.size()) throw ShapeError("one matrix per mode expected");
  DenseTensor w = multi_mode_product(*e_, mats);
  std::vector<Vector> small(factors_.size());
  for (std::size_t k = 0; k < factors_.size(); ++k) small[k] = mats[k].transpose() * factors_[k];
  accumulate_outer(w.data(), w.shape(), small, weight_);
  return w;
}

double ImplicitResidue::residual_squared_norm(const Rank1Model& model) const {
  model.check_shape(shape());
  const auto e = e_->data();
  std::vector<double> x(e.size(), 0.0);
  accumulate_outer(x, shape(), factors_, weight_);
  accumulate_outer(x, shape(), model.factors, -model.weight);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = e[i] + x[i];
    s += d * d;
  }
  return s;
}

DenseTensor ImplicitResidue::materialize() const {
  DenseTensor out = *e_;
  accumulate_outer(out.data(), out.shape(), factors_, weight_);
  return out;
}

}  // namespace paro
