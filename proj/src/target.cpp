#include "paro/target.hpp"

#include <algorithm>

#include "paro/rank1.hpp"

namespace paro {

DenseTarget::DenseTarget(const DenseTensor& t) : t_(&t), sq_norm_(paro::squared_norm(t)) {}

Vector DenseTarget::contract_all_but(std::span<const Vector> vectors, std::size_t skip) const {
  return paro::contract_all_but(*t_, vectors, skip);
}

double DenseTarget::contract_all(std::span<const Vector> vectors) const {
  return paro::contract_all(*t_, vectors);
}

DenseTensor DenseTarget::project(std::span<const Matrix> mats) const {
  return multi_mode_product(*t_, mats);
}

double DenseTarget::residual_squared_norm(const Rank1Model& model) const {
  model.check_shape(t_->shape());
  std::vector<double> x(t_->numel(), 0.0);
  accumulate_outer(x, t_->shape(), model.factors, model.weight);
  const auto y = t_->data();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = y[i] - x[i];
    s += d * d;
  }
  return s;
}

void outer_product_into(std::span<double> out, std::span<const Vector> factors, double scale) {
  Shape shape;
  for (const Vector& u : factors) shape.push_back(static_cast<std::size_t>(u.size()));
  std::fill(out.begin(), out.end(), 0.0);
  accumulate_outer(out, shape, factors, scale);
}

}  // namespace paro
