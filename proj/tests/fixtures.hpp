#pragma once

// Shared fixtures and brute-force oracles for the test binaries.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "paro/random.hpp"
#include "paro/tensor.hpp"

namespace fixtures {

using paro::DenseTensor;
using paro::Matrix;
using paro::Shape;
using paro::Vector;

inline DenseTensor random_tensor(const Shape& shape, std::uint64_t seed) {
  paro::Rng rng(paro::substream_seed(seed, {0x7e57}));
  DenseTensor t(shape);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

inline std::vector<Vector> random_vectors(const Shape& shape, paro::Rng& rng) {
  std::vector<Vector> out;
  for (std::size_t e : shape) out.push_back(rng.normal_vector(e));
  return out;
}

inline std::vector<Vector> random_unit_vectors(const Shape& shape, paro::Rng& rng) {
  auto out = random_vectors(shape, rng);
  for (Vector& v : out) v.normalize();
  return out;
}

/// Calls f(index) for every multi-index in column-major order.
inline void for_each_index(const Shape& shape,
                           const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> idx(shape.size(), 0);
  const std::size_t total = paro::shape_numel(shape);
  for (std::size_t lin = 0; lin < total; ++lin) {
    f(idx);
    for (std::size_t k = 0; k < shape.size(); ++k) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
}

inline double naive_entry(const DenseTensor& t, const std::vector<std::size_t>& idx) {
  return t[paro::linear_index(t.shape(), idx)];
}

/// sum_i t(i) prod_{k != skip} v_k(i_k), gathered per value of i_skip.
inline Vector naive_contract_all_but(const DenseTensor& t, const std::vector<Vector>& v,
                                     std::size_t skip) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(t.extent(skip)));
  for_each_index(t.shape(), [&](const std::vector<std::size_t>& idx) {
    double p = naive_entry(t, idx);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k != skip) p *= v[k](static_cast<Eigen::Index>(idx[k]));
    }
    out(static_cast<Eigen::Index>(idx[skip])) += p;
  });
  return out;
}

inline double naive_contract_all(const DenseTensor& t, const std::vector<Vector>& v) {
  double s = 0.0;
  for_each_index(t.shape(), [&](const std::vector<std::size_t>& idx) {
    double p = naive_entry(t, idx);
    for (std::size_t k = 0; k < idx.size(); ++k) p *= v[k](static_cast<Eigen::Index>(idx[k]));
    s += p;
  });
  return s;
}

inline DenseTensor naive_outer(const std::vector<Vector>& v, double scale = 1.0) {
  Shape shape;
  for (const Vector& u : v) shape.push_back(static_cast<std::size_t>(u.size()));
  DenseTensor t(shape);
  for_each_index(shape, [&](const std::vector<std::size_t>& idx) {
    double p = scale;
    for (std::size_t k = 0; k < idx.size(); ++k) p *= v[k](static_cast<Eigen::Index>(idx[k]));
    t[paro::linear_index(shape, idx)] = p;
  });
  return t;
}

/// 2 x 2 x 2 tensor from two frontal slices given row by row.
inline DenseTensor tensor_222(const std::array<std::array<double, 4>, 2>& slices) {
  DenseTensor t({2, 2, 2});
  for (std::size_t k = 0; k < 2; ++k) {
    t({0, 0, k}) = slices[k][0];
    t({0, 1, k}) = slices[k][1];
    t({1, 0, k}) = slices[k][2];
    t({1, 1, k}) = slices[k][3];
  }
  return t;
}

/// The 2 x 2 x 2 tensor on which ALS from the SVD initialization stalls.
inline DenseTensor failure_tensor() { return tensor_222({{{0, 2, 2, 0}, {0, 2, -2, -1}}}); }

/// Three further 2 x 2 x 2 tensors on which ALS often fails.
inline std::vector<DenseTensor> extra_failure_tensors() {
  return {tensor_222({{{2, -2, 1, 0}, {0, 0, 2, 2}}}),
          tensor_222({{{1, -1, 2, -1}, {1, -2, -2, -2}}}),
          tensor_222({{{-2, 1, 1, -2}, {-1, 2, 0, 2}}})};
}

/// The 2 x 2 x 2 x 2 tensor with slices Y_{i,j} = Y(:, :, i, j).
inline DenseTensor failure_tensor_2222() {
  const std::array<std::array<double, 4>, 4> s = {{{-1, -2, -2, 2},   // (1,1)
                                                   {0, -2, 2, 0},     // (2,1)
                                                   {0, 2, -2, 1},     // (1,2)
                                                   {-1, 0, -2, 1}}};  // (2,2)
  const std::array<std::array<std::size_t, 2>, 4> where = {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
  DenseTensor t({2, 2, 2, 2});
  for (std::size_t q = 0; q < 4; ++q) {
    const auto [i, j] = where[q];
    t({0, 0, i, j}) = s[q][0];
    t({0, 1, i, j}) = s[q][1];
    t({1, 0, i, j}) = s[q][2];
    t({1, 1, i, j}) = s[q][3];
  }
  return t;
}

inline Vector angle_vector(double a) {
  Vector v(2);
  v << std::cos(a), std::sin(a);
  return v;
}

inline double sigma_max(const Eigen::Matrix2d& m) {
  return Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues()(0);
}

/// 2 x 2 matrix W x_3 eta for a 2 x 2 x 2 tensor.
inline Eigen::Matrix2d project_222(const DenseTensor& w, const Vector& eta) {
  const DenseTensor m = paro::ttv(w, eta, 2);
  Eigen::Matrix2d out;
  out << m({0, 0}), m({0, 1}), m({1, 0}), m({1, 1});
  return out;
}

/// 2 x 2 matrix W x_3 eta3 x_4 eta4 for a 2 x 2 x 2 x 2 tensor.
inline Eigen::Matrix2d project_2222(const DenseTensor& w, const Vector& e3, const Vector& e4) {
  const DenseTensor m = paro::ttv(paro::ttv(w, e4, 3), e3, 2);
  Eigen::Matrix2d out;
  out << m({0, 0}), m({0, 1}), m({1, 0}), m({1, 1});
  return out;
}

/// max over an n-point grid on [0, pi) of sigma_max(W x_3 eta(alpha)).
inline double grid_max_222(const DenseTensor& w, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    best = std::max(best, sigma_max(project_222(w, angle_vector(a))));
  }
  return best;
}

/// max over an n x n grid on [0, pi)^2 of sigma_max(W x_3 eta(a) x_4 eta(b)).
inline double grid_max_2222(const DenseTensor& w, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    const DenseTensor w3 = paro::ttv(w, angle_vector(a), 2);
    for (std::size_t j = 0; j < n; ++j) {
      const double b = std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
      const DenseTensor m = paro::ttv(w3, angle_vector(b), 2);
      Eigen::Matrix2d mm;
      mm << m({0, 0}), m({0, 1}), m({1, 0}), m({1, 1});
      best = std::max(best, sigma_max(mm));
    }
  }
  return best;
}

}  // namespace fixtures
