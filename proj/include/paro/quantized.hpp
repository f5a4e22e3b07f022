#pragma once

// Best rank-1 approximation of 2 x 2 x 2 and 2 x 2 x 2 x 2 tensors.
//
// Order 3: with eta_3 = [cos a, sin a], the best value is sigma_max of the
// 2 x 2 matrix W x_3 eta_3, and f(a) = a(a) + sqrt(a(a)^2 - b(a)^2) =
// 2 sigma_max^2 where a(a) is the squared Frobenius norm and b(a) twice the
// determinant. Both are linear in [cos 2a, sin 2a, 1]; stationary points of f
// are roots of a degree-6 polynomial in x = tan a.
//
// Order 4: a and b become bilinear forms h(a)^T A h(b) with
// h(t) = [cos 2t, sin 2t, 1]; the stationarity conditions in each angle are
// degree-6 polynomials whose coefficients come from two 7 x 7 matrices.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "paro/polynomial.hpp"
#include "paro/tensor.hpp"

namespace paro {

struct Svd2x2 {
  double sigma = 0.0;
  Eigen::Vector2d u = Eigen::Vector2d::UnitX();
  Eigen::Vector2d v = Eigen::Vector2d::UnitX();
};

/// sigma_max^2 = (a + sqrt(a^2 - b^2)) / 2 with a = ||W||_F^2, b = 2 det W.
double sigma_max_2x2(const Eigen::Matrix2d& w);

/// Dominant singular triplet; sigma = u^T W v >= 0.
Svd2x2 svd_2x2(const Eigen::Matrix2d& w);

/// Frontal slice k of a 2 x 2 x 2 tensor.
Eigen::Matrix2d frontal_slice(const DenseTensor& w, std::size_t k);

struct OrthogonalizedSlices {
  DenseTensor w;      // W x_3 Z, frontal slices orthogonal
  Eigen::Matrix2d z;  // rotation; eta_3 = z * eta_3(rotated)
};

OrthogonalizedSlices orthogonalize_slices(const DenseTensor& w);

struct ABCoeffs {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;

  /// a(t) = a1 cos 2t + a2 sin 2t + a3.
  double a(double t) const;
  /// b(t) = b1 cos 2t + b2 sin 2t + b3.
  double b(double t) const;
  /// f(t) = a + sqrt(max(a^2 - b^2, 0)) = 2 sigma_max^2(W x_3 eta_3(t)).
  double f(double t) const;
};

ABCoeffs ab_coeffs(const DenseTensor& w);

/// c_0..c_6 in increasing degree. Requires |a2| <= 1e-10 max(1, a3).
Polynomial degree6_coeffs(const ABCoeffs& ab);

/// Homogeneous residual |sum_k c_k sin^k t cos^(6-k) t| at t = atan x (or
/// t = pi/2 when x is absent); equals |p(x)| / (1 + x^2)^3.
double degree6_residual(const Polynomial& p, std::optional<double> x);

struct QuantizedFit {
  double sigma = 0.0;
  std::vector<Vector> factors;  // unit vectors of length 2
};

struct ClosedForm222 : QuantizedFit {
  Polynomial poly;              // degree-6 polynomial of the rotated tensor
  std::optional<double> x_star; // empty when the boundary direction won
  double alpha_star = 0.0;      // angle in the rotated frame
};

ClosedForm222 best_rank1_222(const DenseTensor& w);

/// Q maps eta (x) eta to [cos 2t, sin 2t, 1]; R gives vec(M)^T R vec(M) = 2 det M;
/// F is the half-derivative of h(t); K satisfies K^T [x^6..1] = h~(x) (x) h~(x) (x) h~(x)
/// with h~(x) = [1 - x^2, 2x, 1 + x^2]; P1324 permutes the vectorization of a
/// 2 x 2 x 2 x 2 tensor to that of its (1 3 2 4) mode permutation.
const Eigen::Matrix<double, 3, 4>& q_matrix();
const Eigen::Matrix4d& r_matrix();
const Eigen::Matrix3d& f_matrix();
const Eigen::Matrix<double, 7, 27>& k_matrix();
const Eigen::Matrix<double, 16, 16>& p1324_matrix();

Matrix kron(const Matrix& a, const Matrix& b);

struct ABMatrices {
  Eigen::Matrix3d a;
  Eigen::Matrix3d b;
};

/// a(alpha, beta) = h(alpha)^T A h(beta), b likewise, for the projection of
/// modes 3 and 4 onto [cos alpha, sin alpha] and [cos beta, sin beta].
ABMatrices ab_matrices_2222(const DenseTensor& w);

struct BivariateMatrices {
  Eigen::Matrix<double, 7, 7> c1;
  Eigen::Matrix<double, 7, 7> c2;
};

BivariateMatrices bivariate_coeff_matrices(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

/// [x^6, x^5, ..., 1] scaled by cos^6 t for x = tan t; finite at t = pi/2.
Eigen::Matrix<double, 7, 1> homogeneous_powers(double t);

enum class Method2222 { als3, bivariate };

struct Options2222 {
  int max_sweeps = 100;
  double tol = 1e-12;
  /// Extra starting point; als3 uses its first factor, bivariate its angles.
  std::optional<std::vector<Vector>> incumbent;
};

/// Multi-start alternation; the best start wins. sigma = <W, u_1 o ... o u_4>.
QuantizedFit best_rank1_2222(const DenseTensor& w, Method2222 method,
                             const Options2222& options = {});

/// One ALS3 run from the given first factor. trace receives sigma after
/// every sweep when non-null.
QuantizedFit als3_run(const DenseTensor& w, const Vector& u1, const Options2222& options,
                      std::vector<double>* trace = nullptr);

/// One bivariate alternation from angles (alpha0, beta0).
QuantizedFit bivariate_run(const DenseTensor& w, double alpha0, double beta0,
                           const Options2222& options);

/// 2 x 2 x 2 tensor slice W x_mode u for a 2 x 2 x 2 x 2 tensor.
DenseTensor contract_mode(const DenseTensor& w, const Vector& u, std::size_t mode);

}  // namespace paro
