#include "paro/quantized.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "paro/rank1.hpp"

namespace paro {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void require_shape(const DenseTensor& w, std::size_t order, const char* what) {
  if (w.order() != order) throw ShapeError(std::string(what) + ": wrong order");
  for (std::size_t e : w.shape()) {
    if (e != 2) throw ShapeError(std::string(what) + ": all extents must be 2");
  }
}

Eigen::Vector3d h_vec(double t) { return {std::cos(2.0 * t), std::sin(2.0 * t), 1.0}; }

Vector angle_vec(double t) {
  Vector v(2);
  v << std::cos(t), std::sin(t);
  return v;
}

// Ascending-degree polynomial from a [x^6..1] coefficient vector.
Polynomial from_descending(const Eigen::Matrix<double, 7, 1>& v) {
  Polynomial p;
  p.coeffs.resize(7);
  for (int k = 0; k < 7; ++k) p.coeffs[static_cast<std::size_t>(k)] = v(6 - k);
  return p;
}

double f_ab(const ABMatrices& m, double alpha, double beta) {
  const Eigen::Vector3d ha = h_vec(alpha);
  const Eigen::Vector3d hb = h_vec(beta);
  const double a = ha.dot(m.a * hb);
  const double b = ha.dot(m.b * hb);
  return a + std::sqrt(std::max(a * a - b * b, 0.0));
}

// Angle maximizing f along one coordinate. Candidates: the incumbent, the
// boundary pi/2, the maximizer of a alone, and arctan of every real root.
double best_angle(const Polynomial& p, double incumbent, double a_argmax,
                  const std::function<double(double)>& f) {
  std::vector<double> cands{incumbent, kHalfPi, a_argmax};
  if (p.max_abs_coeff() > 0.0) {
    for (double x : real_roots(p)) cands.push_back(std::atan(newton_polish(p, x, 2)));
  }
  double best = cands.front();
  double best_val = f(best);
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double v = f(cands[i]);
    if (v > best_val) {
      best_val = v;
      best = cands[i];
    }
  }
  return best;
}

QuantizedFit finish_2222(const DenseTensor& w, double alpha, double beta) {
  const Vector e3 = angle_vec(alpha);
  const Vector e4 = angle_vec(beta);
  const DenseTensor m3 = ttv(ttv(w, e4, 3), e3, 2);
  Eigen::Matrix2d m;
  m << m3[0], m3[2], m3[1], m3[3];
  const Svd2x2 s = svd_2x2(m);
  QuantizedFit fit;
  fit.factors = {Vector(s.u), Vector(s.v), e3, e4};
  fit.sigma = contract_all(w, fit.factors);
  return fit;
}

}  // namespace

double sigma_max_2x2(const Eigen::Matrix2d& w) {
  const double a = w.squaredNorm();
  const double b = 2.0 * w.determinant();
  // a^2 >= b^2 always holds; rounding can make the difference slightly negative.
  const double disc = std::max(a * a - b * b, 0.0);
  return std::sqrt((a + std::sqrt(disc)) / 2.0);
}

Svd2x2 svd_2x2(const Eigen::Matrix2d& w) {
  const double p = w(0, 0) * w(0, 0) + w(0, 1) * w(0, 1);
  const double r = w(1, 0) * w(1, 0) + w(1, 1) * w(1, 1);
  const double q = w(0, 0) * w(1, 0) + w(0, 1) * w(1, 1);
  const double theta = 0.5 * std::atan2(2.0 * q, p - r);
  Svd2x2 out;
  out.u = {std::cos(theta), std::sin(theta)};
  Eigen::Vector2d v = w.transpose() * out.u;
  const double s = v.norm();
  if (s > 0.0) {
    out.v = v / s;
    out.sigma = out.u.dot(w * out.v);
  } else {
    out.u = Eigen::Vector2d::UnitX();
    out.v = Eigen::Vector2d::UnitX();
    out.sigma = 0.0;
  }
  return out;
}

Eigen::Matrix2d frontal_slice(const DenseTensor& w, std::size_t k) {
  require_shape(w, 3, "frontal_slice");
  const std::size_t o = 4 * k;
  Eigen::Matrix2d m;
  m << w[o], w[o + 2], w[o + 1], w[o + 3];
  return m;
}

OrthogonalizedSlices orthogonalize_slices(const DenseTensor& w) {
  require_shape(w, 3, "orthogonalize_slices");
  const Eigen::Matrix2d w1 = frontal_slice(w, 0);
  const Eigen::Matrix2d w2 = frontal_slice(w, 1);
  const double g11 = w1.squaredNorm();
  const double g22 = w2.squaredNorm();
  const double g12 = (w1.array() * w2.array()).sum();
  Eigen::Matrix2d z = Eigen::Matrix2d::Identity();
  if (g12 != 0.0) {
    double theta = 0.5 * std::atan2(2.0 * g12, g11 - g22);
    if (theta > std::numbers::pi / 4.0) theta -= kHalfPi;
    if (theta <= -std::numbers::pi / 4.0) theta += kHalfPi;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    z << c, -s, s, c;
  }
  return {ttm(w, z, 2), z};
}

double ABCoeffs::a(double t) const {
  return a1 * std::cos(2.0 * t) + a2 * std::sin(2.0 * t) + a3;
}

double ABCoeffs::b(double t) const {
  return b1 * std::cos(2.0 * t) + b2 * std::sin(2.0 * t) + b3;
}

double ABCoeffs::f(double t) const {
  const double av = a(t);
  const double bv = b(t);
  return av + std::sqrt(std::max(av * av - bv * bv, 0.0));
}

ABCoeffs ab_coeffs(const DenseTensor& w) {
  require_shape(w, 3, "ab_coeffs");
  const double w1 = w[0], w2 = w[1], w3 = w[2], w4 = w[3];
  const double w5 = w[4], w6 = w[5], w7 = w[6], w8 = w[7];
  const double n1 = w1 * w1 + w2 * w2 + w3 * w3 + w4 * w4;
  const double n2 = w5 * w5 + w6 * w6 + w7 * w7 + w8 * w8;
  ABCoeffs c;
  c.a1 = 0.5 * (n1 - n2);
  c.a2 = w1 * w5 + w2 * w6 + w3 * w7 + w4 * w8;
  c.a3 = 0.5 * (n1 + n2);
  c.b1 = -w1 * w4 + w2 * w3 + w5 * w8 - w6 * w7;
  c.b2 = -w1 * w8 + w2 * w7 + w3 * w6 - w4 * w5;
  c.b3 = -w1 * w4 + w2 * w3 - w5 * w8 + w6 * w7;
  return c;
}

Polynomial degree6_coeffs(const ABCoeffs& ab) {
  if (std::abs(ab.a2) > 1e-10 * std::max(1.0, ab.a3)) {
    throw std::invalid_argument(
        "degree6_coeffs: frontal slices are not orthogonal (a2 != 0); call "
        "orthogonalize_slices first");
  }
  const double a1 = ab.a1, a3 = ab.a3, b1 = ab.b1, b2 = ab.b2, b3 = ab.b3;
  const double b22 = b2 * b2;
  Polynomial p;
  p.coeffs = {
      b22 * (b3 + b1),
      2.0 * b2 * (2.0 * a1 * a1 + 2.0 * a1 * a3 - 2.0 * b1 * b1 - 2.0 * b1 * b3 + b22),
      -4.0 * a1 * a1 * (b1 - b3) - 8.0 * a1 * a3 * b1 + 4.0 * b1 * b1 * (b1 + b3) -
          11.0 * b1 * b22 - b3 * b22,
      16.0 * b1 * b1 * b2 - 4.0 * b22 * b2,
      4.0 * a1 * a1 * (b1 + b3) - 8.0 * a1 * a3 * b1 - 4.0 * b1 * b1 * (b1 - b3) +
          11.0 * b1 * b22 - b3 * b22,
      2.0 * b2 * (2.0 * a1 * a1 - 2.0 * a3 * a1 - 2.0 * b1 * b1 + 2.0 * b3 * b1 + b22),
      b22 * (b3 - b1),
  };
  return p;
}

double degree6_residual(const Polynomial& p, std::optional<double> x) {
  const double t = x ? std::atan(*x) : kHalfPi;
  const double s = std::sin(t);
  const double c = std::cos(t);
  double acc = 0.0;
  for (std::size_t k = 0; k < p.coeffs.size(); ++k) {
    acc += p.coeffs[k] * std::pow(s, static_cast<double>(k)) *
           std::pow(c, static_cast<double>(p.coeffs.size() - 1 - k));
  }
  return std::abs(acc);
}

ClosedForm222 best_rank1_222(const DenseTensor& w) {
  require_shape(w, 3, "best_rank1_222");
  ClosedForm222 out;
  if (squared_norm(w) == 0.0) {
    out.factors.assign(3, Vector::Unit(2, 0));
    out.sigma = 0.0;
    out.x_star = 0.0;
    out.poly.coeffs.assign(7, 0.0);
    return out;
  }
  const OrthogonalizedSlices rot = orthogonalize_slices(w);
  const ABCoeffs ab = ab_coeffs(rot.w);
  out.poly = degree6_coeffs(ab);

  struct Candidate {
    double alpha;
    std::optional<double> x;
  };
  std::vector<Candidate> cands;
  const double scale = ab.a3 * ab.a3 * ab.a3;
  if (out.poly.max_abs_coeff() <= 1e-13 * scale) {
    // f is constant up to rounding; any direction is optimal.
    cands.push_back({0.0, 0.0});
  } else {
    // Coefficients at rounding level relative to the largest one are exact
    // zeros (b2 = 0 or roots at 0 and infinity); left in, they wreck the
    // companion matrix.
    Polynomial trimmed = out.poly;
    const double floor = 1e-12 * out.poly.max_abs_coeff();
    for (double& c : trimmed.coeffs) {
      if (std::abs(c) <= floor) c = 0.0;
    }
    for (double r : real_roots(trimmed)) {
      const double x = newton_polish(out.poly, r, 2);
      cands.push_back({std::atan(x), x});
    }
  }
  cands.push_back({kHalfPi, std::nullopt});

  std::size_t best = 0;
  double best_f = ab.f(cands[0].alpha);
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double f = ab.f(cands[i].alpha);
    if (f > best_f) {
      best_f = f;
      best = i;
    }
  }
  out.alpha_star = cands[best].alpha;
  out.x_star = cands[best].x;

  const Eigen::Vector2d eta_rot{std::cos(out.alpha_star), std::sin(out.alpha_star)};
  const Vector eta3 = rot.z * eta_rot;
  const DenseTensor m2 = ttv(w, eta3, 2);
  Eigen::Matrix2d m;
  m << m2[0], m2[2], m2[1], m2[3];
  const Svd2x2 s = svd_2x2(m);
  out.factors = {Vector(s.u), Vector(s.v), eta3};
  out.sigma = contract_all(w, out.factors);
  return out;
}

const Eigen::Matrix<double, 3, 4>& q_matrix() {
  static const Eigen::Matrix<double, 3, 4> q = [] {
    Eigen::Matrix<double, 3, 4> m;
    m << 1, 0, 0, -1,
         0, 1, 1, 0,
         1, 0, 0, 1;
    return m;
  }();
  return q;
}

const Eigen::Matrix4d& r_matrix() {
  static const Eigen::Matrix4d r = [] {
    Eigen::Matrix4d m;
    m << 0, 0, 0, 1,
         0, 0, -1, 0,
         0, -1, 0, 0,
         1, 0, 0, 0;
    return m;
  }();
  return r;
}

const Eigen::Matrix3d& f_matrix() {
  static const Eigen::Matrix3d f = [] {
    Eigen::Matrix3d m;
    m << 0, -1, 0,
         1, 0, 0,
         0, 0, 0;
    return m;
  }();
  return f;
}

const Eigen::Matrix<double, 7, 27>& k_matrix() {
  static const Eigen::Matrix<double, 7, 27> k = [] {
    Eigen::Matrix<double, 7, 27> m;
    m << -1, 0, 1, 0, 0, 0, 1, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1, 0, 1,
          0, 2, 0, 2, 0, -2, 0, -2, 0, 2, 0, -2, 0, 0, 0, -2, 0, 2, 0, -2, 0, -2, 0, 2, 0, 2, 0,
          3, 0, -1, 0, -4, 0, -1, 0, -1, 0, -4, 0, -4, 0, 4, 0, 4, 0, -1, 0, -1, 0, 4, 0, -1, 0, 3,
          0, -4, 0, -4, 0, 0, 0, 0, 0, -4, 0, 0, 0, 8, 0, 0, 0, 4, 0, 0, 0, 0, 0, 4, 0, 4, 0,
         -3, 0, -1, 0, 4, 0, -1, 0, 1, 0, 4, 0, 4, 0, 4, 0, 4, 0, -1, 0, 1, 0, 4, 0, 1, 0, 3,
          0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 0, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 2, 0,
          1, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 1;
    return m;
  }();
  return k;
}

const Eigen::Matrix<double, 16, 16>& p1324_matrix() {
  static const Eigen::Matrix<double, 16, 16> p = [] {
    // Row i selects input entry src[i]: bits 1 and 2 of the index swapped.
    static constexpr int src[16] = {0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15};
    Eigen::Matrix<double, 16, 16> m = Eigen::Matrix<double, 16, 16>::Zero();
    for (int i = 0; i < 16; ++i) m(i, src[i]) = 1.0;
    return m;
  }();
  return p;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ABMatrices ab_matrices_2222(const DenseTensor& w) {
  require_shape(w, 4, "ab_matrices_2222");
  // Mode-(1,2) matricization: rows (i, j), columns (k, l), both column-major.
  const Eigen::Map<const Eigen::Matrix4d> wm(w.data().data());
  const Eigen::Matrix4d ga = wm.transpose() * wm;
  const Eigen::Matrix4d gb = wm.transpose() * r_matrix() * wm;
  const Matrix qq = kron(q_matrix(), q_matrix());
  const Matrix reduce = 0.25 * qq * p1324_matrix().transpose();
  const Eigen::Map<const Vector> va(ga.data(), 16);
  const Eigen::Map<const Vector> vb(gb.data(), 16);
  const Vector ma = reduce * va;
  const Vector mb = reduce * vb;
  ABMatrices out;
  // Entry (i_alpha, i_beta) sits at i_alpha + 3 i_beta.
  out.a = Eigen::Map<const Eigen::Matrix3d>(ma.data());
  out.b = Eigen::Map<const Eigen::Matrix3d>(mb.data());
  return out;
}

BivariateMatrices bivariate_coeff_matrices(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d& f = f_matrix();
  const Matrix fa = f.transpose() * a;
  const Matrix fb = f.transpose() * b;
  const Matrix af = a * f;
  const Matrix bf = b * f;
  const Matrix inner1 = kron(b, kron(fa, fa) + kron(fb, fb)) - 2.0 * kron(a, kron(fa, fb));
  const Matrix inner2 = kron(b, kron(af, af) + kron(bf, bf)) - 2.0 * kron(a, kron(af, bf));
  const auto& k = k_matrix();
  BivariateMatrices out;
  out.c1 = k * inner1 * k.transpose();
  out.c2 = k * inner2 * k.transpose();
  return out;
}

Eigen::Matrix<double, 7, 1> homogeneous_powers(double t) {
  const double s = std::sin(t);
  const double c = std::cos(t);
  Eigen::Matrix<double, 7, 1> v;
  for (int k = 0; k < 7; ++k) {
    v(k) = std::pow(s, 6.0 - k) * std::pow(c, static_cast<double>(k));
  }
  return v;
}

DenseTensor contract_mode(const DenseTensor& w, const Vector& u, std::size_t mode) {
  require_shape(w, 4, "contract_mode");
  return ttv(w, u, mode);
}

QuantizedFit als3_run(const DenseTensor& w, const Vector& u1, const Options2222& options,
                      std::vector<double>* trace) {
  require_shape(w, 4, "als3_run");
  std::vector<Vector> u{u1.normalized(), Vector::Unit(2, 0), Vector::Unit(2, 0),
                        Vector::Unit(2, 0)};
  double prev = -std::numeric_limits<double>::infinity();
  double sigma = prev;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (std::size_t n = 0; n < 4; ++n) {
      const ClosedForm222 cf = best_rank1_222(contract_mode(w, u[n], n));
      const bool first = sweep == 0 && n == 0;
      // The incumbent is feasible for the subproblem; keep it unless beaten.
      if (first || cf.sigma >= contract_all(w, u)) {
        std::size_t j = 0;
        for (std::size_t k = 0; k < 4; ++k) {
          if (k != n) u[k] = cf.factors[j++];
        }
      }
    }
    sigma = contract_all(w, u);
    if (trace) trace->push_back(sigma);
    if (std::abs(sigma - prev) < options.tol) break;
    prev = sigma;
  }
  return {sigma, u};
}

QuantizedFit bivariate_run(const DenseTensor& w, double alpha0, double beta0,
                           const Options2222& options) {
  require_shape(w, 4, "bivariate_run");
  const ABMatrices ab = ab_matrices_2222(w);
  const BivariateMatrices c = bivariate_coeff_matrices(ab.a, ab.b);
  double alpha = alpha0;
  double beta = beta0;
  double prev = -std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    {
      const Polynomial p = from_descending(c.c1 * homogeneous_powers(beta));
      const Eigen::Vector3d v = ab.a * h_vec(beta);
      alpha = best_angle(p, alpha, 0.5 * std::atan2(v(1), v(0)),
                         [&](double t) { return f_ab(ab, t, beta); });
    }
    {
      const Polynomial p = from_descending(c.c2.transpose() * homogeneous_powers(alpha));
      const Eigen::Vector3d v = ab.a.transpose() * h_vec(alpha);
      beta = best_angle(p, beta, 0.5 * std::atan2(v(1), v(0)),
                        [&](double t) { return f_ab(ab, alpha, t); });
    }
    const double sigma = std::sqrt(std::max(f_ab(ab, alpha, beta), 0.0) / 2.0);
    if (std::abs(sigma - prev) < options.tol) break;
    prev = sigma;
  }
  return finish_2222(w, alpha, beta);
}

QuantizedFit best_rank1_2222(const DenseTensor& w, Method2222 method,
                             const Options2222& options) {
  require_shape(w, 4, "best_rank1_2222");
  std::vector<QuantizedFit> runs;
  if (method == Method2222::als3) {
    std::vector<Vector> starts;
    if (options.incumbent) starts.push_back(options.incumbent->at(0));
    starts.push_back(svd_init(w).factors[0]);
    for (int k = 0; k < 4; ++k) starts.push_back(angle_vec(std::numbers::pi * k / 4.0));
    for (const Vector& s : starts) runs.push_back(als3_run(w, s, options));
  } else {
    std::vector<std::pair<double, double>> starts;
    if (options.incumbent) {
      const auto& inc = *options.incumbent;
      starts.emplace_back(std::atan2(inc.at(2)(1), inc.at(2)(0)),
                          std::atan2(inc.at(3)(1), inc.at(3)(0)));
    }
    for (int k = 0; k < 4; ++k) starts.emplace_back(0.0, std::numbers::pi * k / 4.0);
    for (const auto& [a0, b0] : starts) runs.push_back(bivariate_run(w, a0, b0, options));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].sigma > runs[best].sigma) best = i;
  }
  return runs[best];
}

}  // namespace paro
