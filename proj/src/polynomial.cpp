#include "paro/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace paro {

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  Polynomial d;
  for (std::size_t k = 1; k < coeffs.size(); ++k) {
    d.coeffs.push_back(static_cast<double>(k) * coeffs[k]);
  }
  return d;
}

int Polynomial::degree() const {
  for (std::size_t k = coeffs.size(); k-- > 0;) {
    if (coeffs[k] != 0.0) return static_cast<int>(k);
  }
  return -1;
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (double c : coeffs) m = std::max(m, std::abs(c));
  return m;
}

std::vector<double> real_roots(const Polynomial& p, double imag_tol) {
  const int deg = p.degree();
  std::vector<double> roots;
  if (deg < 1) return roots;
  // Zero roots are split off so the companion matrix stays nonsingular.
  int low = 0;
  while (p.coeffs[static_cast<std::size_t>(low)] == 0.0) ++low;
  for (int k = 0; k < low; ++k) roots.push_back(0.0);
  const int n = deg - low;
  if (n >= 1) {
    const double lead = p.coeffs[static_cast<std::size_t>(deg)];
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) {
      comp(i, n - 1) = -p.coeffs[static_cast<std::size_t>(low + i)] / lead;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    const auto& ev = es.eigenvalues();
    for (int i = 0; i < n; ++i) {
      const double re = ev(i).real();
      if (std::abs(ev(i).imag()) <= imag_tol * (1.0 + std::abs(re))) roots.push_back(re);
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double newton_polish(const Polynomial& p, double x, int steps) {
  const Polynomial d = p.derivative();
  for (int s = 0; s < steps; ++s) {
    const double fx = p(x);
    const double dx = d(x);
    if (dx == 0.0 || !std::isfinite(fx / dx)) break;
    const double cand = x - fx / dx;
    if (std::abs(p(cand)) <= std::abs(fx)) x = cand;
  }
  return x;
}

}  // namespace paro
