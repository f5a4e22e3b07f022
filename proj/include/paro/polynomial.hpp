#pragma once

#include <vector>

namespace paro {

/// Real polynomial with coefficients in increasing degree: c[0] + c[1] x + ...
struct Polynomial {
  std::vector<double> coeffs;

  double operator()(double x) const;
  Polynomial derivative() const;
  /// Degree after dropping exactly-zero leading coefficients; -1 for zero.
  int degree() const;
  double max_abs_coeff() const;
};

/// Real roots from companion-matrix eigenvalues. An eigenvalue is kept when
/// |Im| <= imag_tol * (1 + |Re|). Sorted ascending; empty for constants.
std::vector<double> real_roots(const Polynomial& p, double imag_tol = 1e-8);

/// `steps` Newton iterations on p starting at x; a step is skipped when the
/// derivative vanishes or the update would not reduce |p|.
double newton_polish(const Polynomial& p, double x, int steps = 2);

}  // namespace paro
