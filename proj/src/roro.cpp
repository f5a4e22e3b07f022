#include "paro/roro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace paro {

namespace {

// Contracts every mode not listed in `keep` with the matching factor.
DenseTensor contract_except(const DenseTensor& w, const std::vector<Vector>& u,
                            const std::vector<std::size_t>& keep) {
  DenseTensor cur = w;
  for (std::size_t k = w.order(); k-- > 0;) {
    if (std::find(keep.begin(), keep.end(), k) == keep.end()) cur = ttv(cur, u[k], k);
  }
  return cur;
}

QuantizedFit cyclic_order3_run(const DenseTensor& w, std::vector<Vector> u) {
  const std::size_t n = w.order();
  double prev = -std::numeric_limits<double>::infinity();
  double sigma = contract_all(w, u);
  for (int sweep = 0; sweep < 100; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> keep{i, (i + 1) % n, (i + 2) % n};
      std::sort(keep.begin(), keep.end());
      const ClosedForm222 cf = best_rank1_222(contract_except(w, u, keep));
      if (cf.sigma >= contract_all(w, u)) {
        for (std::size_t j = 0; j < 3; ++j) u[keep[j]] = cf.factors[j];
      }
    }
    sigma = contract_all(w, u);
    if (std::abs(sigma - prev) < 1e-12) break;
    prev = sigma;
  }
  return {sigma, u};
}

}  // namespace

Vector degenerate_mode_basis(const Vector& u) {
  const Eigen::Index n = u.size();
  if (n < 2) throw ShapeError("a mode of extent 1 has no orthogonal complement");
  const double threshold = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector r = -u(j) * u;
    r(j) += 1.0;
    const double r2 = r.squaredNorm();
    if (r2 >= threshold) return r / std::sqrt(r2);
  }
  // Unreachable for unit u: the squared residuals sum to n - 1 >= n * (1/n).
  throw DegenerateError("degenerate_mode_basis needs a unit vector");
}

RotationBasis rotation_basis(const MultilinearTarget& target, const std::vector<Vector>& unit) {
  const std::size_t n = unit.size();
  RotationBasis rb;
  rb.bases.resize(n);
  rb.frozen.assign(n, false);
  rb.degenerate.assign(n, false);
  rb.xi = target.contract_all(unit);
  const double threshold = 1e-12 * std::max(1.0, rb.xi * rb.xi);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector& u = unit[k];
    if (u.size() == 1) {
      rb.frozen[k] = true;
      rb.bases[k] = u;
      continue;
    }
    const Vector t = target.contract_all_but(unit, k);
    Vector g = rb.xi * t - rb.xi * rb.xi * u;
    g -= u.dot(g) * u;
    const double gn = g.norm();
    rb.bases[k].resize(u.size(), 2);
    rb.bases[k].col(0) = u;
    if (gn <= threshold) {
      rb.degenerate[k] = true;
      rb.bases[k].col(1) = degenerate_mode_basis(u);
    } else {
      rb.bases[k].col(1) = g / gn;
    }
  }
  return rb;
}

QuantizedFit best_rank1_quantized(const DenseTensor& w) {
  for (std::size_t e : w.shape()) {
    if (e != 2) throw ShapeError("best_rank1_quantized needs a 2 x ... x 2 tensor");
  }
  const std::size_t n = w.order();
  QuantizedFit incumbent{w[0], std::vector<Vector>(n, Vector::Unit(2, 0))};
  QuantizedFit fit;
  switch (n) {
    case 0:
      return incumbent;
    case 1: {
      Vector v(2);
      v << w[0], w[1];
      const double nrm = v.norm();
      if (nrm == 0.0) return incumbent;
      fit = {nrm, {v / nrm}};
      break;
    }
    case 2: {
      Eigen::Matrix2d m;
      m << w[0], w[2], w[1], w[3];
      const Svd2x2 s = svd_2x2(m);
      fit = {s.sigma, {Vector(s.u), Vector(s.v)}};
      break;
    }
    case 3: {
      const ClosedForm222 cf = best_rank1_222(w);
      fit = {cf.sigma, cf.factors};
      break;
    }
    case 4: {
      Options2222 opts;
      opts.incumbent = incumbent.factors;
      fit = best_rank1_2222(w, Method2222::als3, opts);
      break;
    }
    default: {
      fit = cyclic_order3_run(w, incumbent.factors);
      const QuantizedFit alt = cyclic_order3_run(w, svd_init(w).factors);
      if (alt.sigma > fit.sigma) fit = alt;
      break;
    }
  }
  return fit.sigma >= incumbent.sigma ? fit : incumbent;
}

Rank1Model roro_step(const MultilinearTarget& target, const Rank1Model& model) {
  model.check_shape(target.shape());
  const Rank1Model m = model.unit();
  const RotationBasis rb = rotation_basis(target, m.factors);
  bool stationary = true;
  for (std::size_t k = 0; k < m.order(); ++k) {
    if (!rb.frozen[k] && !rb.degenerate[k]) stationary = false;
  }
  bool all_frozen = true;
  for (std::size_t k = 0; k < m.order(); ++k) all_frozen = all_frozen && rb.frozen[k];
  if (all_frozen) return model;

  const DenseTensor w = target.project(rb.bases);
  Shape reduced;
  for (std::size_t k = 0; k < m.order(); ++k) {
    if (!rb.frozen[k]) reduced.push_back(2);
  }
  const std::vector<double> data(w.data().begin(), w.data().end());
  const QuantizedFit fit = best_rank1_quantized(DenseTensor(reduced, data));
  // A stationary point is left only for a strictly larger |xi|; saddles of the
  // ALS map are escaped through the complement directions.
  if (stationary && !(fit.sigma > std::abs(rb.xi) + 1e-12 * std::max(1.0, rb.xi * rb.xi))) {
    return model;
  }

  Rank1Model out = m;
  std::size_t j = 0;
  for (std::size_t k = 0; k < m.order(); ++k) {
    if (rb.frozen[k]) continue;
    Vector u = rb.bases[k] * fit.factors[j++];
    out.factors[k] = u / u.norm();
  }
  out.weight = target.contract_all(out.factors);
  return out;
}

Rank1Model roro_step(const DenseTensor& t, const Rank1Model& model) {
  return roro_step(DenseTarget(t), model);
}

}  // namespace paro
