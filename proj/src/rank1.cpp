#include "paro/rank1.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "paro/roro.hpp"

namespace paro {

namespace {

double signed_root(double value, std::size_t n) {
  return std::pow(std::abs(value), 1.0 / static_cast<double>(n));
}

// Top eigenvector of m * m^T with the sign rule applied.
Vector leading_left_vector(const Matrix& m) {
  const Matrix gram = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  Vector u = es.eigenvectors().col(gram.rows() - 1);
  apply_sign_rule(u);
  return u;
}

}  // namespace

Shape Rank1Model::shape() const {
  Shape s;
  for (const Vector& u : factors) s.push_back(static_cast<std::size_t>(u.size()));
  return s;
}

std::vector<double> Rank1Model::gammas() const {
  std::vector<double> g;
  g.reserve(factors.size());
  for (const Vector& u : factors) g.push_back(u.squaredNorm());
  return g;
}

double Rank1Model::gamma() const {
  double p = 1.0;
  for (const Vector& u : factors) p *= u.squaredNorm();
  return p;
}

double Rank1Model::alpha() const {
  if (factors.empty()) return 1.0;
  return std::pow(gamma(), 1.0 / static_cast<double>(factors.size()));
}

double Rank1Model::xi(const MultilinearTarget& target) const {
  return target.contract_all(factors);
}

DenseTensor Rank1Model::reconstruct() const {
  DenseTensor out(shape());
  accumulate_outer(out.data(), out.shape(), factors, weight);
  return out;
}

Rank1Model Rank1Model::absorbed() const {
  Rank1Model m = *this;
  if (weight == 1.0 || factors.empty()) {
    m.weight = 1.0;
    return m;
  }
  const double s = signed_root(weight, factors.size());
  for (Vector& u : m.factors) u *= s;
  if (weight < 0.0) m.factors.front() = -m.factors.front();
  m.weight = 1.0;
  return m;
}

Rank1Model Rank1Model::unit() const {
  Rank1Model m = *this;
  for (Vector& u : m.factors) {
    const double nrm = u.norm();
    if (nrm == 0.0) throw DegenerateError("rank-1 model has a zero factor");
    u /= nrm;
    m.weight *= nrm;
  }
  return m;
}

void Rank1Model::check_shape(const Shape& s) const {
  if (factors.size() != s.size()) throw ShapeError("rank-1 model order does not match tensor");
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (static_cast<std::size_t>(factors[k].size()) != s[k]) {
      throw ShapeError("rank-1 factor length does not match tensor extent");
    }
  }
}

bool apply_sign_rule(Vector& v) {
  if (v.size() == 0) return false;
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(imax))) imax = i;
  }
  if (v(imax) < 0.0) {
    v = -v;
    return true;
  }
  return false;
}

double relative_error(const MultilinearTarget& target, const Rank1Model& model) {
  const double res = std::max(target.residual_squared_norm(model), 0.0);
  const double den = target.squared_norm();
  return den > 0.0 ? std::sqrt(res / den) : std::sqrt(res);
}

Rank1Model als_step(const MultilinearTarget& target, const Rank1Model& model) {
  model.check_shape(target.shape());
  Rank1Model m = model.unit();
  double xi = 0.0;
  for (std::size_t n = 0; n < m.order(); ++n) {
    const Vector t = target.contract_all_but(m.factors, n);
    const double nrm = t.norm();
    if (nrm == 0.0) throw DegenerateError("zero projection in ALS update");
    m.factors[n] = t / nrm;
    xi = nrm;
  }
  // After the last update xi = u_N^T t_N = ||t_N||.
  m.weight = xi;
  return m;
}

Rank1Model als_step(const DenseTensor& t, const Rank1Model& model) {
  return als_step(DenseTarget(t), model);
}

Rank1Model svd_init(const DenseTensor& t) {
  Rank1Model m;
  for (std::size_t n = 0; n < t.order(); ++n) m.factors.push_back(leading_left_vector(unfold(t, n)));
  m.weight = contract_all(t, m.factors);
  return m;
}

Rank1Model ttsvd_init(const DenseTensor& t, std::span<const std::size_t> perm) {
  const std::size_t n = t.order();
  if (perm.size() != n) throw ShapeError("permutation length must equal tensor order");
  inverse_permutation(perm);
  const DenseTensor p = permute(t, perm);
  std::vector<Vector> seq(n);
  double scale = 0.0;
  // cur holds the projected data, reshaped to I_k x (I_{k+1} ... I_N).
  Vector cur = Eigen::Map<const Vector>(p.data().data(), static_cast<Eigen::Index>(p.numel()));
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Index rows = static_cast<Eigen::Index>(p.extent(k));
    const Eigen::Index cols = cur.size() / rows;
    const Eigen::Map<const Matrix> m(cur.data(), rows, cols);
    if (k + 1 == n) {
      Vector u = m.col(0);
      const double nrm = u.norm();
      if (nrm == 0.0) {
        u = Vector::Unit(rows, 0);
      } else {
        u /= nrm;
      }
      apply_sign_rule(u);
      scale = u.dot(m.col(0));
      seq[k] = u;
    } else {
      Vector u = leading_left_vector(m);
      Vector next = m.transpose() * u;
      seq[k] = u;
      cur = std::move(next);
    }
  }
  Rank1Model out;
  out.factors.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.factors[perm[k]] = seq[k];
  out.weight = scale;
  return out;
}

Rank1Model balance_normalize(const Rank1Model& model) {
  Rank1Model m = model;
  const std::vector<double> g = m.gammas();
  for (double gn : g) {
    if (gn == 0.0) throw DegenerateError("cannot balance a model with a zero factor");
  }
  const double a = m.alpha();
  for (std::size_t n = 0; n < m.order(); ++n) m.factors[n] *= std::sqrt(a / g[n]);
  return m;
}

Rank1Model optimal_scale(const MultilinearTarget& target, const Rank1Model& model) {
  model.check_shape(target.shape());
  Rank1Model m = model;
  m.weight = 1.0;
  const double gamma = m.gamma();
  if (gamma == 0.0) throw DegenerateError("optimal scaling of a zero model");
  const double lambda = m.xi(target) / gamma;
  if (lambda == 0.0) throw DegenerateError("target is orthogonal to the rank-1 direction");
  const double s = signed_root(lambda, m.order());
  for (Vector& u : m.factors) u *= s;
  if (lambda < 0.0) m.factors.front() = -m.factors.front();
  return m;
}

Rank1Model optimal_scale(const DenseTensor& t, const Rank1Model& model) {
  return optimal_scale(DenseTarget(t), model);
}

std::vector<Vector> rank1_gradients(const MultilinearTarget& target, const Rank1Model& model) {
  model.check_shape(target.shape());
  const Rank1Model m = model.absorbed();
  const std::vector<double> g = m.gammas();
  std::vector<Vector> grads(m.order());
  for (std::size_t n = 0; n < m.order(); ++n) {
    double others = 1.0;
    for (std::size_t k = 0; k < m.order(); ++k) {
      if (k != n) others *= g[k];
    }
    grads[n] = others * m.factors[n] - target.contract_all_but(m.factors, n);
  }
  return grads;
}

std::vector<double> poly_q_coeffs(const DenseTensor& w) {
  for (std::size_t e : w.shape()) {
    if (e != 2) throw ShapeError("poly_q_coeffs needs a 2 x ... x 2 tensor");
  }
  std::vector<double> q(w.order() + 1, 0.0);
  const auto data = w.data();
  for (std::size_t lin = 0; lin < data.size(); ++lin) {
    q[static_cast<std::size_t>(std::popcount(lin))] += data[lin];
  }
  return q;
}

StepPolynomial step_polynomial(const MultilinearTarget& target, const Rank1Model& model,
                               std::span<const Vector> gradients) {
  model.check_shape(target.shape());
  const std::size_t n = model.order();
  if (gradients.size() != n) throw ShapeError("expected one gradient per mode");
  const Rank1Model m = model.absorbed();
  StepPolynomial sp;
  sp.y_sq_norm = target.squared_norm();
  std::vector<Matrix> bases(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector& u = m.factors[k];
    const Vector& g = gradients[k];
    sp.gamma.push_back(u.squaredNorm());
    sp.cross.push_back(u.dot(g));
    sp.c.push_back(g.squaredNorm());
    bases[k].resize(u.size(), 2);
    bases[k].col(0) = u;
    bases[k].col(1) = -g;
  }
  sp.q = poly_q_coeffs(target.project(bases));
  // prod_n (gamma_n - 2 cross_n eta + c_n eta^2)
  std::vector<double> prod{1.0};
  for (std::size_t k = 0; k < n; ++k) {
    const double fac[3] = {sp.gamma[k], -2.0 * sp.cross[k], sp.c[k]};
    std::vector<double> next(prod.size() + 2, 0.0);
    for (std::size_t i = 0; i < prod.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) next[i + j] += prod[i] * fac[j];
    }
    prod.swap(next);
  }
  sp.f.coeffs = prod;
  sp.f.coeffs[0] += sp.y_sq_norm;
  for (std::size_t k = 0; k < sp.q.size(); ++k) sp.f.coeffs[k] -= 2.0 * sp.q[k];
  sp.eta_max = 1.0 / std::pow(m.alpha(), static_cast<double>(n) - 1.0);
  return sp;
}

StepChoice minimize_step(const StepPolynomial& poly) {
  std::vector<double> cands{0.0, poly.eta_max};
  for (double r : real_roots(poly.f.derivative())) {
    if (r > 0.0 && r < poly.eta_max) cands.push_back(r);
  }
  std::sort(cands.begin(), cands.end());
  StepChoice best{cands.front(), poly.f(cands.front())};
  for (double eta : cands) {
    const double v = poly.f(eta);
    if (v < best.value) best = {eta, v};
  }
  return best;
}

Rank1Model r1lm_step(const MultilinearTarget& target, const Rank1Model& model) {
  model.check_shape(target.shape());
  const Rank1Model m = balance_normalize(optimal_scale(target, model.absorbed()));
  const std::vector<Vector> grads = rank1_gradients(target, m);
  double gmax = 0.0;
  for (const Vector& g : grads) gmax = std::max(gmax, g.norm());
  if (gmax == 0.0) return model;
  const StepPolynomial sp = step_polynomial(target, m, grads);
  const StepChoice step = minimize_step(sp);
  if (step.eta == 0.0) return m;
  Rank1Model next = m;
  for (std::size_t n = 0; n < next.order(); ++n) next.factors[n] -= step.eta * grads[n];
  return balance_normalize(optimal_scale(target, next));
}

Rank1Model r1lm_step(const DenseTensor& t, const Rank1Model& model) {
  return r1lm_step(DenseTarget(t), model);
}

Rank1Algorithm parse_rank1_algorithm(const std::string& name) {
  if (name == "als") return Rank1Algorithm::als;
  if (name == "r1lm") return Rank1Algorithm::r1lm;
  if (name == "roro") return Rank1Algorithm::roro;
  throw std::invalid_argument("unknown rank-1 algorithm '" + name + "'");
}

const char* to_string(Rank1Algorithm algo) {
  switch (algo) {
    case Rank1Algorithm::als:
      return "als";
    case Rank1Algorithm::r1lm:
      return "r1lm";
    case Rank1Algorithm::roro:
      return "roro";
  }
  return "?";
}

Rank1Init parse_rank1_init(const std::string& spec) {
  Rank1Init init;
  if (spec == "svd") {
    init.kind = Rank1InitKind::svd;
  } else if (spec == "ttsvd-best") {
    init.kind = Rank1InitKind::ttsvd_best;
  } else if (spec == "ttsvd") {
    init.kind = Rank1InitKind::ttsvd;
  } else if (spec.rfind("ttsvd:", 0) == 0) {
    init.kind = Rank1InitKind::ttsvd;
    std::stringstream ss(spec.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        init.perm.push_back(static_cast<std::size_t>(std::stoul(item)));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad permutation entry '" + item + "'");
      }
    }
  } else {
    throw std::invalid_argument("unknown rank-1 initialization '" + spec + "'");
  }
  return init;
}

Rank1Model rank1_step(Rank1Algorithm algo, const MultilinearTarget& target,
                      const Rank1Model& model) {
  switch (algo) {
    case Rank1Algorithm::als:
      return als_step(target, model);
    case Rank1Algorithm::r1lm:
      return r1lm_step(target, model);
    case Rank1Algorithm::roro:
      return roro_step(target, model);
  }
  throw std::invalid_argument("unknown rank-1 algorithm");
}

std::vector<std::vector<std::size_t>> all_permutations(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

Rank1Result solve_rank1(const DenseTensor& t, const Rank1Options& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (options.init.kind == Rank1InitKind::ttsvd_best) {
    if (t.order() > 6) throw std::invalid_argument("ttsvd-best is limited to order 6");
    const auto perms = all_permutations(t.order());
    std::vector<Rank1Result> runs(perms.size());
    parallel_for(options.policy, perms.size(), [&](std::size_t i) {
      Rank1Options sub = options;
      sub.init.kind = Rank1InitKind::ttsvd;
      sub.init.perm = perms[i];
      sub.policy = ExecutionPolicy::serial;
      runs[i] = solve_rank1(t, sub);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
      if (runs[i].trace.back() < runs[best].trace.back()) best = i;
    }
    return std::move(runs[best]);
  }

  const DenseTarget target(t);
  Rank1Result res;
  switch (options.init.kind) {
    case Rank1InitKind::svd:
      res.model = svd_init(t);
      break;
    case Rank1InitKind::ttsvd: {
      std::vector<std::size_t> perm = options.init.perm;
      if (perm.empty()) {
        perm.resize(t.order());
        std::iota(perm.begin(), perm.end(), 0);
      }
      res.model = ttsvd_init(t, perm);
      res.perm = perm;
      break;
    }
    case Rank1InitKind::given:
      res.model = options.init.given;
      res.model.check_shape(t.shape());
      break;
    case Rank1InitKind::ttsvd_best:
      break;
  }
  double prev = relative_error(target, res.model);
  res.trace.push_back(prev);
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    res.model = rank1_step(options.algorithm, target, res.model);
    const double err = relative_error(target, res.model);
    res.trace.push_back(err);
    if (std::abs(err - prev) < options.tol) {
      res.converged = true;
      break;
    }
    prev = err;
  }
  return res;
}

}  // namespace paro
