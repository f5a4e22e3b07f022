#include "paro/paro.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "paro/implicit_residue.hpp"
#include "paro/random.hpp"

namespace paro {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("malformed integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

double distance_ratio(const DenseTensor& ybar, const DenseTensor& xbar, double ybar_norm) {
  const auto a = ybar.data();
  const auto b = xbar.data();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return ybar_norm > 0.0 ? std::sqrt(s) / ybar_norm : std::sqrt(s);
}

// out = (1/R) sum_r components[r], accumulated in index order.
void mean_into(DenseTensor& out, const std::vector<Rank1Model>& components) {
  out.fill(0.0);
  const double inv_r = 1.0 / static_cast<double>(components.size());
  for (const Rank1Model& c : components) {
    accumulate_outer(out.data(), out.shape(), c.factors, c.weight * inv_r);
  }
}

Rank1Model inner_solve(Rank1Algorithm algo, std::size_t steps, const MultilinearTarget& target,
                       const Rank1Model& start, std::uint64_t seed, std::size_t r,
                       std::size_t iter, bool& reinitialized) {
  try {
    Rank1Model m = start;
    for (std::size_t s = 0; s < steps; ++s) m = rank1_step(algo, target, m);
    bool finite = std::isfinite(m.weight);
    for (const Vector& u : m.factors) finite = finite && u.allFinite();
    if (!finite) throw DegenerateError("non-finite rank-1 update");
    reinitialized = false;
    return m;
  } catch (const DegenerateError&) {
    reinitialized = true;
    return reinit_component(target, seed, r, iter);
  }
}

}  // namespace

MuSchedule MuSchedule::fixed(double gamma_r) {
  MuSchedule s;
  s.kind = ScheduleKind::fixed;
  s.gamma_r0 = gamma_r;
  return s;
}

MuSchedule MuSchedule::regular(std::size_t period, double factor, double gamma_r0) {
  return {ScheduleKind::regular, period, factor, gamma_r0};
}

MuSchedule MuSchedule::adaptive(std::size_t period, double factor, double gamma_r0) {
  return {ScheduleKind::adaptive, period, factor, gamma_r0};
}

void MuSchedule::validate() const {
  if (!(gamma_r0 > 0.0) || !std::isfinite(gamma_r0)) {
    throw std::invalid_argument("gamma_R must be positive");
  }
  if (kind == ScheduleKind::fixed) return;
  if (period < 1) throw std::invalid_argument("schedule period must be at least 1");
  if (!(factor > 1.0) || !std::isfinite(factor)) {
    throw std::invalid_argument("schedule factor must exceed 1");
  }
}

MuSchedule parse_mu_schedule(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw std::invalid_argument("empty schedule");
  MuSchedule s;
  if (parts[0] == "fixed" && parts.size() == 2) {
    s = MuSchedule::fixed(parse_double(parts[1]));
  } else if (parts[0] == "regular" && (parts.size() == 3 || parts.size() == 4)) {
    s = MuSchedule::regular(parse_size(parts[1]), parse_double(parts[2]),
                            parts.size() == 4 ? parse_double(parts[3]) : 1.0);
  } else if (parts[0] == "adaptive" && parts.size() == 4) {
    s = MuSchedule::adaptive(parse_size(parts[1]), parse_double(parts[2]),
                             parse_double(parts[3]));
  } else {
    throw std::invalid_argument("unknown schedule '" + text +
                                "' (fixed:G, regular:K:ETA[:G0], adaptive:K:ETA:G0)");
  }
  s.validate();
  return s;
}

std::string to_string(const MuSchedule& s) {
  std::ostringstream os;
  os.precision(17);
  switch (s.kind) {
    case ScheduleKind::fixed:
      os << "fixed:" << s.gamma_r0;
      break;
    case ScheduleKind::regular:
      os << "regular:" << s.period << ':' << s.factor << ':' << s.gamma_r0;
      break;
    case ScheduleKind::adaptive:
      os << "adaptive:" << s.period << ':' << s.factor << ':' << s.gamma_r0;
      break;
  }
  return os.str();
}

double mu_from_gamma_r(double gamma_r) { return gamma_r / (1.0 + gamma_r); }

double next_gamma_r(const MuSchedule& s, double gamma_r, std::size_t iter,
                    std::span<const double> history) {
  if (s.kind == ScheduleKind::fixed || iter == 0 || iter % s.period != 0) return gamma_r;
  double g = gamma_r;
  if (s.kind == ScheduleKind::regular) {
    g *= s.factor;
  } else {
    if (history.size() <= iter) throw std::invalid_argument("error history too short");
    g = history[iter] <= history[iter - s.period] ? g * s.factor : g / s.factor;
  }
  return std::clamp(g, kGammaRMin, kGammaRMax);
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged:
      return "converged";
    case StopReason::stalled:
      return "stalled";
    case StopReason::max_iters:
      return "max-iters";
  }
  return "?";
}

std::vector<Rank1Model> components_from_kruskal(const KruskalModel& model) {
  model.validate();
  std::vector<Rank1Model> out(model.rank());
  for (std::size_t r = 0; r < model.rank(); ++r) {
    Rank1Model m;
    for (const Matrix& u : model.factors) m.factors.push_back(u.col(static_cast<Eigen::Index>(r)));
    out[r] = m.unit();
  }
  return out;
}

KruskalModel kruskal_from_components(const std::vector<Rank1Model>& components) {
  if (components.empty()) throw ShapeError("no components");
  const Shape shape = components.front().shape();
  KruskalModel km;
  for (std::size_t e : shape) {
    km.factors.emplace_back(static_cast<Eigen::Index>(e),
                            static_cast<Eigen::Index>(components.size()));
  }
  for (std::size_t r = 0; r < components.size(); ++r) {
    components[r].check_shape(shape);
    const Rank1Model a = components[r].absorbed();
    for (std::size_t n = 0; n < shape.size(); ++n) {
      km.factors[n].col(static_cast<Eigen::Index>(r)) = a.factors[n];
    }
  }
  return km;
}

Rank1Model reinit_component(const MultilinearTarget& target, std::uint64_t seed, std::size_t r,
                            std::size_t iter) {
  Rng rng(substream_seed(seed, {1, r, iter}));
  Rank1Model m;
  for (std::size_t e : target.shape()) {
    Vector u = rng.normal_vector(e);
    while (u.norm() == 0.0) u = rng.normal_vector(e);
    m.factors.push_back(u / u.norm());
  }
  m.weight = target.contract_all(m.factors);
  return m;
}

KruskalModel random_kruskal_init(const Shape& shape, std::size_t rank, std::uint64_t seed) {
  if (rank < 1) throw ShapeError("rank must be at least 1");
  Rng rng(substream_seed(seed, {0}));
  KruskalModel km;
  for (std::size_t e : shape) km.factors.push_back(rng.normal_matrix(e, rank));
  return km;
}

KruskalModel epc_init(const DenseTensor& y, const KruskalModel& model) {
  if (model.shape() != y.shape()) throw ShapeError("model shape does not match tensor");
  const DenseTensor x = reconstruct_kruskal(model);
  const double xx = squared_norm(x);
  if (xx == 0.0) throw DegenerateError("cannot rescale a zero model");
  const double c = inner(y, x) / xx;
  const double s = std::pow(std::abs(c), 1.0 / static_cast<double>(model.order()));
  KruskalModel out = model;
  for (Matrix& u : out.factors) u *= s;
  if (c < 0.0) out.factors.front() *= -1.0;
  return out;
}

ParoResult paro_decompose(const DenseTensor& y, const KruskalModel& init,
                          const ParoOptions& options) {
  if (init.shape() != y.shape()) throw ShapeError("initial model shape does not match tensor");
  if (init.rank() < 1) throw ShapeError("rank must be at least 1");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (options.inner_steps < 1) throw std::invalid_argument("inner_steps must be at least 1");
  options.schedule.validate();

  const auto start = Clock::now();
  const std::size_t rank = init.rank();
  const double inv_r = 1.0 / static_cast<double>(rank);
  std::vector<Rank1Model> comps = components_from_kruskal(init);

  // The only dense tensors of the data size held by the iteration.
  DenseTensor ybar = y;
  for (double& v : ybar.data()) v *= inv_r;
  DenseTensor xbar(y.shape());
  DenseTensor xbar_prev(y.shape());
  DenseTensor e(y.shape());
  DenseTensor scratch(y.shape());

  mean_into(xbar, comps);
  {
    const auto yb = ybar.data();
    const auto xb = xbar.data();
    auto ed = e.data();
    for (std::size_t i = 0; i < ed.size(); ++i) ed[i] = yb[i] - xb[i];
  }
  const double ybar_norm = frobenius_norm(ybar);

  double gamma_r = options.schedule.gamma_r0;
  double mu = mu_from_gamma_r(gamma_r);
  ParoResult result;
  std::vector<double> history{distance_ratio(ybar, xbar, ybar_norm)};
  result.trace.push_back({0, history.back(), mu, gamma_r, elapsed_ms(start), 0});
  if (options.observer) options.observer({0, xbar, e, comps, mu, gamma_r});
  if (history.back() <= options.tol) result.reason = StopReason::converged;

  std::vector<char> reinit(rank, 0);
  for (std::size_t k = 1; k <= options.max_iters && history.back() > options.tol; ++k) {
    const double e_sq = squared_norm(e);
    parallel_for(options.policy, rank, [&](std::size_t r) {
      const ImplicitResidue target(e, e_sq, comps[r].factors, comps[r].weight);
      bool flag = false;
      comps[r] = inner_solve(options.inner, options.inner_steps, target, comps[r], options.seed,
                             r, k, flag);
      reinit[r] = flag ? 1 : 0;
    });

    mean_into(scratch, comps);
    std::swap(xbar_prev, xbar);
    std::swap(xbar, scratch);
    {
      const auto yb = ybar.data();
      const auto xc = xbar.data();
      const auto xp = xbar_prev.data();
      auto ed = e.data();
      for (std::size_t i = 0; i < ed.size(); ++i) {
        ed[i] = mu * (yb[i] - 2.0 * xc[i] + xp[i] + ed[i]);
      }
    }

    const double err = distance_ratio(ybar, xbar, ybar_norm);
    const double prev = history.back();
    history.push_back(err);
    const auto n_reinit = static_cast<std::size_t>(std::count(reinit.begin(), reinit.end(), 1));
    result.trace.push_back({k, err, mu, gamma_r, elapsed_ms(start), n_reinit});
    if (options.observer) options.observer({k, xbar, e, comps, mu, gamma_r});

    if (err <= options.tol) {
      result.reason = StopReason::converged;
      break;
    }
    if (std::abs(err - prev) < options.stall_tol) {
      result.reason = StopReason::stalled;
      break;
    }
    gamma_r = next_gamma_r(options.schedule, gamma_r, k, history);
    mu = mu_from_gamma_r(gamma_r);
  }

  result.components = comps;
  result.model = kruskal_from_components(comps);
  return result;
}

Matrix admm_z_update(const Vector& y, const Matrix& x, const Matrix& t, double gamma) {
  const double r = static_cast<double>(x.cols());
  Matrix m = x + t;
  m.colwise() += gamma * y;
  const Vector row_sum = m.rowwise().sum();
  m.colwise() -= (gamma / (1.0 + gamma * r)) * row_sum;
  return m;
}

std::vector<AdmmIterate> admm_reference(const DenseTensor& y, const KruskalModel& init,
                                        const AdmmOptions& options) {
  if (init.shape() != y.shape()) throw ShapeError("initial model shape does not match tensor");
  const std::size_t rank = init.rank();
  if (rank < 1) throw ShapeError("rank must be at least 1");
  if (y.numel() * rank > kAdmmSizeCap) {
    throw ShapeError("admm_reference is limited to numel * R <= " +
                     std::to_string(kAdmmSizeCap));
  }
  if (!(options.gamma_r > 0.0)) throw std::invalid_argument("gamma_R must be positive");

  const auto p = static_cast<Eigen::Index>(y.numel());
  const auto rr = static_cast<Eigen::Index>(rank);
  const double inv_r = 1.0 / static_cast<double>(rank);
  const double gamma = options.gamma_r * inv_r;
  const double mu = mu_from_gamma_r(options.gamma_r);
  const Vector yv = Eigen::Map<const Vector>(y.data().data(), p);
  const Vector ybar = yv * inv_r;

  std::vector<Rank1Model> comps = components_from_kruskal(init);
  Matrix x(p, rr);
  auto fill_column = [&](std::size_t r) {
    std::span<double> col(x.col(static_cast<Eigen::Index>(r)).data(), y.numel());
    outer_product_into(col, comps[r].factors, comps[r].weight);
  };
  for (std::size_t r = 0; r < rank; ++r) fill_column(r);

  Matrix t = Matrix::Zero(p, rr);
  if (options.start == AdmmStart::paro_matching) {
    const Vector tbar = (1.0 - 1.0 / mu) * (ybar - x.rowwise().mean());
    t.colwise() = tbar;
  }

  auto record = [&](Matrix z) {
    const Vector xbar = x.rowwise().mean();
    const Vector e = mu * (ybar - xbar - t.rowwise().mean());
    AdmmIterate it{std::move(z), x, t, comps,
                   DenseTensor(y.shape(), std::vector<double>(xbar.data(), xbar.data() + p)),
                   DenseTensor(y.shape(), std::vector<double>(e.data(), e.data() + p))};
    return it;
  };

  std::vector<AdmmIterate> trace;
  trace.push_back(record(Matrix()));
  for (std::size_t k = 1; k <= options.iters; ++k) {
    const Matrix z = admm_z_update(yv, x, t, gamma);
    for (std::size_t r = 0; r < rank; ++r) {
      const Vector col = z.col(static_cast<Eigen::Index>(r)) - t.col(static_cast<Eigen::Index>(r));
      const DenseTensor target_tensor(y.shape(), std::vector<double>(col.data(), col.data() + p));
      const DenseTarget target(target_tensor);
      bool flag = false;
      comps[r] = inner_solve(options.inner, options.inner_steps, target, comps[r], options.seed,
                             r, k, flag);
      fill_column(r);
    }
    t += x - z;
    trace.push_back(record(z));
  }
  return trace;
}

CpdAlsResult cpd_als(const DenseTensor& y, const KruskalModel& init,
                     const CpdAlsOptions& options) {
  if (init.shape() != y.shape()) throw ShapeError("initial model shape does not match tensor");
  init.validate();
  const std::size_t rank = init.rank();
  if (rank < 1) throw ShapeError("rank must be at least 1");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");

  const auto start = Clock::now();
  const std::size_t order = y.order();
  const auto rr = static_cast<Eigen::Index>(rank);
  std::vector<Matrix> unfolded(order);
  for (std::size_t n = 0; n < order; ++n) unfolded[n] = unfold(y, n);

  CpdAlsResult result;
  result.model = init;
  std::vector<Matrix>& u = result.model.factors;
  double prev = relative_error(y, reconstruct_kruskal(result.model));
  result.trace.push_back({0, prev, std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(), elapsed_ms(start), 0});
  if (prev <= options.tol) {
    result.reason = StopReason::converged;
    return result;
  }

  for (std::size_t k = 1; k <= options.max_iters; ++k) {
    for (std::size_t n = 0; n < order; ++n) {
      std::vector<Matrix> others;
      Matrix g = Matrix::Ones(rr, rr);
      for (std::size_t m = 0; m < order; ++m) {
        if (m == n) continue;
        others.push_back(u[m]);
        g = g.cwiseProduct(u[m].transpose() * u[m]);
      }
      const Matrix v = unfolded[n] * khatri_rao(others);
      Eigen::LLT<Matrix> llt(g);
      Matrix sol;
      if (llt.info() == Eigen::Success) sol = llt.solve(v.transpose());
      if (llt.info() != Eigen::Success || !sol.allFinite()) {
        ++result.ridge_count;
        llt.compute(g + 1e-12 * Matrix::Identity(rr, rr));
        sol = llt.solve(v.transpose());
      }
      u[n] = sol.transpose();
    }
    for (Eigen::Index r = 0; r < rr; ++r) {
      double prod = 1.0;
      std::vector<double> norms(order);
      for (std::size_t n = 0; n < order; ++n) {
        norms[n] = u[n].col(r).norm();
        prod *= norms[n];
      }
      if (prod == 0.0) continue;
      const double target = std::pow(prod, 1.0 / static_cast<double>(order));
      for (std::size_t n = 0; n < order; ++n) u[n].col(r) *= target / norms[n];
    }
    const double err = relative_error(y, reconstruct_kruskal(result.model));
    result.trace.push_back({k, err, std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN(), elapsed_ms(start), 0});
    if (err <= options.tol) {
      result.reason = StopReason::converged;
      break;
    }
    if (std::abs(err - prev) < options.stall_tol) {
      result.reason = StopReason::stalled;
      break;
    }
    prev = err;
  }
  return result;
}

}  // namespace paro
