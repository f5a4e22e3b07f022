#pragma once

// Rank-R CP decomposition by parallel rank-one updates. Every component is
// refit against the same residue e plus its own rank-1 term; e follows a
// second-order difference of the component means, so only five dense
// tensors are ever held: y/R, the current and previous means, e, and a
// scratch buffer.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paro/parallel.hpp"
#include "paro/rank1.hpp"
#include "paro/tensor.hpp"

namespace paro {

enum class ScheduleKind { fixed, regular, adaptive };

/// gamma_R = gamma * R; mu = gamma_R / (1 + gamma_R).
struct MuSchedule {
  ScheduleKind kind = ScheduleKind::adaptive;
  std::size_t period = 20;
  double factor = 1.4142135623730951;
  double gamma_r0 = 5.0;

  static MuSchedule fixed(double gamma_r);
  static MuSchedule regular(std::size_t period, double factor, double gamma_r0 = 1.0);
  static MuSchedule adaptive(std::size_t period, double factor, double gamma_r0);

  /// Throws std::invalid_argument unless factor > 1, period >= 1, gamma_r0 > 0.
  void validate() const;
};

/// "fixed:G", "regular:K:ETA[:G0]", "adaptive:K:ETA:G0".
MuSchedule parse_mu_schedule(const std::string& text);
std::string to_string(const MuSchedule& schedule);

inline constexpr double kGammaRMin = 1e-3;
inline constexpr double kGammaRMax = 1e3;

double mu_from_gamma_r(double gamma_r);

/// gamma_R to use after `iter` completed iterations. history[k] is the
/// relative error after iteration k (history[0] belongs to the start).
/// Changes happen only when iter is a positive multiple of the period;
/// the adaptive rule grows gamma_R when the error did not increase over
/// the last period and shrinks it otherwise. Results are clamped to
/// [kGammaRMin, kGammaRMax].
double next_gamma_r(const MuSchedule& schedule, double gamma_r, std::size_t iter,
                    std::span<const double> history);

enum class StopReason { converged, stalled, max_iters };
const char* to_string(StopReason reason);

struct IterationRecord {
  std::size_t iter = 0;
  double relative_error = 0.0;
  double mu = std::numeric_limits<double>::quiet_NaN();
  double gamma_r = std::numeric_limits<double>::quiet_NaN();
  double elapsed_ms = 0.0;
  /// Components re-initialized after a degenerate inner solve.
  std::size_t reinitialized = 0;
};

/// State visible to an observer after every iteration (iter 0 is the start).
struct ParoIterate {
  std::size_t iter;
  const DenseTensor& xbar;
  const DenseTensor& e;
  const std::vector<Rank1Model>& components;
  double mu;
  double gamma_r;
};

struct ParoOptions {
  MuSchedule schedule;
  Rank1Algorithm inner = Rank1Algorithm::als;
  std::size_t inner_steps = 1;
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  double stall_tol = 1e-12;
  std::uint64_t seed = 0;
  ExecutionPolicy policy = ExecutionPolicy::serial;
  std::function<void(const ParoIterate&)> observer;
};

struct ParoResult {
  KruskalModel model;
  std::vector<Rank1Model> components;
  /// trace[0] is the start, trace[k] follows iteration k.
  std::vector<IterationRecord> trace;
  StopReason reason = StopReason::max_iters;
};

ParoResult paro_decompose(const DenseTensor& y, const KruskalModel& init,
                          const ParoOptions& options);

/// Column r of every factor becomes one component with unit factors.
std::vector<Rank1Model> components_from_kruskal(const KruskalModel& model);
/// Inverse of components_from_kruskal with the weight spread evenly.
KruskalModel kruskal_from_components(const std::vector<Rank1Model>& components);

/// Random unit factors drawn from the substream (seed, r, iter), scaled to
/// the optimal weight against `target`.
Rank1Model reinit_component(const MultilinearTarget& target, std::uint64_t seed,
                            std::size_t r, std::size_t iter);

/// Standard normal factor matrices from the substream (seed, 0).
KruskalModel random_kruskal_init(const Shape& shape, std::size_t rank, std::uint64_t seed);

/// Rescales the whole model by c = <Y, X> / ||X||^2, spread as |c|^(1/N) on
/// every mode with the sign on mode 0. Throws DegenerateError when X = 0.
KruskalModel epc_init(const DenseTensor& y, const KruskalModel& model);

/// Explicit ADMM iterations on the I x R matrices Z, X, T (columns are
/// vectorized rank-1 terms). Used to validate paro_decompose.
enum class AdmmStart {
  /// T = (1 - 1/mu) (y/R - xbar) 1^T, which makes e^(0) = y/R - xbar.
  paro_matching,
  zero_dual,
};

struct AdmmOptions {
  double gamma_r = 1.0;
  Rank1Algorithm inner = Rank1Algorithm::als;
  std::size_t inner_steps = 1;
  std::size_t iters = 20;
  std::uint64_t seed = 0;
  AdmmStart start = AdmmStart::paro_matching;
};

struct AdmmIterate {
  Matrix z, x, t;
  std::vector<Rank1Model> components;
  DenseTensor xbar;
  /// e = mu (y/R - xbar - tbar).
  DenseTensor e;
};

inline constexpr std::size_t kAdmmSizeCap = 100000;

/// Entry 0 holds the start (z empty). Throws ShapeError when
/// numel(y) * R exceeds kAdmmSizeCap.
std::vector<AdmmIterate> admm_reference(const DenseTensor& y, const KruskalModel& init,
                                        const AdmmOptions& options);

/// Z = (gamma y 1^T + X + T)(I - gamma / (1 + gamma R) 1 1^T).
Matrix admm_z_update(const Vector& y, const Matrix& x, const Matrix& t, double gamma);

struct CpdAlsOptions {
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  double stall_tol = 1e-12;
};

struct CpdAlsResult {
  KruskalModel model;
  std::vector<IterationRecord> trace;
  StopReason reason = StopReason::max_iters;
  /// Normal-equation solves that needed the 1e-12 ridge.
  std::size_t ridge_count = 0;
};

/// Mode-by-mode least squares updates; columns are balanced across modes
/// after every sweep.
CpdAlsResult cpd_als(const DenseTensor& y, const KruskalModel& init,
                     const CpdAlsOptions& options);

}  // namespace paro
