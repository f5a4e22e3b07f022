#pragma once

// Best rank-1 approximation: ALS/HOOI sweeps, SVD and sequential-projection
// (TT-SVD) initializations, and the Levenberg-Marquardt variant whose step
// collapses to a gradient step with a polynomial-optimal length.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paro/parallel.hpp"
#include "paro/polynomial.hpp"
#include "paro/target.hpp"
#include "paro/tensor.hpp"

namespace paro {

/// Represents weight * u_1 o u_2 o ... o u_N.
struct Rank1Model {
  std::vector<Vector> factors;
  double weight = 1.0;

  std::size_t order() const { return factors.size(); }
  Shape shape() const;
  /// gamma_n = u_n^T u_n.
  std::vector<double> gammas() const;
  /// Product of all gamma_n.
  double gamma() const;
  /// Geometric mean (gamma_1 ... gamma_N)^(1/N).
  double alpha() const;
  /// <target, u_1 o ... o u_N>, ignoring the weight.
  double xi(const MultilinearTarget& target) const;
  DenseTensor reconstruct() const;
  /// Folds the weight into the factors: |w|^(1/N) on every mode, sign on mode 0.
  Rank1Model absorbed() const;
  /// Unit factors; the norms and the old weight move into the weight.
  Rank1Model unit() const;
  /// Throws ShapeError when the factor lengths disagree with `shape`.
  void check_shape(const Shape& shape) const;
};

/// Sign convention for SVD-derived vectors: the largest-magnitude entry
/// (first one on ties) is made positive. Returns true when v was flipped.
bool apply_sign_rule(Vector& v);

double relative_error(const MultilinearTarget& target, const Rank1Model& model);

/// One HOOI sweep over modes 0..N-1, each update using the freshest factors.
/// Returns unit factors with weight xi = <target, u_1 o ... o u_N>.
/// Throws DegenerateError on a zero projection.
Rank1Model als_step(const MultilinearTarget& target, const Rank1Model& model);
Rank1Model als_step(const DenseTensor& t, const Rank1Model& model);

/// Dominant left singular vector of every unfolding (via the Gram matrix).
Rank1Model svd_init(const DenseTensor& t);

/// Sequential projection and truncation on the tensor permuted by `perm`
/// (mode k of the permuted tensor is mode perm[k]); factors are returned in
/// the original mode order.
Rank1Model ttsvd_init(const DenseTensor& t, std::span<const std::size_t> perm);

/// Rescales every factor to squared norm alpha; the tensor is unchanged.
Rank1Model balance_normalize(const Rank1Model& model);

/// Multiplies the factor product by lambda = xi / gamma so that afterwards
/// xi = gamma. Returns weight 1; a negative lambda puts its sign on mode 0.
Rank1Model optimal_scale(const MultilinearTarget& target, const Rank1Model& model);
Rank1Model optimal_scale(const DenseTensor& t, const Rank1Model& model);

/// g_n = (prod_{k != n} gamma_k) u_n - t_n, the gradient of
/// 0.5 * ||target - u_1 o ... o u_N||^2 (weight folded in first).
std::vector<Vector> rank1_gradients(const MultilinearTarget& target, const Rank1Model& model);

/// q_k = sum of the entries of a 2 x ... x 2 tensor whose multi-index has
/// exactly k coordinates equal to the second index.
std::vector<double> poly_q_coeffs(const DenseTensor& w);

/// f(eta) = ||Y - (u_1 - eta g_1) o ... o (u_N - eta g_N)||^2.
struct StepPolynomial {
  double y_sq_norm = 0.0;
  std::vector<double> gamma;  // u_n^T u_n
  std::vector<double> cross;  // u_n^T g_n
  std::vector<double> c;      // g_n^T g_n
  std::vector<double> q;      // q_0..q_N
  Polynomial f;               // degree 2N, increasing powers
  double eta_max = 0.0;       // 1 / alpha^(N-1)
};

StepPolynomial step_polynomial(const MultilinearTarget& target, const Rank1Model& model,
                               std::span<const Vector> gradients);

struct StepChoice {
  double eta = 0.0;
  double value = 0.0;
};

/// Minimizer of f over [0, eta_max] among the real critical points and
/// both endpoints; ties go to the smaller eta.
StepChoice minimize_step(const StepPolynomial& poly);

/// One R1LM step: balance and scale, gradient step with optimal length,
/// then balance and scale again. Stationary input is returned unchanged.
Rank1Model r1lm_step(const MultilinearTarget& target, const Rank1Model& model);
Rank1Model r1lm_step(const DenseTensor& t, const Rank1Model& model);

enum class Rank1Algorithm { als, r1lm, roro };
enum class Rank1InitKind { svd, ttsvd, ttsvd_best, given };

Rank1Algorithm parse_rank1_algorithm(const std::string& name);
const char* to_string(Rank1Algorithm algo);

struct Rank1Init {
  Rank1InitKind kind = Rank1InitKind::svd;
  std::vector<std::size_t> perm;  // ttsvd only; empty means identity
  Rank1Model given;               // given only
};

/// Parses "svd", "ttsvd", "ttsvd:2,0,1", "ttsvd-best".
Rank1Init parse_rank1_init(const std::string& spec);

struct Rank1Options {
  Rank1Algorithm algorithm = Rank1Algorithm::als;
  Rank1Init init;
  double tol = 1e-12;
  std::size_t max_iters = 1000;
  /// Used by ttsvd-best to run the permutations concurrently.
  ExecutionPolicy policy = ExecutionPolicy::serial;
};

struct Rank1Result {
  Rank1Model model;
  /// trace[0] is the error of the initialization, trace[k] after step k.
  std::vector<double> trace;
  bool converged = false;
  /// Permutation that produced the result for ttsvd inits.
  std::vector<std::size_t> perm;
};

Rank1Model rank1_step(Rank1Algorithm algo, const MultilinearTarget& target,
                      const Rank1Model& model);

/// Iterates until |err_k - err_{k-1}| < tol or max_iters steps.
Rank1Result solve_rank1(const DenseTensor& t, const Rank1Options& options);

/// All permutations of 0..n-1 in lexicographic order.
std::vector<std::vector<std::size_t>> all_permutations(std::size_t n);

}  // namespace paro
