#pragma once

// Dense tensors in column-major (first index fastest) layout, together with
// the multilinear kernels the rank-1 and rank-R solvers are built from.

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace paro {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

/// Raised when an argument violates a documented precondition
/// (shape mismatch, mode out of range, malformed input).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a model or projection degenerates (zero factor, zero
/// projection) and the caller has to pick a different starting point.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t shape_numel(const Shape& shape);

/// Order-N real array. Order 0 is allowed and holds a single scalar.
class DenseTensor {
 public:
  DenseTensor() = default;
  /// Zero-filled tensor.
  explicit DenseTensor(Shape shape);
  /// Takes ownership of `data`; throws ShapeError on a size mismatch or a
  /// zero extent and std::domain_error on non-finite entries.
  DenseTensor(Shape shape, std::vector<double> data);

  DenseTensor(const DenseTensor& other);
  DenseTensor& operator=(const DenseTensor& other);
  DenseTensor(DenseTensor&&) noexcept = default;
  DenseTensor& operator=(DenseTensor&&) noexcept = default;

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
  std::size_t numel() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& operator[](std::size_t linear) { return data_[linear]; }
  double operator[](std::size_t linear) const { return data_[linear]; }

  double& operator()(std::initializer_list<std::size_t> index);
  double operator()(std::initializer_list<std::size_t> index) const;

  void fill(double value);

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t linear_index(const Shape& shape, std::span<const std::size_t> index);

bool same_shape(const DenseTensor& a, const DenseTensor& b);

/// Mode-n matricization: rows indexed by `mode`, columns by the remaining
/// modes in increasing order with the lowest one varying fastest.
Matrix unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold for a tensor of the given shape.
DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape);

/// Contracts a single mode with a vector; the result has order N-1.
DenseTensor ttv(const DenseTensor& t, const Vector& v, std::size_t mode);

/// Mode product with the transpose of `m`: extent I_mode becomes m.cols().
DenseTensor ttm(const DenseTensor& t, const Matrix& m, std::size_t mode);

/// t_n = T contracted with vectors[k] on every mode k != skip.
/// vectors[skip] is ignored and may be empty.
Vector contract_all_but(const DenseTensor& t, std::span<const Vector> vectors,
                        std::size_t skip);

/// Full contraction T x_1 v_1 ... x_N v_N.
double contract_all(const DenseTensor& t, std::span<const Vector> vectors);

/// T x_1 V_1^T x_2 ... x_N V_N^T. Modes are processed by decreasing extent.
DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Matrix> mats);

/// Column r is u_{N,r} (x) ... (x) u_{1,r} for mats = {U_1, ..., U_N}.
Matrix khatri_rao(std::span<const Matrix> mats);

double inner(const DenseTensor& a, const DenseTensor& b);
double frobenius_norm(const DenseTensor& t);
double squared_norm(const DenseTensor& t);

/// Mode k of the result is mode perm[k] of the input.
DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm);

/// out += scale * factors[0] o factors[1] o ... o factors[N-1], entry products
/// evaluated as u_1(i_1) * (u_2(i_2) * (... * u_N(i_N))).
void accumulate_outer(std::span<double> out, const Shape& shape,
                      std::span<const Vector> factors, double scale);

/// Rank-R CP model: factor matrices U_1..U_N of common width R.
struct KruskalModel {
  std::vector<Matrix> factors;

  std::size_t order() const { return factors.size(); }
  std::size_t rank() const { return factors.empty() ? 0 : factors.front().cols(); }
  Shape shape() const;
  /// Throws ShapeError when widths disagree or an entry is not finite.
  void validate() const;
};

DenseTensor reconstruct_kruskal(const KruskalModel& model);

/// ||Y - X||_F / ||Y||_F with X materialized.
double relative_error(const DenseTensor& y, const DenseTensor& x);

namespace testing {

/// Counts DenseTensor buffer allocations whose element count equals the
/// watched size while the probe is alive. Only one probe may be active.
class AllocationProbe {
 public:
  explicit AllocationProbe(std::size_t watched_numel);
  ~AllocationProbe();
  AllocationProbe(const AllocationProbe&) = delete;
  AllocationProbe& operator=(const AllocationProbe&) = delete;
  std::size_t count() const;
};

}  // namespace testing

}  // namespace paro
