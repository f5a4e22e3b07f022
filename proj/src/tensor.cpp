#include "paro/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

namespace paro {

namespace {

std::atomic<std::size_t> g_probe_watched{0};
std::atomic<std::size_t> g_probe_count{0};
std::atomic<bool> g_probe_active{false};

void note_allocation(std::size_t numel) {
  if (g_probe_active.load(std::memory_order_relaxed) &&
      numel == g_probe_watched.load(std::memory_order_relaxed)) {
    g_probe_count.fetch_add(1, std::memory_order_relaxed);
  }
}

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order) {
    throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                     std::to_string(order));
  }
}

// Product of extents strictly before / strictly after `mode`.
std::size_t left_size(const Shape& s, std::size_t mode) {
  std::size_t p = 1;
  for (std::size_t k = 0; k < mode; ++k) p *= s[k];
  return p;
}

std::size_t right_size(const Shape& s, std::size_t mode) {
  std::size_t p = 1;
  for (std::size_t k = mode + 1; k < s.size(); ++k) p *= s[k];
  return p;
}

// out(l, j, r) = sum_i m(i, j) * in(l, i, r) for the block layout
// [left x extent x right]; out has layout [left x m.cols() x right].
void mode_product_kernel(const double* in, std::size_t left, std::size_t extent,
                         std::size_t right, const Matrix& m, double* out) {
  const std::size_t cols = static_cast<std::size_t>(m.cols());
  for (std::size_t r = 0; r < right; ++r) {
    const double* in_r = in + r * left * extent;
    double* out_r = out + r * left * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      double* dst = out_r + j * left;
      std::fill(dst, dst + left, 0.0);
      for (std::size_t i = 0; i < extent; ++i) {
        const double w = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double* src = in_r + i * left;
        for (std::size_t l = 0; l < left; ++l) dst[l] += w * src[l];
      }
    }
  }
}

// Contracts the trailing mode of a [rows x extent] buffer with v.
void contract_last(const double* in, std::size_t rows, const Vector& v,
                   std::vector<double>& out) {
  out.assign(rows, 0.0);
  const std::size_t extent = static_cast<std::size_t>(v.size());
  for (std::size_t i = 0; i < extent; ++i) {
    const double w = v(static_cast<Eigen::Index>(i));
    const double* src = in + i * rows;
    for (std::size_t r = 0; r < rows; ++r) out[r] += w * src[r];
  }
}

// Contracts the leading mode of an [extent x cols] buffer with v.
void contract_first(const double* in, std::size_t cols, const Vector& v,
                    std::vector<double>& out) {
  const std::size_t extent = static_cast<std::size_t>(v.size());
  out.assign(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    const double* src = in + c * extent;
    double acc = 0.0;
    for (std::size_t i = 0; i < extent; ++i) acc += v(static_cast<Eigen::Index>(i)) * src[i];
    out[c] = acc;
  }
}

void check_vectors(const Shape& shape, std::span<const Vector> vectors,
                   std::ptrdiff_t skip) {
  if (vectors.size() != shape.size()) {
    throw ShapeError("expected one vector per mode");
  }
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (static_cast<std::ptrdiff_t>(k) == skip) continue;
    if (static_cast<std::size_t>(vectors[k].size()) != shape[k]) {
      throw ShapeError("vector length does not match extent of mode " + std::to_string(k));
    }
  }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive");
  }
  note_allocation(shape_numel(shape_));
  data_.assign(shape_numel(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive");
  }
  if (data.size() != shape_numel(shape_)) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match product of extents " +
                     std::to_string(shape_numel(shape_)));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw std::domain_error("tensor entries must be finite");
  }
  note_allocation(data.size());
  data_ = std::move(data);
}

DenseTensor::DenseTensor(const DenseTensor& other) : shape_(other.shape_), data_(other.data_) {
  if (!other.data_.empty()) note_allocation(other.data_.size());
}

DenseTensor& DenseTensor::operator=(const DenseTensor& other) {
  if (this != &other) {
    if (!other.data_.empty()) note_allocation(other.data_.size());
    shape_ = other.shape_;
    data_ = other.data_;
  }
  return *this;
}

double& DenseTensor::operator()(std::initializer_list<std::size_t> index) {
  return data_[linear_index(shape_, std::span<const std::size_t>(index.begin(), index.size()))];
}

double DenseTensor::operator()(std::initializer_list<std::size_t> index) const {
  return data_[linear_index(shape_, std::span<const std::size_t>(index.begin(), index.size()))];
}

void DenseTensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::size_t linear_index(const Shape& shape, std::span<const std::size_t> index) {
  if (index.size() != shape.size()) throw ShapeError("index order mismatch");
  std::size_t lin = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (index[k] >= shape[k]) throw ShapeError("index out of range");
    lin += index[k] * stride;
    stride *= shape[k];
  }
  return lin;
}

bool same_shape(const DenseTensor& a, const DenseTensor& b) { return a.shape() == b.shape(); }

Matrix unfold(const DenseTensor& t, std::size_t mode) {
  check_mode(mode, t.order());
  const Shape& s = t.shape();
  const std::size_t left = left_size(s, mode);
  const std::size_t right = right_size(s, mode);
  const std::size_t extent = s[mode];
  Matrix m(extent, left * right);
  // Column index is l + left * r because lower modes vary fastest.
  const auto data = t.data();
  for (std::size_t r = 0; r < right; ++r) {
    for (std::size_t i = 0; i < extent; ++i) {
      const double* src = data.data() + (r * extent + i) * left;
      for (std::size_t l = 0; l < left; ++l) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l + left * r)) = src[l];
      }
    }
  }
  return m;
}

DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
  check_mode(mode, shape.size());
  const std::size_t left = left_size(shape, mode);
  const std::size_t right = right_size(shape, mode);
  const std::size_t extent = shape[mode];
  if (static_cast<std::size_t>(m.rows()) != extent ||
      static_cast<std::size_t>(m.cols()) != left * right) {
    throw ShapeError("matrix size does not match the requested unfolding");
  }
  std::vector<double> data(shape_numel(shape));
  for (std::size_t r = 0; r < right; ++r) {
    for (std::size_t i = 0; i < extent; ++i) {
      double* dst = data.data() + (r * extent + i) * left;
      for (std::size_t l = 0; l < left; ++l) {
        dst[l] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l + left * r));
      }
    }
  }
  return DenseTensor(shape, std::move(data));
}

DenseTensor ttm(const DenseTensor& t, const Matrix& m, std::size_t mode) {
  check_mode(mode, t.order());
  const Shape& s = t.shape();
  if (static_cast<std::size_t>(m.rows()) != s[mode]) {
    throw ShapeError("matrix rows do not match extent of mode " + std::to_string(mode));
  }
  if (m.cols() == 0) throw ShapeError("mode product needs at least one column");
  Shape out_shape = s;
  out_shape[mode] = static_cast<std::size_t>(m.cols());
  std::vector<double> out(shape_numel(out_shape));
  mode_product_kernel(t.data().data(), left_size(s, mode), s[mode], right_size(s, mode), m,
                      out.data());
  return DenseTensor(std::move(out_shape), std::move(out));
}

DenseTensor ttv(const DenseTensor& t, const Vector& v, std::size_t mode) {
  check_mode(mode, t.order());
  const Shape& s = t.shape();
  if (static_cast<std::size_t>(v.size()) != s[mode]) {
    throw ShapeError("vector length does not match extent of mode " + std::to_string(mode));
  }
  Shape out_shape;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k != mode) out_shape.push_back(s[k]);
  }
  std::vector<double> out(shape_numel(out_shape));
  mode_product_kernel(t.data().data(), left_size(s, mode), s[mode], right_size(s, mode), v,
                      out.data());
  return DenseTensor(std::move(out_shape), std::move(out));
}

Vector contract_all_but(const DenseTensor& t, std::span<const Vector> vectors,
                        std::size_t skip) {
  const Shape& s = t.shape();
  check_mode(skip, s.size());
  check_vectors(s, vectors, static_cast<std::ptrdiff_t>(skip));
  // The source buffer is read in place; only reduced intermediates are stored.
  const double* src = t.data().data();
  std::vector<double> cur;
  std::vector<double> next;
  std::size_t rows = t.numel();
  for (std::size_t k = s.size(); k-- > skip + 1;) {
    rows /= s[k];
    contract_last(src, rows, vectors[k], next);
    cur.swap(next);
    src = cur.data();
  }
  for (std::size_t k = 0; k < skip; ++k) {
    rows /= s[k];
    contract_first(src, rows, vectors[k], next);
    cur.swap(next);
    src = cur.data();
  }
  return Eigen::Map<const Vector>(src, static_cast<Eigen::Index>(rows));
}

double contract_all(const DenseTensor& t, std::span<const Vector> vectors) {
  const Shape& s = t.shape();
  check_vectors(s, vectors, -1);
  const double* src = t.data().data();
  std::vector<double> cur;
  std::vector<double> next;
  std::size_t rows = t.numel();
  for (std::size_t k = s.size(); k-- > 0;) {
    rows /= s[k];
    contract_last(src, rows, vectors[k], next);
    cur.swap(next);
    src = cur.data();
  }
  return src[0];
}

DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Matrix> mats) {
  const Shape& s = t.shape();
  if (mats.size() != s.size()) throw ShapeError("expected one matrix per mode");
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (static_cast<std::size_t>(mats[k].rows()) != s[k]) {
      throw ShapeError("matrix rows do not match extent of mode " + std::to_string(k));
    }
    if (mats[k].cols() == 0) throw ShapeError("mode product needs at least one column");
  }
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  Shape cur_shape = s;
  const double* src = t.data().data();
  std::vector<double> cur;
  std::vector<double> next;
  for (std::size_t mode : order) {
    Shape next_shape = cur_shape;
    next_shape[mode] = static_cast<std::size_t>(mats[mode].cols());
    next.assign(shape_numel(next_shape), 0.0);
    mode_product_kernel(src, left_size(cur_shape, mode), cur_shape[mode],
                        right_size(cur_shape, mode), mats[mode], next.data());
    cur.swap(next);
    src = cur.data();
    cur_shape = std::move(next_shape);
  }
  if (order.empty()) cur.assign(t.data().begin(), t.data().end());
  return DenseTensor(std::move(cur_shape), std::move(cur));
}

Matrix khatri_rao(std::span<const Matrix> mats) {
  if (mats.empty()) throw ShapeError("khatri_rao needs at least one matrix");
  const Eigen::Index r = mats.front().cols();
  std::size_t rows = 1;
  for (const Matrix& m : mats) {
    if (m.cols() != r) throw ShapeError("khatri_rao operands must share the column count");
    rows *= static_cast<std::size_t>(m.rows());
  }
  Matrix out(static_cast<Eigen::Index>(rows), r);
  std::vector<double> col;
  std::vector<double> next;
  for (Eigen::Index c = 0; c < r; ++c) {
    const Matrix& last = mats.back();
    col.assign(last.col(c).data(), last.col(c).data() + last.rows());
    for (std::size_t k = mats.size() - 1; k-- > 0;) {
      const Matrix& m = mats[k];
      const std::size_t ik = static_cast<std::size_t>(m.rows());
      next.resize(ik * col.size());
      for (std::size_t j = 0; j < col.size(); ++j) {
        for (std::size_t i = 0; i < ik; ++i) {
          next[i + ik * j] = m(static_cast<Eigen::Index>(i), c) * col[j];
        }
      }
      col.swap(next);
    }
    out.col(c) = Eigen::Map<const Vector>(col.data(), static_cast<Eigen::Index>(col.size()));
  }
  return out;
}

void accumulate_outer(std::span<double> out, const Shape& shape,
                      std::span<const Vector> factors, double scale) {
  if (factors.size() != shape.size()) throw ShapeError("expected one factor per mode");
  if (out.size() != shape_numel(shape)) throw ShapeError("output size mismatch");
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (static_cast<std::size_t>(factors[k].size()) != shape[k]) {
      throw ShapeError("factor length does not match extent of mode " + std::to_string(k));
    }
  }
  if (shape.empty()) {
    out[0] += scale;
    return;
  }
  // Suffix products u_k(i_k) * (... * u_N(i_N)) built from the last mode,
  // matching the arithmetic order of khatri_rao.
  std::vector<double> col(factors.back().data(), factors.back().data() + factors.back().size());
  std::vector<double> next;
  for (std::size_t k = shape.size() - 1; k-- > 0;) {
    const Vector& u = factors[k];
    const std::size_t ik = static_cast<std::size_t>(u.size());
    next.resize(ik * col.size());
    for (std::size_t j = 0; j < col.size(); ++j) {
      for (std::size_t i = 0; i < ik; ++i) next[i + ik * j] = u(static_cast<Eigen::Index>(i)) * col[j];
    }
    col.swap(next);
  }
  if (scale == 1.0) {
    for (std::size_t i = 0; i < col.size(); ++i) out[i] += col[i];
  } else {
    for (std::size_t i = 0; i < col.size(); ++i) out[i] += scale * col[i];
  }
}

double inner(const DenseTensor& a, const DenseTensor& b) {
  if (!same_shape(a, b)) throw ShapeError("inner product needs equal shapes");
  double s = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double squared_norm(const DenseTensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return s;
}

double frobenius_norm(const DenseTensor& t) { return std::sqrt(squared_norm(t)); }

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size(), perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    if (perm[k] >= perm.size() || inv[perm[k]] != perm.size()) {
      throw ShapeError("invalid permutation");
    }
    inv[perm[k]] = k;
  }
  return inv;
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
  const Shape& s = t.shape();
  if (perm.size() != s.size()) throw ShapeError("permutation length must equal tensor order");
  inverse_permutation(perm);
  const std::size_t n = s.size();
  Shape out_shape(n);
  for (std::size_t k = 0; k < n; ++k) out_shape[k] = s[perm[k]];
  std::vector<std::size_t> in_stride(n);
  std::size_t st = 1;
  for (std::size_t k = 0; k < n; ++k) {
    in_stride[k] = st;
    st *= s[k];
  }
  // Stride in the input of each output mode.
  std::vector<std::size_t> step(n);
  for (std::size_t k = 0; k < n; ++k) step[k] = in_stride[perm[k]];
  std::vector<double> out(t.numel());
  std::vector<std::size_t> idx(n, 0);
  std::size_t src = 0;
  const auto data = t.data();
  for (std::size_t lin = 0; lin < out.size(); ++lin) {
    out[lin] = data[src];
    for (std::size_t k = 0; k < n; ++k) {
      if (++idx[k] < out_shape[k]) {
        src += step[k];
        break;
      }
      src -= step[k] * (out_shape[k] - 1);
      idx[k] = 0;
    }
  }
  return DenseTensor(std::move(out_shape), std::move(out));
}

Shape KruskalModel::shape() const {
  Shape s;
  for (const Matrix& m : factors) s.push_back(static_cast<std::size_t>(m.rows()));
  return s;
}

void KruskalModel::validate() const {
  if (factors.empty()) throw ShapeError("Kruskal model needs at least one factor");
  const Eigen::Index r = factors.front().cols();
  if (r == 0) throw ShapeError("Kruskal model rank must be positive");
  for (const Matrix& m : factors) {
    if (m.cols() != r) throw ShapeError("factor matrices must share the column count");
    if (m.rows() == 0) throw ShapeError("factor matrices must have positive row count");
    if (!m.allFinite()) throw ShapeError("factor matrices must be finite");
  }
}

DenseTensor reconstruct_kruskal(const KruskalModel& model) {
  model.validate();
  DenseTensor out(model.shape());
  std::vector<Vector> cols(model.order());
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(model.rank()); ++r) {
    for (std::size_t k = 0; k < model.order(); ++k) cols[k] = model.factors[k].col(r);
    accumulate_outer(out.data(), out.shape(), cols, 1.0);
  }
  return out;
}

double relative_error(const DenseTensor& y, const DenseTensor& x) {
  if (!same_shape(y, x)) throw ShapeError("relative error needs equal shapes");
  double num = 0.0;
  double den = 0.0;
  const auto a = y.data();
  const auto b = x.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += a[i] * a[i];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

namespace testing {

AllocationProbe::AllocationProbe(std::size_t watched_numel) {
  bool expected = false;
  if (!g_probe_active.compare_exchange_strong(expected, true)) {
    throw std::logic_error("only one AllocationProbe may be active");
  }
  g_probe_count.store(0);
  g_probe_watched.store(watched_numel);
}

AllocationProbe::~AllocationProbe() { g_probe_active.store(false); }

std::size_t AllocationProbe::count() const { return g_probe_count.load(); }

}  // namespace testing

}  // namespace paro
