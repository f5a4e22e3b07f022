#include "paro/generators.hpp"

#include <cmath>
#include <stdexcept>

#include "paro/random.hpp"

namespace paro {

namespace {

constexpr int kMaxColumnAttempts = 100000;

bool cosines_in_range(const Matrix& cols, Eigen::Index upto, const Vector& v, double lo,
                      double hi) {
  for (Eigen::Index j = 0; j < upto; ++j) {
    const double c = cols.col(j).dot(v);
    if (c < lo || c > hi) return false;
  }
  return true;
}

// Columns c_i = a_i d + sqrt(1 - a_i^2) q_i with q_i a unit vector orthogonal
// to the shared direction d and a_i^2 drawn uniformly in [lo, hi]; each new
// column is redrawn until its cosine with the earlier ones is in range.
void fill_block(Matrix& u, Eigen::Index first, std::size_t width, double lo, double hi,
                Rng& rng) {
  const Eigen::Index dim = u.rows();
  Vector d = rng.normal_vector(static_cast<std::size_t>(dim));
  d /= d.norm();
  for (std::size_t c = 0; c < width; ++c) {
    const Eigen::Index col = first + static_cast<Eigen::Index>(c);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxColumnAttempts && !placed; ++attempt) {
      Vector q = rng.normal_vector(static_cast<std::size_t>(dim));
      q -= d.dot(q) * d;
      const double qn = q.norm();
      if (qn == 0.0) continue;
      const double a = std::sqrt(rng.uniform(std::max(lo, 0.0), hi));
      Vector v = a * d + std::sqrt(std::max(0.0, 1.0 - a * a)) * (q / qn);
      v /= v.norm();
      if (cosines_in_range(u.middleCols(first, static_cast<Eigen::Index>(c)), static_cast<Eigen::Index>(c), v, lo, hi)) {
        u.col(col) = v;
        placed = true;
      }
    }
    if (!placed) throw std::invalid_argument("collinearity range could not be met");
  }
}

}  // namespace

DenseTensor mult_tensor(const MultTensorSpec& s) {
  if (s.m < 1 || s.n < 1 || s.p < 1) throw ShapeError("multiplication sizes must be positive");
  DenseTensor y({s.m * s.n, s.n * s.p, s.m * s.p});
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) {
      for (std::size_t k = 0; k < s.p; ++k) y({j + s.n * i, k + s.p * j, i + s.m * k}) = 1.0;
    }
  }
  return y;
}

std::optional<std::size_t> known_rank(const MultTensorSpec& s) {
  if (s.m == 2 && s.n == 2 && s.p == 2) return 7;
  if (s.m == 2 && s.n == 3 && s.p == 2) return 11;
  if (s.m == 3 && s.n == 3 && s.p == 3) return 23;
  return std::nullopt;
}

RandomKruskal random_kruskal(const Shape& dims, std::size_t rank, std::uint64_t seed,
                             const std::optional<Collinearity>& collinearity) {
  if (dims.empty()) throw ShapeError("at least one mode is required");
  for (std::size_t e : dims) {
    if (e == 0) throw ShapeError("extents must be positive");
  }
  if (rank < 1) throw ShapeError("rank must be at least 1");
  if (collinearity) {
    const Collinearity& c = *collinearity;
    if (!(c.lo <= c.hi) || c.hi > 1.0 || c.lo < -1.0) {
      throw std::invalid_argument("collinearity range is empty");
    }
    std::size_t total = 0;
    for (std::size_t b : c.blocks) {
      if (b == 0) throw std::invalid_argument("collinearity blocks must be non-empty");
      total += b;
    }
    if (total != rank) throw std::invalid_argument("collinearity blocks must sum to the rank");
  }

  RandomKruskal out;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    Rng rng(substream_seed(seed, {n}));
    Matrix u(static_cast<Eigen::Index>(dims[n]), static_cast<Eigen::Index>(rank));
    if (collinearity) {
      Eigen::Index first = 0;
      for (std::size_t b : collinearity->blocks) {
        fill_block(u, first, b, collinearity->lo, collinearity->hi, rng);
        first += static_cast<Eigen::Index>(b);
      }
    } else {
      for (Eigen::Index r = 0; r < u.cols(); ++r) {
        Vector v = rng.normal_vector(dims[n]);
        while (v.norm() == 0.0) v = rng.normal_vector(dims[n]);
        u.col(r) = v / v.norm();
      }
    }
    out.model.factors.push_back(std::move(u));
  }
  out.tensor = reconstruct_kruskal(out.model);
  return out;
}

DenseTensor gaussian_tensor(const Shape& dims, std::uint64_t seed) {
  DenseTensor t(dims);
  Rng rng(substream_seed(seed, {0}));
  for (double& v : t.data()) v = rng.normal();
  return t;
}

DenseTensor add_noise(const DenseTensor& t, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return t;
  if (std::isnan(snr_db)) throw std::invalid_argument("snr_db is NaN");
  const double signal = squared_norm(t);
  if (signal == 0.0) throw std::invalid_argument("cannot set an SNR for a zero tensor");
  Rng rng(substream_seed(seed, {0}));
  std::vector<double> noise(t.numel());
  double nn = 0.0;
  for (double& v : noise) {
    v = rng.normal();
    nn += v * v;
  }
  const double scale = std::sqrt(signal / (nn * std::pow(10.0, snr_db / 10.0)));
  DenseTensor out = t;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * noise[i];
  return out;
}

}  // namespace paro
