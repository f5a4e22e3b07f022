#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "paro/implicit_residue.hpp"
#include "paro/paro.hpp"

using namespace paro;
using fixtures::random_tensor;

namespace {

DenseTensor dense_sum(const DenseTensor& e, const std::vector<Vector>& u, double w) {
  DenseTensor out = fixtures::naive_outer(u, w);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += e[i];
  return out;
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

KruskalModel random_model(const Shape& shape, std::size_t rank, std::uint64_t seed) {
  return random_kruskal_init(shape, rank, seed);
}

struct Snapshot {
  DenseTensor xbar, e;
};

ParoOptions fixed_options(double gamma_r, std::size_t iters, Rank1Algorithm inner) {
  ParoOptions o;
  o.schedule = MuSchedule::fixed(gamma_r);
  o.inner = inner;
  o.tol = 1e-300;
  o.stall_tol = 0.0;
  o.max_iters = iters;
  o.seed = 9;
  return o;
}

}  // namespace

TEST(Schedule, FixedKeepsMuAtOneHalf) {
  const MuSchedule s = MuSchedule::fixed(1.0);
  std::vector<double> hist(101, 1.0);
  double g = s.gamma_r0;
  for (std::size_t k = 1; k <= 100; ++k) g = next_gamma_r(s, g, k, hist);
  EXPECT_EQ(mu_from_gamma_r(g), 0.5);
}

TEST(Schedule, RegularGrowsEveryPeriod) {
  const MuSchedule s = MuSchedule::regular(10, std::sqrt(2.0));
  std::vector<double> hist(11, 1.0);
  double g = s.gamma_r0;
  for (std::size_t k = 1; k <= 9; ++k) EXPECT_EQ(g = next_gamma_r(s, g, k, hist), 1.0);
  g = next_gamma_r(s, g, 10, hist);
  EXPECT_NEAR(mu_from_gamma_r(g), 1.0 / (1.0 + 1.0 / std::sqrt(2.0)), 1e-15);
}

TEST(Schedule, AdaptiveFollowsTheErrorWindow) {
  const MuSchedule s = MuSchedule::adaptive(3, 2.0, 5.0);
  const std::vector<double> down{1.0, 0.9, 0.8, 0.7};
  const std::vector<double> up{1.0, 0.9, 1.2, 1.1};
  EXPECT_EQ(next_gamma_r(s, 5.0, 3, down), 10.0);
  EXPECT_EQ(next_gamma_r(s, 5.0, 3, up), 2.5);
  EXPECT_EQ(next_gamma_r(s, 5.0, 2, up), 5.0);
  EXPECT_EQ(next_gamma_r(s, 900.0, 3, down), kGammaRMax);
  EXPECT_EQ(next_gamma_r(s, 1.5e-3, 3, up), kGammaRMin);
}

TEST(Schedule, ParseAndPrint) {
  const MuSchedule a = parse_mu_schedule("adaptive:20:1.5:5");
  EXPECT_EQ(a.kind, ScheduleKind::adaptive);
  EXPECT_EQ(a.period, 20u);
  EXPECT_EQ(a.factor, 1.5);
  EXPECT_EQ(a.gamma_r0, 5.0);
  EXPECT_EQ(to_string(parse_mu_schedule(to_string(a))), to_string(a));
  EXPECT_EQ(parse_mu_schedule("regular:10:2").gamma_r0, 1.0);
  EXPECT_EQ(parse_mu_schedule("fixed:3").kind, ScheduleKind::fixed);
  for (const char* bad : {"fixed", "regular:0:2", "regular:10:1", "adaptive:1:2", "fixed:-1",
                          "newton:1", "fixed:1x"}) {
    EXPECT_THROW(parse_mu_schedule(bad), std::invalid_argument) << bad;
  }
}

TEST(ImplicitResidue, ZeroPartsReduceToTheOtherTerm) {
  Rng rng(90);
  const DenseTensor e = random_tensor({3, 4, 2}, 91);
  const auto u = fixtures::random_vectors(e.shape(), rng);
  const auto v = fixtures::random_vectors(e.shape(), rng);
  const ImplicitResidue dense_only(e, squared_norm(e), u, 0.0);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_LE((dense_only.contract_all_but(v, n) - contract_all_but(e, v, n)).norm(), 1e-13);
  }
  const DenseTensor zero(e.shape());
  const ImplicitResidue rank1_only(zero, 0.0, u, 2.0);
  for (std::size_t n = 0; n < 3; ++n) {
    Vector expected = 2.0 * u[n];
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != n) expected *= u[k].dot(v[k]);
    }
    EXPECT_LE((rank1_only.contract_all_but(v, n) - expected).norm(), 1e-13 * expected.norm());
  }
}

TEST(ImplicitResidue, MatchesMaterializedSum) {
  Rng rng(92);
  for (const Shape& shape : {Shape{3, 3, 3}, Shape{4, 2, 5}, Shape{2, 3, 2, 3}}) {
    const DenseTensor e = random_tensor(shape, 93);
    const auto u = fixtures::random_vectors(shape, rng);
    const double w = rng.normal();
    const ImplicitResidue imp(e, squared_norm(e), u, w);
    const DenseTensor full = dense_sum(e, u, w);
    const auto v = fixtures::random_vectors(shape, rng);
    for (std::size_t n = 0; n < shape.size(); ++n) {
      const Vector ref = contract_all_but(full, v, n);
      EXPECT_LE((imp.contract_all_but(v, n) - ref).norm(), 1e-12 * std::max(1.0, ref.norm()));
    }
    EXPECT_NEAR(imp.contract_all(v), contract_all(full, v), 1e-12 * std::max(1.0, squared_norm(full)));
    EXPECT_NEAR(imp.squared_norm(), squared_norm(full), 1e-12 * squared_norm(full));

    std::vector<Matrix> mats;
    for (std::size_t ext : shape) mats.push_back(rng.normal_matrix(ext, 2));
    EXPECT_LE(max_abs_diff(imp.project(mats), multi_mode_product(full, mats)),
              1e-12 * std::max(1.0, squared_norm(full)));
    EXPECT_LE(max_abs_diff(imp.materialize(), full), 1e-14);

    Rank1Model m;
    m.factors = fixtures::random_vectors(shape, rng);
    m.weight = 0.7;
    EXPECT_NEAR(imp.residual_squared_norm(m), DenseTarget(full).residual_squared_norm(m),
                1e-12 * squared_norm(full));
  }
}

TEST(ImplicitResidue, RejectsLengthMismatch) {
  const DenseTensor e = random_tensor({3, 3}, 94);
  EXPECT_THROW(ImplicitResidue(e, squared_norm(e), {Vector::Ones(3)}, 1.0), ShapeError);
}

TEST(Paro, HoldsExactlyFiveDataSizedTensors) {
  const DenseTensor y = random_tensor({4, 5, 3}, 95);
  const KruskalModel init = random_model(y.shape(), 3, 96);
  for (auto inner : {Rank1Algorithm::als, Rank1Algorithm::r1lm, Rank1Algorithm::roro}) {
    ParoOptions o = fixed_options(5.0, 10, inner);
    std::size_t count = 0;
    {
      paro::testing::AllocationProbe probe(y.numel());
      paro_decompose(y, init, o);
      count = probe.count();
    }
    EXPECT_EQ(count, 5u) << to_string(inner);
  }
}

TEST(Paro, StartResidueAndMeanInvariants) {
  const DenseTensor y = random_tensor({3, 4, 3}, 97);
  const KruskalModel init = random_model(y.shape(), 3, 98);
  ParoOptions o;
  o.max_iters = 40;
  o.schedule = MuSchedule::adaptive(5, std::sqrt(2.0), 5.0);
  std::size_t calls = 0;
  o.observer = [&](const ParoIterate& it) {
    ++calls;
    EXPECT_NEAR(it.mu, it.gamma_r / (1.0 + it.gamma_r), 1e-14);
    DenseTensor mean(y.shape());
    for (const Rank1Model& c : it.components) {
      const DenseTensor x = c.reconstruct();
      for (std::size_t i = 0; i < mean.numel(); ++i) mean[i] += x[i] / 3.0;
    }
    EXPECT_LE(max_abs_diff(mean, it.xbar), 1e-12);
    if (it.iter == 0) {
      for (std::size_t i = 0; i < y.numel(); ++i) {
        EXPECT_EQ(it.e[i], y[i] * (1.0 / 3.0) - it.xbar[i]);
      }
    }
  };
  const ParoResult r = paro_decompose(y, init, o);
  EXPECT_EQ(calls, r.trace.size());
  for (const IterationRecord& rec : r.trace) {
    EXPECT_NEAR(rec.mu, rec.gamma_r / (1.0 + rec.gamma_r), 1e-14);
  }
}

TEST(Paro, ExactRankOneWithSingleComponent) {
  Rng rng(99);
  const DenseTensor y = fixtures::naive_outer(fixtures::random_vectors({4, 3, 5}, rng));
  ParoOptions o;
  o.tol = 1e-10;
  const ParoResult r = paro_decompose(y, random_model(y.shape(), 1, 100), o);
  EXPECT_EQ(r.reason, StopReason::converged);
  EXPECT_LE(relative_error(y, reconstruct_kruskal(r.model)), 1e-10);
}

TEST(Paro, SerialAndOpenmpTracesAreIdentical) {
  const DenseTensor y = random_tensor({4, 4, 4}, 101);
  const KruskalModel init = random_model(y.shape(), 4, 102);
  ParoOptions a = fixed_options(5.0, 30, Rank1Algorithm::als);
  ParoOptions b = a;
  b.policy = ExecutionPolicy::openmp;
  const ParoResult ra = paro_decompose(y, init, a), rb = paro_decompose(y, init, b);
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t k = 0; k < ra.trace.size(); ++k) {
    EXPECT_EQ(ra.trace[k].relative_error, rb.trace[k].relative_error);
  }
}

TEST(Paro, RejectsBadInput) {
  const DenseTensor y = random_tensor({3, 3, 3}, 103);
  ParoOptions o;
  EXPECT_THROW(paro_decompose(y, random_model({3, 3, 2}, 2, 1), o), ShapeError);
  o.tol = 0.0;
  EXPECT_THROW(paro_decompose(y, random_model(y.shape(), 2, 1), o), std::invalid_argument);
}

TEST(Admm, ZUpdateFromZeroState) {
  Rng rng(104);
  const Vector y = rng.normal_vector(12);
  const double gamma = 0.6;
  const Matrix z = admm_z_update(y, Matrix::Zero(12, 3), Matrix::Zero(12, 3), gamma);
  const Matrix expected = (gamma / (1 + gamma * 3)) * y * Vector::Ones(3).transpose();
  EXPECT_LE((z - expected).norm(), 1e-14);
}

TEST(Admm, MatchesParoRecursion) {
  for (std::size_t rank : {1u, 2u, 3u}) {
    for (double gamma_r : {1.0, 5.0}) {
      for (auto inner : {Rank1Algorithm::als, Rank1Algorithm::r1lm}) {
        const DenseTensor y = random_tensor({3, 3, 3}, 105 + rank);
        const KruskalModel init = random_model(y.shape(), rank, 106 + rank);
        std::vector<Snapshot> paro_trace;
        ParoOptions o = fixed_options(gamma_r, 20, inner);
        o.observer = [&](const ParoIterate& it) { paro_trace.push_back({it.xbar, it.e}); };
        paro_decompose(y, init, o);

        AdmmOptions a;
        a.gamma_r = gamma_r;
        a.inner = inner;
        a.iters = 20;
        a.seed = o.seed;
        const auto admm = admm_reference(y, init, a);
        ASSERT_EQ(admm.size(), paro_trace.size());
        for (std::size_t k = 0; k < admm.size(); ++k) {
          EXPECT_LE(max_abs_diff(admm[k].xbar, paro_trace[k].xbar), 1e-10)
              << "R=" << rank << " gR=" << gamma_r << " k=" << k;
          EXPECT_LE(max_abs_diff(admm[k].e, paro_trace[k].e), 1e-10)
              << "R=" << rank << " gR=" << gamma_r << " k=" << k;
        }
      }
    }
  }
}

TEST(Admm, DualMeanIdentity) {
  const DenseTensor y = random_tensor({3, 3, 3}, 107);
  for (auto start : {AdmmStart::paro_matching, AdmmStart::zero_dual}) {
    AdmmOptions a;
    a.gamma_r = 2.0;
    a.start = start;
    const auto trace = admm_reference(y, random_model(y.shape(), 3, 108), a);
    for (std::size_t k = 1; k < trace.size(); ++k) {
      const Vector tbar = trace[k].t.rowwise().mean();
      for (std::size_t i = 0; i < y.numel(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        EXPECT_NEAR(tbar(ii), trace[k].xbar[i] - trace[k - 1].xbar[i] - trace[k - 1].e[i], 1e-12);
      }
    }
  }
}

TEST(Admm, SizeCap) {
  const DenseTensor y({50, 50, 50});
  EXPECT_THROW(admm_reference(y, random_model(y.shape(), 1, 1), {}), ShapeError);
}

TEST(CpdAls, MonotoneAndExactOnLowRank) {
  const DenseTensor y = random_tensor({4, 5, 3}, 109);
  CpdAlsOptions o;
  o.max_iters = 300;
  const CpdAlsResult r = cpd_als(y, random_model(y.shape(), 3, 110), o);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    EXPECT_LE(r.trace[k].relative_error, r.trace[k - 1].relative_error + 1e-12);
  }

  const KruskalModel truth = random_model({5, 4, 6}, 3, 111);
  const DenseTensor x = reconstruct_kruskal(truth);
  KruskalModel start = truth;
  Rng rng(112);
  for (Matrix& u : start.factors) u += 0.05 * rng.normal_matrix(u.rows(), u.cols());
  CpdAlsOptions exact;
  exact.tol = 1e-9;
  exact.max_iters = 2000;
  const CpdAlsResult fit = cpd_als(x, start, exact);
  EXPECT_LE(relative_error(x, reconstruct_kruskal(fit.model)), 1e-8);
}

TEST(Epc, ScalingCases) {
  const KruskalModel m = random_model({3, 4, 2}, 2, 113);
  const DenseTensor x = reconstruct_kruskal(m);
  const KruskalModel same = epc_init(x, m);
  EXPECT_LE(relative_error(x, reconstruct_kruskal(same)), 1e-14);

  DenseTensor half = x;
  for (double& v : half.data()) v *= 0.5;
  EXPECT_LE(relative_error(half, reconstruct_kruskal(epc_init(half, m))), 1e-14);

  DenseTensor neg = x;
  for (double& v : neg.data()) v *= -3.0;
  EXPECT_LE(relative_error(neg, reconstruct_kruskal(epc_init(neg, m))), 1e-14);

  for (std::uint64_t s = 0; s < 20; ++s) {
    const DenseTensor y = random_tensor({3, 4, 2}, 200 + s);
    const KruskalModel init = random_model(y.shape(), 2, 300 + s);
    EXPECT_LE(relative_error(y, reconstruct_kruskal(epc_init(y, init))),
              relative_error(y, reconstruct_kruskal(init)) + 1e-15);
  }
  KruskalModel zero = m;
  for (Matrix& u : zero.factors) u.setZero();
  EXPECT_THROW(epc_init(x, zero), DegenerateError);
}

TEST(Components, RoundTripAndReinit) {
  const KruskalModel m = random_model({3, 2, 4}, 3, 114);
  const KruskalModel back = kruskal_from_components(components_from_kruskal(m));
  EXPECT_LE(max_abs_diff(reconstruct_kruskal(back), reconstruct_kruskal(m)), 1e-13);
  for (const Rank1Model& c : components_from_kruskal(m)) {
    for (const Vector& u : c.factors) EXPECT_NEAR(u.norm(), 1.0, 1e-14);
  }

  const DenseTensor y = random_tensor({3, 2, 4}, 115);
  const DenseTarget target(y);
  const Rank1Model a = reinit_component(target, 7, 1, 5);
  const Rank1Model b = reinit_component(target, 7, 1, 5);
  const Rank1Model c = reinit_component(target, 7, 2, 5);
  EXPECT_EQ(a.factors[0], b.factors[0]);
  EXPECT_NE(a.factors[0], c.factors[0]);
  EXPECT_NEAR(a.weight, contract_all(y, a.factors), 1e-14);
}
