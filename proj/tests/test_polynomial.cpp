#include <gtest/gtest.h>

#include <cmath>

#include "paro/polynomial.hpp"
#include "paro/random.hpp"

using paro::Polynomial;

TEST(Polynomial, EvaluationAndDerivative) {
  const Polynomial p{{1.0, -3.0, 0.0, 2.0}};
  EXPECT_DOUBLE_EQ(p(2.0), 1.0 - 6.0 + 16.0);
  const Polynomial d = p.derivative();
  EXPECT_EQ(d.coeffs, (std::vector<double>{-3.0, 0.0, 6.0}));
  EXPECT_EQ(p.degree(), 3);
  EXPECT_EQ((Polynomial{{0.0, 0.0}}).degree(), -1);
  EXPECT_DOUBLE_EQ(p.max_abs_coeff(), 3.0);
}

TEST(RealRoots, KnownFactorization) {
  // (x - 1)(x + 2)(x - 0.5)(x^2 + 1)
  const Polynomial p{{1.0, -2.5, 1.5, -1.5, 0.5, 1.0}};
  const auto r = paro::real_roots(p);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[0], -2.0, 1e-12);
  EXPECT_NEAR(r[1], 0.5, 1e-12);
  EXPECT_NEAR(r[2], 1.0, 1e-12);
}

TEST(RealRoots, ZeroRootsAndConstants) {
  const auto r = paro::real_roots(Polynomial{{0.0, 0.0, -1.0, 0.0, 1.0}});
  ASSERT_EQ(r.size(), 4u);
  EXPECT_NEAR(r[0], -1.0, 1e-12);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_EQ(r[2], 0.0);
  EXPECT_NEAR(r[3], 1.0, 1e-12);
  EXPECT_TRUE(paro::real_roots(Polynomial{{3.0}}).empty());
}

TEST(RealRoots, RandomCubicsResidualAfterPolish) {
  paro::Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    Polynomial p{{rng.normal(), rng.normal(), rng.normal(), rng.normal()}};
    for (double x : paro::real_roots(p)) {
      const double y = paro::newton_polish(p, x);
      EXPECT_LE(std::abs(p(y)), 1e-9 * p.max_abs_coeff() * std::max(1.0, std::pow(std::abs(y), 3)));
    }
  }
}
