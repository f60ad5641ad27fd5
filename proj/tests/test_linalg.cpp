#include <gtest/gtest.h>

#include <random>

#include "hrom/linalg.hpp"
#include "test_support.hpp"

using namespace hrom;
using hrom::test_util::random_matrix;

TEST(Nnls, UnconstrainedOptimumWhenPositive) {
  std::mt19937_64 rng(1);
  const Mat A = random_matrix(rng, 12, 4);
  const Vec x = Vec::Constant(4, 0.5) + 0.1 * Vec(random_matrix(rng, 4, 1)).cwiseAbs();
  const NnlsResult r = nnls(A, A * x);
  EXPECT_LT((r.x - x).norm(), 1e-10);
  EXPECT_LT(r.residual, 1e-10);
}

TEST(Nnls, MatchesGridSearchOnThreeVariables) {
  std::mt19937_64 rng(2);
  const Mat A = random_matrix(rng, 9, 3);
  const Vec b = random_matrix(rng, 9, 1);
  const NnlsResult r = nnls(A, b);
  EXPECT_GE(r.x.minCoeff(), 0.0);
  auto f = [&](const Vec& x) { return (A * x - b).squaredNorm(); };
  // Coarse nonnegative grid, then a fine grid of step 1e-3 around the coarse winner.
  Vec best = Vec::Zero(3);
  double fbest = f(best);
  for (int i = 0; i <= 60; ++i)
    for (int j = 0; j <= 60; ++j)
      for (int k = 0; k <= 60; ++k) {
        const Vec x(Eigen::Vector3d(0.05 * i, 0.05 * j, 0.05 * k));
        if (f(x) < fbest) fbest = f(x), best = x;
      }
  const Vec center = best;
  for (int i = -50; i <= 50; ++i)
    for (int j = -50; j <= 50; ++j)
      for (int k = -50; k <= 50; ++k) {
        const Vec x = (center + 1e-3 * Vec(Eigen::Vector3d(i, j, k))).cwiseMax(0.0);
        if (f(x) < fbest) fbest = f(x), best = x;
      }
  EXPECT_LE(f(r.x), fbest + 1e-6);
}

TEST(Nnls, KktConditionsHold) {
  std::mt19937_64 rng(3);
  const Mat A = random_matrix(rng, 30, 10);
  const Vec b = random_matrix(rng, 30, 1);
  const NnlsResult r = nnls(A, b);
  const Vec w = A.transpose() * (b - A * r.x);
  for (int j = 0; j < 10; ++j) {
    EXPECT_GE(r.x(j), 0.0);
    if (r.x(j) > 0) EXPECT_NEAR(w(j), 0.0, 1e-9);
    else EXPECT_LE(w(j), 1e-9);
  }
}

TEST(Lstsq, MinimumNormForRankDeficient) {
  Mat A(2, 2);
  A << 1, 1, 1, 1;
  const Vec x = lstsq(A, Vec::Constant(2, 2.0));
  EXPECT_NEAR(x(0), 1.0, 1e-12);
  EXPECT_NEAR(x(1), 1.0, 1e-12);
}

TEST(KSmallest, TiesBrokenByIndex) {
  Vec v(5);
  v << 3, 1, 2, 1, 0;
  EXPECT_EQ(k_smallest(v, 3), (std::vector<int>{4, 1, 3}));
}
