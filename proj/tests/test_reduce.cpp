#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hrom/linalg.hpp"
#include "hrom/reduce.hpp"
#include "test_support.hpp"

using namespace hrom;
using hrom::test_util::random_matrix;
using hrom::test_util::rel_error;

namespace {

std::vector<Mat3> random_params(std::mt19937_64& rng, int s) {
  std::vector<Mat3> p;
  for (int i = 0; i < s; ++i) p.push_back(Mat3::Identity() + 0.05 * Mat3(random_matrix(rng, 3, 3)));
  return p;
}

// Affine data U = A Y + c with a hand-built model (lossless intermediate basis).
LleModel affine_model(std::mt19937_64& rng, int D, int s, int d, Mat* U_out = nullptr) {
  LleModel m;
  m.Y = random_matrix(rng, d, s);
  const Mat A = random_matrix(rng, D, d);
  const Vec c = random_matrix(rng, D, 1);
  const Mat U = (A * m.Y).colwise() + c;
  m.phibar = pod_fit(U, std::min(D, s)).psi;
  m.Ybar = m.phibar.transpose() * U;
  m.params = random_params(rng, s);
  if (U_out) *U_out = U;
  return m;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST(Pod, ExactRankReconstruction) {
  std::mt19937_64 rng(1);
  const Mat U = random_matrix(rng, 30, 2) * random_matrix(rng, 2, 12);
  const PodBasis b = pod_fit(U, 2);
  EXPECT_LT((U - b.psi * (b.psi.transpose() * U)).norm(), 1e-12 * U.norm());
  EXPECT_EQ(b.rank, 2);
}

TEST(Pod, ErrorEqualsSingularValueTail) {
  std::mt19937_64 rng(2);
  const Mat U = random_matrix(rng, 50, 20);
  const PodBasis b = pod_fit(U, 5);
  Eigen::JacobiSVD<Mat> oracle(U);
  const Vec sv = oracle.singularValues();
  const double tail = std::sqrt(sv.tail(15).squaredNorm());
  EXPECT_NEAR((U - b.psi * (b.psi.transpose() * U)).norm(), tail, 1e-10 * tail);
  EXPECT_LT((b.psi.transpose() * b.psi - Mat::Identity(5, 5)).norm(), 1e-12);
  for (int i = 0; i + 1 < b.singular_values.size(); ++i) EXPECT_GE(b.singular_values(i), b.singular_values(i + 1));
}

TEST(Pod, RejectsOversizedDimension) {
  EXPECT_THROW(pod_fit(Mat::Ones(4, 3), 4), ConfigError);
}

TEST(Lpod, SingleClusterSpansPod) {
  std::mt19937_64 rng(3);
  const Mat U = random_matrix(rng, 40, 15);
  const LpodModel m = lpod_fit(U, 1, 4, 42);
  const Mat local = lpod_basis(m, 0).psi;
  const Mat global = pod_fit(U, 4).psi;
  EXPECT_LT((local * local.transpose() - global * global.transpose()).norm(), 1e-9);
}

TEST(Lpod, RecoversSeparatedBlobsLikeBruteForcePartition) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat U(6, 10);
  for (int i = 0; i < 10; ++i)
    for (int r = 0; r < 6; ++r) U(r, i) = (i < 5 ? 0.0 : 20.0) * (r == 0) + 0.3 * n(rng);
  // Exhaustive search over 2-partitions (first snapshot fixed to side 0) for minimal within-cluster SSE.
  double best = 1e300;
  int best_mask = 0;
  for (int mask = 0; mask < (1 << 9); ++mask) {
    std::vector<int> side(10, 0);
    for (int i = 1; i < 10; ++i) side[i] = (mask >> (i - 1)) & 1;
    double sse = 0.0;
    for (int c = 0; c < 2; ++c) {
      Vec mean = Vec::Zero(6);
      int cnt = 0;
      for (int i = 0; i < 10; ++i)
        if (side[i] == c) mean += U.col(i), ++cnt;
      if (cnt == 0) { sse = 1e300; break; }
      mean /= cnt;
      for (int i = 0; i < 10; ++i)
        if (side[i] == c) sse += (U.col(i) - mean).squaredNorm();
    }
    if (sse < best) best = sse, best_mask = mask;
  }
  const LpodModel m = lpod_fit(U, 2, 2, 7);
  for (int i = 1; i < 10; ++i) {
    const bool same_oracle = ((best_mask >> (i - 1)) & 1) == 0;
    EXPECT_EQ(m.assignment[i] == m.assignment[0], same_oracle);
  }
  EXPECT_EQ(best_mask, 0b111110000);
}

TEST(Lpod, SelectionStableUnderLocalReconstruction) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat U(8, 24);
  for (int i = 0; i < 24; ++i)
    for (int r = 0; r < 8; ++r) U(r, i) = 100.0 * (i % 2) * (r == 1) + (r == 2 ? 50.0 : 0.0) + n(rng);
  const LpodModel m = lpod_fit(U, 2, 3, 9);
  for (int i = 0; i < 24; ++i) {
    const Vec ybar = m.phibar.transpose() * U.col(i);
    const int home = lpod_select(m, ybar);
    EXPECT_EQ(home, m.assignment[i]);
    for (int c = 0; c < 2; ++c) {
      const Mat& B = m.local_bases[c];
      EXPECT_EQ(lpod_select(m, B * (B.transpose() * ybar)), home);
    }
  }
}

TEST(PmKron, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Vec y = random_matrix(rng, 4, 1);
  const Mat J = kron_square_jacobian(y);
  const double h = 1e-6;
  for (int c = 0; c < 4; ++c) {
    Vec p = y, m = y;
    p(c) += h;
    m(c) -= h;
    EXPECT_LT((J.col(c) - (kron_square(p) - kron_square(m)) / (2 * h)).norm(), 1e-8);
  }
}

TEST(Pm, SyntheticQuadraticManifoldRecovered) {
  std::mt19937_64 rng(7);
  const int D = 60, d = 2, dt = 3, half = 40;
  Eigen::HouseholderQR<Mat> qr(random_matrix(rng, D, d + dt));
  const Mat Q = qr.householderQ() * Mat::Identity(D, d + dt);
  const Mat Vbar = Q.leftCols(d), Vtilde = Q.rightCols(dt);
  const Mat Xi = 0.1 * random_matrix(rng, dt, d * d);
  // Symmetric +-y pairs decouple the linear and quadratic parts in the snapshot covariance.
  Mat U(D, 2 * half);
  for (int i = 0; i < half; ++i) {
    const Vec y = random_matrix(rng, d, 1);
    U.col(2 * i) = Vbar * y + Vtilde * Xi * kron_square(y);
    U.col(2 * i + 1) = -Vbar * y + Vtilde * Xi * kron_square(y);
  }
  const PmModel m = pm_fit(U, d, dt, 20, 1e-12);
  double err = 0.0;
  for (int i = 0; i < U.cols(); ++i) err += (pm_reconstruct(m, m.Y.col(i)) - U.col(i)).squaredNorm();
  EXPECT_LT(std::sqrt(err) / U.norm(), 1e-8);
  EXPECT_LT((m.Vbar.transpose() * m.Vtilde).norm(), 1e-10);
}

TEST(Pm, InitialObjectiveIsPodErrorAndFitIsMonotone) {
  std::mt19937_64 rng(8);
  Mat U(30, 40);
  for (int i = 0; i < 40; ++i) {
    const double t = -1.0 + 2.0 * i / 39.0;
    U.col(i) = Vec::LinSpaced(30, 0.0, 1.0) * t + Vec::LinSpaced(30, 1.0, -1.0).array().square().matrix() * t * t +
               0.01 * random_matrix(rng, 30, 1);
  }
  const PmModel m = pm_fit(U, 1, 2, 15, 0.0);
  const Mat psi = pod_fit(U, 1).psi;
  EXPECT_NEAR(m.objective.front(), (U - psi * psi.transpose() * U).squaredNorm(), 1e-9 * U.squaredNorm());
  for (std::size_t i = 1; i < m.objective.size(); ++i) EXPECT_LE(m.objective[i], m.objective[i - 1] * (1 + 1e-12));
  EXPECT_LT(m.objective.back(), m.objective.front());
}

TEST(Pm, TangentProperties) {
  std::mt19937_64 rng(9);
  const Mat U = random_matrix(rng, 25, 30);
  PmModel m = pm_fit(U, 3, 4, 3);
  EXPECT_LT((pm_tangent(m, Vec::Zero(3)) - m.Vbar).norm(), 1e-15);
  const Vec y = random_matrix(rng, 3, 1);
  const Mat T = pm_tangent(m, y);
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    Vec p = y, q = y;
    p(c) += h;
    q(c) -= h;
    EXPECT_LT(rel_error((pm_reconstruct(m, p) - pm_reconstruct(m, q)) / (2 * h), T.col(c)), 1e-7);
  }
  PmModel scalar = pm_fit(U, 1, 2, 3);
  const double ys = 0.7;
  const Mat Ts = pm_tangent(scalar, Vec::Constant(1, ys));
  EXPECT_LT((Ts - (scalar.Vbar + 2 * ys * scalar.Vtilde * scalar.Xi)).norm(), 1e-12);
}

TEST(Lle, AffineDataReconstructedExactlyByWeights) {
  std::mt19937_64 rng(10);
  const int d = 3, s = 30;
  const Mat U = (random_matrix(rng, 12, d) * random_matrix(rng, d, s)).colwise() + Vec(random_matrix(rng, 12, 1));
  const Mat W = lle_weights(U, d + 1, 0.0);
  for (int i = 0; i < s; ++i) {
    EXPECT_NEAR(W.row(i).sum(), 1.0, 1e-12);
    EXPECT_LT((U * W.row(i).transpose() - U.col(i)).norm(), 1e-10 * U.col(i).norm());
  }
}

TEST(Lle, HelixEmbeddingMonotoneInArcLength) {
  const int s = 50;
  Mat U(3, s);
  std::vector<double> arc(s);
  for (int i = 0; i < s; ++i) {
    const double t = 4.0 * M_PI * i / (s - 1);
    U.col(i) << std::cos(t), std::sin(t), 0.3 * t;
    arc[i] = t;
  }
  LleOptions opt;
  opt.k = 6;
  opt.d = 1;
  const LleModel m = lle_fit(U, std::vector<Mat3>(s, Mat3::Identity()), opt);
  std::vector<double> y(s);
  for (int i = 0; i < s; ++i) y[i] = m.Y(0, i);
  EXPECT_NEAR(std::abs(spearman(arc, y)), 1.0, 1e-12);
}

TEST(Lle, ConstantVectorInKernelAndEmbeddingNormalized) {
  std::mt19937_64 rng(11);
  const Mat U = random_matrix(rng, 20, 40);
  const Mat W = lle_weights(U, 8, 1e-3);
  const Mat IW = Mat::Identity(40, 40) - W;
  EXPECT_LT((IW.transpose() * IW * Vec::Ones(40)).norm(), 1e-12);
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(W.row(i).sum(), 1.0, 1e-12);
  const Mat Y = lle_embedding(W, 3);
  EXPECT_LT(Y.rowwise().mean().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((Y * Y.transpose() / 40.0 - Mat::Identity(3, 3)).norm(), 1e-10);
}

TEST(Lle, IntermediateCoordinatesAreProjection) {
  std::mt19937_64 rng(12);
  const Mat U = random_matrix(rng, 50, 20);
  LleOptions opt;
  opt.k = 6;
  opt.d = 2;
  const LleModel m = lle_fit(U, random_params(rng, 20), opt);
  EXPECT_EQ(m.phibar.cols(), 20);
  EXPECT_EQ((m.Ybar - m.phibar.transpose() * U).norm(), 0.0);
  EXPECT_LT((m.phibar * m.Ybar - U).norm(), 1e-10 * U.norm());
}

TEST(Chart, AffineDataReproducesNeighbors) {
  std::mt19937_64 rng(13);
  Mat U;
  const LleModel m = affine_model(rng, 40, 30, 3, &U);
  const LocalChart c = local_chart(m, m.params[4], 6);
  EXPECT_FALSE(c.ridge_applied);
  for (int id : c.neighbor_ids) {
    const Vec u = m.phibar * (c.phitilde * m.Y.col(id) + c.offset);
    EXPECT_LT((u - U.col(id)).norm(), 1e-9 * U.col(id).norm());
  }
}

TEST(Chart, AllSnapshotsGiveGlobalLeastSquares) {
  std::mt19937_64 rng(14);
  const int s = 25, d = 2;
  const Mat Y = random_matrix(rng, d, s);
  const Mat Ybar = random_matrix(rng, 7, s);
  const LocalChart c = fit_chart(Ybar, Y);
  Mat X(d + 1, s);
  X << Y, Mat::Ones(1, s);
  const Mat oracle = lstsq(X.transpose(), Ybar.transpose()).transpose();
  EXPECT_LT((c.phitilde - oracle.leftCols(d)).norm(), 1e-10);
  EXPECT_LT((c.offset - oracle.col(d)).norm(), 1e-10);
  EXPECT_LE(chart_normal_residual(c, Ybar, Y), 1e-10);
}

TEST(Chart, PerturbationNeverImprovesFit) {
  std::mt19937_64 rng(15);
  const Mat Y = random_matrix(rng, 3, 10);
  const Mat Ybar = random_matrix(rng, 6, 10);
  const LocalChart c = fit_chart(Ybar, Y);
  auto objective = [&](const Mat& phi) { return ((Ybar - phi * Y).colwise() - c.offset).squaredNorm(); };
  const double f0 = objective(c.phitilde);
  for (int t = 0; t < 50; ++t) {
    Mat delta = random_matrix(rng, 6, 3);
    delta *= 1e-3 / delta.norm();
    EXPECT_GE(objective(c.phitilde + delta), f0);
  }
}

TEST(Chart, TwoStageEqualsDirectAtLosslessIntermediateDimension) {
  std::mt19937_64 rng(16);
  const int D = 45, s = 30, d = 3, N = 8;
  const Mat U = random_matrix(rng, D, s);
  LleOptions opt;
  opt.k = 6;
  opt.d = d;
  const LleModel m = lle_fit(U, random_params(rng, s), opt);
  const LocalChart c = local_chart(m, Mat3::Identity(), N);
  Mat U_N(D, N), Y_N(d, N);
  for (int j = 0; j < N; ++j) U_N.col(j) = U.col(c.neighbor_ids[j]), Y_N.col(j) = m.Y.col(c.neighbor_ids[j]);
  const Mat WN = Mat::Identity(N, N) - Mat::Constant(N, N, 1.0 / N);
  const Mat direct = U_N * WN * Y_N.transpose() * (Y_N * WN * Y_N.transpose()).inverse();
  EXPECT_LT(rel_error(m.phibar * c.phitilde, direct), 1e-9);
  Mat Ybar_N(m.Ybar.rows(), N);
  for (int j = 0; j < N; ++j) Ybar_N.col(j) = m.Ybar.col(c.neighbor_ids[j]);
  EXPECT_LE(chart_normal_residual(c, Ybar_N, Y_N), 1e-10);
}

TEST(Chart, DegenerateNeighborsGetRidge) {
  const Mat Y = Mat::Ones(2, 5);
  const Mat Ybar = Mat::Ones(4, 5);
  const LocalChart c = fit_chart(Ybar, Y);
  EXPECT_TRUE(c.ridge_applied);
  EXPECT_TRUE(c.phitilde.allFinite());
}

TEST(EmbedInit, RecoversCoordinates) {
  std::mt19937_64 rng(17);
  Mat U;
  const LleModel m = affine_model(rng, 40, 30, 3, &U);
  const LocalChart c = local_chart(m, m.params[0], 6);
  EXPECT_LT(embed_init(c, c.offset).norm(), 1e-12);
  const Vec yhat = random_matrix(rng, 3, 1);
  EXPECT_LT((embed_init(c, c.phitilde * yhat + c.offset) - yhat).norm(), 1e-10);
  for (int id : c.neighbor_ids) EXPECT_LT((embed_init(c, m.Ybar.col(id)) - m.Y.col(id)).norm(), 1e-9);
}
