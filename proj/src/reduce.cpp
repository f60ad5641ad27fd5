#include "hrom/reduce.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hrom/linalg.hpp"

namespace hrom {

void SnapshotSet::append(const Vec& u, const Mat3& Fbar, int path, int step) {
  if (U.cols() == 0) U.resize(u.size(), 0);
  U.conservativeResize(Eigen::NoChange, U.cols() + 1);
  U.col(U.cols() - 1) = u;
  params.push_back(Fbar);
  path_id.push_back(path);
  step_id.push_back(step);
}

PodBasis pod_fit(const Mat& U, int d) {
  if (d < 1 || d > std::min(U.rows(), U.cols()))
    throw ConfigError("POD dimension " + std::to_string(d) + " outside [1, min(D, s)]");
  ThinSvd svd = thin_svd(U);
  PodBasis out;
  out.psi = svd.U.leftCols(d);
  out.singular_values = svd.sigma;
  out.rank = numerical_rank(svd.sigma);
  return out;
}

namespace {

Mat pairwise_sq_distances(const Mat& X) {
  const Mat G = X.transpose() * X;
  const Vec n = G.diagonal();
  Mat D2 = (-2.0 * G).colwise() + n;
  D2.rowwise() += n.transpose();
  return D2.cwiseMax(0.0);
}

std::vector<int> assign_nearest(const Mat& X, const Mat& C) {
  std::vector<int> a(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    Eigen::Index best = 0;
    (C.colwise() - X.col(i)).colwise().squaredNorm().minCoeff(&best);
    a[i] = static_cast<int>(best);
  }
  return a;
}

// k-means++ seeding followed by Lloyd iterations; returns centroids and assignment.
std::pair<Mat, std::vector<int>> kmeans(const Mat& X, int k, std::mt19937_64& rng) {
  const int s = static_cast<int>(X.cols());
  Mat C(X.rows(), k);
  std::uniform_int_distribution<int> first(0, s - 1);
  C.col(0) = X.col(first(rng));
  for (int c = 1; c < k; ++c) {
    Vec d2(s);
    for (int i = 0; i < s; ++i) d2(i) = (C.leftCols(c).colwise() - X.col(i)).colwise().squaredNorm().minCoeff();
    if (d2.sum() <= 0.0) {
      C.col(c) = X.col(first(rng));
      continue;
    }
    std::discrete_distribution<int> pick(d2.data(), d2.data() + s);
    C.col(c) = X.col(pick(rng));
  }
  std::vector<int> a = assign_nearest(X, C);
  for (int it = 0; it < 200; ++it) {
    Mat sum = Mat::Zero(X.rows(), k);
    Vec count = Vec::Zero(k);
    for (int i = 0; i < s; ++i) {
      sum.col(a[i]) += X.col(i);
      count(a[i]) += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (count(c) > 0) C.col(c) = sum.col(c) / count(c);
    std::vector<int> next = assign_nearest(X, C);
    if (next == a) break;
    a = std::move(next);
  }
  return {C, a};
}

}  // namespace

LpodModel lpod_fit(const Mat& U, int n_clusters, int d_local, std::uint64_t seed, int overlap) {
  const int s = static_cast<int>(U.cols());
  if (n_clusters < 1 || n_clusters > s) throw ConfigError("LPOD cluster count outside [1, s]");
  if (d_local < 1 || d_local > s) throw ConfigError("LPOD local dimension outside [1, s]");
  LpodModel model;
  model.seed = seed;
  model.overlap = overlap;
  ThinSvd svd = thin_svd(U);
  const int dbar = std::max(numerical_rank(svd.sigma), d_local);
  model.phibar = svd.U.leftCols(std::min<Eigen::Index>(dbar, svd.U.cols()));
  const Mat Ybar = model.phibar.transpose() * U;

  std::mt19937_64 rng(seed);
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    auto [C, a] = kmeans(Ybar, n_clusters, rng);
    std::vector<int> count(n_clusters, 0);
    for (int c : a) ++count[c];
    ok = std::all_of(count.begin(), count.end(), [](int c) { return c > 0; });
    model.centroids = C;
    model.assignment = a;
  }
  if (!ok) throw Error("LPOD clustering left an empty cluster after 10 reseeds");

  for (int c = 0; c < n_clusters; ++c) {
    std::vector<int> members;
    for (int i = 0; i < s; ++i)
      if (model.assignment[i] == c) members.push_back(i);
    // Overlap: nearest outside snapshots to the centroid, topped up until d_local columns exist.
    Vec dist(s);
    for (int i = 0; i < s; ++i)
      dist(i) = model.assignment[i] == c ? std::numeric_limits<double>::infinity()
                                         : (Ybar.col(i) - model.centroids.col(c)).squaredNorm();
    const int extra = std::max(overlap, d_local - static_cast<int>(members.size()));
    for (int i : k_smallest(dist, extra))
      if (std::isfinite(dist(i))) members.push_back(i);
    std::sort(members.begin(), members.end());
    Mat X(Ybar.rows(), members.size());
    for (std::size_t j = 0; j < members.size(); ++j) X.col(j) = Ybar.col(members[j]);
    ThinSvd local = thin_svd(X);
    model.local_bases.push_back(local.U.leftCols(std::min<Eigen::Index>(d_local, local.U.cols())));
  }
  return model;
}

int lpod_select(const LpodModel& model, const Vec& ybar) {
  Eigen::Index best = 0;
  (model.centroids.colwise() - ybar).colwise().squaredNorm().minCoeff(&best);
  return static_cast<int>(best);
}

PodBasis lpod_basis(const LpodModel& model, int cluster) {
  PodBasis out;
  out.psi = model.phibar * model.local_bases.at(cluster);
  out.rank = static_cast<int>(out.psi.cols());
  return out;
}

Vec kron_square(const Vec& y) {
  const Eigen::Index d = y.size();
  Vec q(d * d);
  for (Eigen::Index a = 0; a < d; ++a) q.segment(a * d, d) = y(a) * y;
  return q;
}

Mat kron_square_jacobian(const Vec& y) {
  const Eigen::Index d = y.size();
  Mat J = Mat::Zero(d * d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      J(a * d + b, a) += y(b);
      J(a * d + b, b) += y(a);
    }
  return J;
}

namespace {

double pm_snapshot_error(const Vec& a, const Vec& b, const Mat& Xi, const Vec& y) {
  return (a - y).squaredNorm() + (b - Xi * kron_square(y)).squaredNorm();
}

}  // namespace

PmModel pm_fit(const Mat& U, int d, int d_tilde, int max_iters, double tol) {
  const int s = static_cast<int>(U.cols());
  if (d < 1 || d_tilde < 0 || d + d_tilde > std::min<Eigen::Index>(U.rows(), U.cols()))
    throw ConfigError("PM dimensions require d + d_tilde <= min(D, s)");
  ThinSvd svd = thin_svd(U);
  PmModel m;
  m.Vbar = svd.U.leftCols(d);
  m.Vtilde = svd.U.middleCols(d, d_tilde);
  const Mat A = m.Vbar.transpose() * U;
  const Mat B = m.Vtilde.transpose() * U;
  const double outside = std::max(0.0, U.squaredNorm() - A.squaredNorm() - B.squaredNorm());
  m.Y = A;
  m.Xi = Mat::Zero(d_tilde, d * d);

  auto total = [&]() {
    double f = outside;
    for (int i = 0; i < s; ++i) f += pm_snapshot_error(A.col(i), B.col(i), m.Xi, m.Y.col(i));
    return f;
  };
  m.objective.push_back(total());
  if (d_tilde == 0) return m;

  std::vector<bool> flagged(s, false);
  for (int it = 0; it < max_iters; ++it) {
    Mat Q(d * d, s);
    for (int i = 0; i < s; ++i) Q.col(i) = kron_square(m.Y.col(i));
    m.Xi = lstsq(Q.transpose(), B.transpose()).transpose();

    for (int i = 0; i < s; ++i) {
      Vec y = m.Y.col(i);
      double f = pm_snapshot_error(A.col(i), B.col(i), m.Xi, y);
      for (int gn = 0; gn < 10; ++gn) {
        Vec r(d + d_tilde);
        r << A.col(i) - y, B.col(i) - m.Xi * kron_square(y);
        Mat J(d + d_tilde, d);
        J << Mat::Identity(d, d), m.Xi * kron_square_jacobian(y);
        const Vec y_new = y + lstsq(J, r).col(0);
        const double f_new = pm_snapshot_error(A.col(i), B.col(i), m.Xi, y_new);
        if (!(f_new < f)) {
          if (gn == 0 && f_new > f * (1.0 + 1e-10) + 1e-300) flagged[i] = true;
          break;
        }
        const double decrease = f - f_new;
        y = y_new;
        f = f_new;
        if (decrease <= 1e-14 * (f + 1e-300)) break;
      }
      m.Y.col(i) = y;
    }
    const double f = total();
    const double prev = m.objective.back();
    m.objective.push_back(f);
    if (prev - f <= tol * prev || f <= 1e-28 * U.squaredNorm()) break;
  }
  for (int i = 0; i < s; ++i)
    if (flagged[i]) m.flagged.push_back(i);
  return m;
}

Vec pm_reconstruct(const PmModel& model, const Vec& y) {
  return model.Vbar * y + model.Vtilde * (model.Xi * kron_square(y));
}

Mat pm_tangent(const PmModel& model, const Vec& y) {
  return model.Vbar + model.Vtilde * (model.Xi * kron_square_jacobian(y));
}

Mat lle_weights(const Mat& U, int k, double reg, std::vector<std::vector<int>>* neighbors) {
  const int s = static_cast<int>(U.cols());
  if (k < 1 || k >= s) throw ConfigError("LLE neighbor count must satisfy 1 <= k < s");
  Mat D2 = pairwise_sq_distances(U);
  D2.diagonal().setConstant(std::numeric_limits<double>::infinity());
  Mat W = Mat::Zero(s, s);
  if (neighbors) neighbors->assign(s, {});
  for (int i = 0; i < s; ++i) {
    const std::vector<int> nb = k_smallest(D2.col(i), k);
    Mat Z(U.rows(), k);
    for (int j = 0; j < k; ++j) Z.col(j) = U.col(nb[j]) - U.col(i);
    Mat C = Z.transpose() * Z;
    Vec w;
    if (reg > 0.0) {
      const double tr = C.trace();
      C.diagonal().array() += reg * (tr > 0.0 ? tr : 1.0);
      w = C.ldlt().solve(Vec::Ones(k));
      w /= w.sum();
    } else {
      Mat kkt = Mat::Zero(k + 1, k + 1);
      kkt.topLeftCorner(k, k) = C;
      kkt.block(0, k, k, 1).setOnes();
      kkt.block(k, 0, 1, k).setOnes();
      Vec rhs = Vec::Zero(k + 1);
      rhs(k) = 1.0;
      w = lstsq(kkt, rhs).col(0).head(k);
    }
    for (int j = 0; j < k; ++j) W(i, nb[j]) = w(j);
    if (neighbors) (*neighbors)[i] = nb;
  }
  return W;
}

Mat lle_embedding(const Mat& W, int d) {
  const int s = static_cast<int>(W.rows());
  if (d < 1 || d > s - 1) throw ConfigError("LLE embedding dimension must satisfy 1 <= d < s");
  const Mat IW = Mat::Identity(s, s) - W;
  const Mat M = IW.transpose() * IW;
  // Orthonormal complement of the constant vector.
  Eigen::HouseholderQR<Mat> qr(Mat::Ones(s, 1));
  const Mat B = (qr.householderQ() * Mat::Identity(s, s)).rightCols(s - 1);
  Eigen::SelfAdjointEigenSolver<Mat> eig(B.transpose() * M * B);
  Mat Y = std::sqrt(static_cast<double>(s)) * (B * eig.eigenvectors().leftCols(d)).transpose();
  for (int r = 0; r < d; ++r) {
    Eigen::Index idx = 0;
    Y.row(r).cwiseAbs().maxCoeff(&idx);
    if (Y(r, idx) < 0.0) Y.row(r) *= -1.0;
  }
  return Y;
}

LleModel lle_fit(const Mat& U, const std::vector<Mat3>& params, const LleOptions& options) {
  const int s = static_cast<int>(U.cols());
  if (static_cast<int>(params.size()) != s) throw ConfigError("LLE parameters must align with snapshots");
  if (options.d > options.k) throw ConfigError("LLE requires d <= k");
  LleModel m;
  m.W = lle_weights(U, options.k, options.reg, &m.neighbors);
  m.Y = lle_embedding(m.W, options.d);
  const int dbar = options.d_bar > 0 ? options.d_bar : s;
  if (dbar > s) throw ConfigError("LLE intermediate dimension exceeds s");
  m.phibar = pod_fit(U, std::min<int>(dbar, static_cast<int>(std::min(U.rows(), U.cols())))).psi;
  m.Ybar = m.phibar.transpose() * U;
  m.params = params;
  return m;
}

std::vector<int> nearest_params(const std::vector<Mat3>& params, const Mat3& query, int N) {
  Vec dist(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) dist(i) = (params[i] - query).squaredNorm();
  return k_smallest(dist, N);
}

LocalChart fit_chart(const Mat& Ybar_N, const Mat& Y_N) {
  const Eigen::Index d = Y_N.rows();
  const Vec ybar_mean = Ybar_N.rowwise().mean();
  const Vec y_mean = Y_N.rowwise().mean();
  const Mat Yc = Y_N.colwise() - y_mean;
  const Mat Ybc = Ybar_N.colwise() - ybar_mean;
  Mat G = Yc * Yc.transpose();
  LocalChart chart;
  Eigen::SelfAdjointEigenSolver<Mat> eig(G, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * top)) {
    G.diagonal().array() += 1e-8 * (top > 0.0 ? G.trace() / d : 1.0);
    chart.ridge_applied = true;
  }
  chart.phitilde = G.ldlt().solve(Yc * Ybc.transpose()).transpose();
  chart.offset = ybar_mean - chart.phitilde * y_mean;
  return chart;
}

LocalChart local_chart(const LleModel& model, const Mat3& query, int N) {
  if (N < model.dim() + 1) throw ConfigError("chart neighbor count N must be at least d + 1");
  const std::vector<int> ids = nearest_params(model.params, query, N);
  Mat Ybar_N(model.Ybar.rows(), N), Y_N(model.dim(), N);
  for (int j = 0; j < N; ++j) {
    Ybar_N.col(j) = model.Ybar.col(ids[j]);
    Y_N.col(j) = model.Y.col(ids[j]);
  }
  LocalChart chart = fit_chart(Ybar_N, Y_N);
  chart.neighbor_ids = ids;
  return chart;
}

double chart_normal_residual(const LocalChart& chart, const Mat& Ybar_N, const Mat& Y_N) {
  const Mat R = (Ybar_N - chart.phitilde * Y_N).colwise() - chart.offset;
  Mat X(Y_N.rows() + 1, Y_N.cols());
  X << Y_N, Mat::Ones(1, Y_N.cols());
  return (R * X.transpose()).norm() / std::max(Ybar_N.norm() * X.norm(), 1e-300);
}

Vec embed_init(const LocalChart& chart, const Vec& ubar_prev) {
  return lstsq(chart.phitilde, ubar_prev - chart.offset).col(0);
}

}  // namespace hrom
