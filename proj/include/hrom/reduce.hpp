#pragma once

#include <cstdint>
#include <vector>

#include "hrom/common.hpp"

namespace hrom {

/// Converged fluctuation snapshots U (D x s) and their load parameters.
struct SnapshotSet {
  Mat U;
  std::vector<Mat3> params;
  std::vector<int> path_id;
  std::vector<int> step_id;

  int size() const { return static_cast<int>(U.cols()); }
  void append(const Vec& u, const Mat3& Fbar, int path, int step);
};

struct PodBasis {
  Mat psi;             // D x d, orthonormal
  Vec singular_values; // all min(D, s) values
  int rank = 0;        // numerical rank of U; columns beyond it are flagged
};

PodBasis pod_fit(const Mat& U, int d);

/// Localized POD stored in the coordinates of a lossless global basis phibar (D x dbar).
struct LpodModel {
  Mat phibar;                      // D x dbar
  Mat centroids;                   // dbar x k
  std::vector<Mat> local_bases;    // dbar x d each, orthonormal
  std::vector<int> assignment;     // cluster of every snapshot
  std::uint64_t seed = 0;
  int overlap = 2;

  int clusters() const { return static_cast<int>(centroids.cols()); }
};

LpodModel lpod_fit(const Mat& U, int n_clusters, int d_local, std::uint64_t seed, int overlap = 2);
/// Cluster whose centroid is nearest to the intermediate coordinates ybar.
int lpod_select(const LpodModel& model, const Vec& ybar);
/// Full-space basis phibar * local_bases[cluster].
PodBasis lpod_basis(const LpodModel& model, int cluster);

/// Quadratic manifold u = Vbar y + Vtilde Xi vec(y (x) y).
struct PmModel {
  Mat Vbar;    // D x d
  Mat Vtilde;  // D x dt
  Mat Xi;      // dt x d^2
  Mat Y;       // d x s embeddings
  std::vector<double> objective;  // fit error after each alternation
  std::vector<int> flagged;       // snapshots whose inner Gauss-Newton failed to improve

  int dim() const { return static_cast<int>(Vbar.cols()); }
};

/// vec(y (x) y), index a*d + b.
Vec kron_square(const Vec& y);
/// d^2 x d Jacobian of kron_square.
Mat kron_square_jacobian(const Vec& y);

PmModel pm_fit(const Mat& U, int d, int d_tilde, int max_iters = 20, double tol = 1e-8);
Vec pm_reconstruct(const PmModel& model, const Vec& y);
Mat pm_tangent(const PmModel& model, const Vec& y);

struct LleModel {
  std::vector<std::vector<int>> neighbors;  // k-NN graph in R^D
  Mat W;        // s x s reconstruction weights
  Mat Y;        // d x s embedding
  Mat phibar;   // D x dbar
  Mat Ybar;     // dbar x s
  std::vector<Mat3> params;

  int dim() const { return static_cast<int>(Y.rows()); }
  int snapshots() const { return static_cast<int>(Y.cols()); }
};

struct LleOptions {
  int k = 10;
  int d = 9;
  int d_bar = 0;       // 0 = s (lossless)
  double reg = 1e-3;   // ridge = reg * trace(Gram); 0 solves the constrained system exactly
};

/// Reconstruction weights of every snapshot from its k nearest neighbors (rows sum to one).
Mat lle_weights(const Mat& U, int k, double reg, std::vector<std::vector<int>>* neighbors = nullptr);
/// d-dimensional embedding from the bottom of (I-W)^T(I-W), constant mode removed, unit covariance.
Mat lle_embedding(const Mat& W, int d);
LleModel lle_fit(const Mat& U, const std::vector<Mat3>& params, const LleOptions& options);

/// Affine chart ubar = phitilde y + offset in the intermediate coordinates.
struct LocalChart {
  Mat phitilde;  // dbar x d
  Vec offset;    // dbar
  std::vector<int> neighbor_ids;
  bool ridge_applied = false;
};

/// Neighbors by Frobenius distance on Fbar, ties by index.
std::vector<int> nearest_params(const std::vector<Mat3>& params, const Mat3& query, int N);
/// Centered least-squares chart through the given columns: Ybar_N ~ phitilde Y_N + offset.
LocalChart fit_chart(const Mat& Ybar_N, const Mat& Y_N);
LocalChart local_chart(const LleModel& model, const Mat3& query, int N);
/// Relative residual of the chart normal equations over its neighbors.
double chart_normal_residual(const LocalChart& chart, const Mat& Ybar_N, const Mat& Y_N);
/// argmin_y || phitilde y + offset - ubar_prev ||.
Vec embed_init(const LocalChart& chart, const Vec& ubar_prev);

}  // namespace hrom
