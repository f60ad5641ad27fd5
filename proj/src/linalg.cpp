#include "hrom/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>

namespace hrom {

ThinSvd thin_svd(const Mat& A) {
  if (A.rows() == 0 || A.cols() == 0) return {Mat(A.rows(), 0), Vec(0)};
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU);
  return {svd.matrixU(), svd.singularValues()};
}

int numerical_rank(const Vec& sigma, double tol) {
  if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
  int r = 0;
  while (r < sigma.size() && sigma(r) > tol * sigma(0)) ++r;
  return r;
}

Mat lstsq(const Mat& A, const Mat& B) {
  if (A.cols() == 0) return Mat(0, B.cols());
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  return cod.solve(B);
}

NnlsResult nnls(const Mat& A, const Vec& b, double tol, int max_iter) {
  const int n = static_cast<int>(A.cols());
  if (max_iter <= 0) max_iter = 3 * n + 30;
  NnlsResult out;
  out.x = Vec::Zero(n);
  std::vector<bool> passive(n, false);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff() * std::max(1.0, b.cwiseAbs().maxCoeff()));

  auto solve_passive = [&](const std::vector<int>& P) {
    Mat Ap(A.rows(), P.size());
    for (std::size_t j = 0; j < P.size(); ++j) Ap.col(j) = A.col(P[j]);
    return Vec(lstsq(Ap, b));
  };

  Vec w = A.transpose() * (b - A * out.x);
  while (out.iterations < max_iter) {
    int best = -1;
    double wmax = tol * scale;
    for (int j = 0; j < n; ++j)
      if (!passive[j] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[best] = true;
    ++out.iterations;

    for (;;) {
      std::vector<int> P;
      for (int j = 0; j < n; ++j)
        if (passive[j]) P.push_back(j);
      const Vec z = solve_passive(P);
      bool feasible = true;
      for (double v : z) feasible = feasible && v > 0.0;
      if (feasible) {
        out.x.setZero();
        for (std::size_t j = 0; j < P.size(); ++j) out.x(P[j]) = z(j);
        break;
      }
      // Step toward z until the first passive variable hits zero, then drop it.
      double alpha = 1.0;
      for (std::size_t j = 0; j < P.size(); ++j)
        if (z(j) <= 0.0) alpha = std::min(alpha, out.x(P[j]) / (out.x(P[j]) - z(j)));
      for (std::size_t j = 0; j < P.size(); ++j) {
        out.x(P[j]) += alpha * (z(j) - out.x(P[j]));
        if (out.x(P[j]) <= tol * std::max(1.0, out.x.cwiseAbs().maxCoeff())) {
          out.x(P[j]) = 0.0;
          passive[P[j]] = false;
        }
      }
      if (std::none_of(passive.begin(), passive.end(), [](bool p) { return p; })) break;
    }
    w = A.transpose() * (b - A * out.x);
  }
  out.residual = (A * out.x - b).norm();
  return out;
}

std::vector<int> k_smallest(const Vec& values, int k) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min<int>(k, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    return values(a) < values(b) || (values(a) == values(b) && a < b);
  });
  idx.resize(k);
  return idx;
}

}  // namespace hrom
