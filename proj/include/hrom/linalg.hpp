#pragma once

#include "hrom/common.hpp"

namespace hrom {

/// Thin SVD of A: left singular vectors (rows x min) and singular values, nonincreasing.
struct ThinSvd {
  Mat U;
  Vec sigma;
};
ThinSvd thin_svd(const Mat& A);

/// Numerical rank of a singular value list at relative threshold tol.
int numerical_rank(const Vec& sigma, double tol = 1e-12);

/// Minimum-norm least-squares solution of A X = B (complete orthogonal decomposition).
Mat lstsq(const Mat& A, const Mat& B);

struct NnlsResult {
  Vec x;
  double residual = 0.0;  // ||A x - b||
  int iterations = 0;
};

/// Lawson-Hanson active-set nonnegative least squares: min ||A x - b||, x >= 0.
NnlsResult nnls(const Mat& A, const Vec& b, double tol = 1e-10, int max_iter = 0);

/// Indices of the k smallest values, ties broken by index.
std::vector<int> k_smallest(const Vec& values, int k);

}  // namespace hrom
