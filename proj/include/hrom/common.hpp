#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrom {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using SpMat = Eigen::SparseMatrix<double>;

// Fixed Voigt ordering for every 9-component object: (11,22,33,12,13,23,21,31,32).
inline constexpr std::array<std::array<int, 2>, 9> kVoigtPairs{
    {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}, {1, 0}, {2, 0}, {2, 1}}};
inline constexpr std::array<std::array<int, 3>, 3> kVoigtIndex{{{0, 3, 4}, {6, 1, 5}, {7, 8, 2}}};

constexpr int voigt(int i, int j) { return kVoigtIndex[i][j]; }

inline Vec9 to_voigt(const Mat3& m) {
  Vec9 v;
  for (int a = 0; a < 9; ++a) v(a) = m(kVoigtPairs[a][0], kVoigtPairs[a][1]);
  return v;
}

inline Mat3 from_voigt(const Vec9& v) {
  Mat3 m;
  for (int a = 0; a < 9; ++a) m(kVoigtPairs[a][0], kVoigtPairs[a][1]) = v(a);
  return m;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when det F <= 0 at a quadrature point. Solvers catch it to cut the load step.
class InvertedElementError : public Error {
 public:
  InvertedElementError(int element, double det)
      : Error("inverted element " + std::to_string(element) + " (det F = " + std::to_string(det) + ")"),
        element_(element) {}
  int element() const { return element_; }

 private:
  int element_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

// Counts operations whose cost scales with the full-order size (D or |E|).
// The hyperreduced online loop asserts this stays unchanged.
struct FullOrderCounter {
  static std::uint64_t& value() {
    thread_local std::uint64_t count = 0;
    return count;
  }
  static void bump() { ++value(); }
};

}  // namespace hrom
