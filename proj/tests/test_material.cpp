#include <gtest/gtest.h>

#include <random>

#include "hrom/material.hpp"
#include "test_support.hpp"

using namespace hrom;
using hrom::test_util::random_deformation;

namespace {

Mat3 fd_stress(const MaterialParams& p, const Mat3& F, double h = 1e-6) {
  Mat3 P;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Mat3 Fp = F, Fm = F;
      Fp(i, j) += h;
      Fm(i, j) -= h;
      P(i, j) = (energy(p, Fp) - energy(p, Fm)) / (2 * h);
    }
  return P;
}

Mat9 fd_tangent(const MaterialParams& p, const Mat3& F, double h = 1e-6) {
  Mat9 A;
  for (int b = 0; b < 9; ++b) {
    Mat3 Fp = F, Fm = F;
    Fp(kVoigtPairs[b][0], kVoigtPairs[b][1]) += h;
    Fm(kVoigtPairs[b][0], kVoigtPairs[b][1]) -= h;
    A.col(b) = (to_voigt(stress(p, Fp)) - to_voigt(stress(p, Fm))) / (2 * h);
  }
  return A;
}

}  // namespace

TEST(Moduli, StandardConversion) {
  const MaterialParams m = moduli_from_E_nu(1000.0, 0.2);
  EXPECT_NEAR(m.mu, 1000.0 / 2.4, 1e-12);
  EXPECT_NEAR(m.kappa, 1000.0 / 1.8, 1e-12);
  const MaterialParams i = moduli_from_E_nu(3000.0, 0.2);
  EXPECT_NEAR(i.mu, 1250.0, 1e-12);
  EXPECT_NEAR(i.kappa, 5000.0 / 3.0, 1e-12);
}

TEST(Moduli, RejectsIncompressibleLimit) {
  EXPECT_THROW(moduli_from_E_nu(1000.0, 0.5), ConfigError);
  EXPECT_THROW(moduli_from_E_nu(-1.0, 0.2), ConfigError);
}

TEST(Moduli, ReferenceTangentIsIsotropic) {
  // Brute-force comparison with lam d_ij d_kl + mu (d_ik d_jl + d_il d_jk). For this potential the
  // volumetric coefficient at F = I is kappa itself.
  const MaterialParams p = moduli_from_E_nu(1000.0, 0.2);
  const Mat9 A = stress_tangent(p, Mat3::Identity()).A;
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) {
      const int i = kVoigtPairs[a][0], j = kVoigtPairs[a][1], k = kVoigtPairs[b][0], l = kVoigtPairs[b][1];
      const double iso = p.kappa * d(i, j) * d(k, l) + p.mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
      EXPECT_NEAR(A(a, b), iso, 1e-10);
    }
}

TEST(Energy, ZeroAtIdentityBothVariants) {
  for (Variant v : {Variant::literal, Variant::stabilized})
    EXPECT_DOUBLE_EQ(energy(moduli_from_E_nu(1000.0, 0.2, v), Mat3::Identity()), 0.0);
}

TEST(Energy, UniaxialStretchMatchesPathIntegralOfStress) {
  const MaterialParams p{416.67, 555.56, Variant::stabilized};
  const Mat3 F = Eigen::Vector3d(1.1, 1.0, 1.0).asDiagonal();
  const Mat3 dF = F - Mat3::Identity();
  // 5-point Gauss-Legendre on t in [0,1] of P(I + t dF) : dF.
  const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                       0.2369268850561891};
  double W = 0.0;
  for (int q = 0; q < 5; ++q) {
    const double t = 0.5 * (x[q] + 1.0);
    W += 0.5 * w[q] * stress(p, Mat3::Identity() + t * dF).cwiseProduct(dF).sum();
  }
  EXPECT_NEAR(energy(p, F), W, 1e-6 * std::abs(W));
}

TEST(Energy, FrameInvariant) {
  std::mt19937_64 rng(11);
  const MaterialParams p = moduli_from_E_nu(1000.0, 0.2);
  for (int i = 0; i < 20; ++i) {
    const Mat3 F = random_deformation(rng);
    const Mat3 Q = hrom::test_util::random_rotation(rng);
    EXPECT_NEAR(energy(p, Q * F), energy(p, F), 1e-9 * std::max(1.0, std::abs(energy(p, F))));
  }
}

TEST(Stress, ReferenceValues) {
  const MaterialParams s = moduli_from_E_nu(1000.0, 0.2, Variant::stabilized);
  EXPECT_EQ(stress(s, Mat3::Identity()), Mat3::Zero());
  const MaterialParams l = moduli_from_E_nu(1000.0, 0.2, Variant::literal);
  EXPECT_EQ(stress(l, Mat3::Identity()), Mat3(l.mu * Mat3::Identity()));
  EXPECT_LT((fd_stress(l, Mat3::Identity()) - l.mu * Mat3::Identity()).norm(), 1e-6 * l.mu);
}

TEST(Stress, MatchesEnergyDerivative) {
  std::mt19937_64 rng(13);
  for (Variant v : {Variant::literal, Variant::stabilized}) {
    const MaterialParams p = moduli_from_E_nu(1000.0, 0.2, v);
    for (int i = 0; i < 50; ++i) {
      const Mat3 F = random_deformation(rng);
      EXPECT_LT(hrom::test_util::rel_error(fd_stress(p, F), stress(p, F)), 1e-6);
    }
  }
}

TEST(Tangent, MatchesStressDerivativeAndIsSymmetric) {
  std::mt19937_64 rng(17);
  for (Variant v : {Variant::literal, Variant::stabilized}) {
    const MaterialParams p = moduli_from_E_nu(3000.0, 0.2, v);
    for (int i = 0; i < 50; ++i) {
      const Mat3 F = random_deformation(rng);
      const StressTangent st = stress_tangent(p, F);
      EXPECT_LT(hrom::test_util::rel_error(fd_tangent(p, F), st.A), 1e-6);
      EXPECT_LT((st.A - st.A.transpose()).norm(), 1e-12 * st.A.norm());
      EXPECT_LT((st.P - stress(p, F)).norm(), 1e-12 * st.P.norm());
    }
  }
}

TEST(Tangent, InvertedDeformationThrows) {
  const MaterialParams p = moduli_from_E_nu(1000.0, 0.2);
  const Mat3 F = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  EXPECT_THROW(stress_tangent(p, F), InvertedElementError);
  EXPECT_THROW(energy(p, F), InvertedElementError);
}

TEST(Variant, ParseRoundTrip) {
  EXPECT_EQ(parse_variant(to_string(Variant::literal)), Variant::literal);
  EXPECT_EQ(parse_variant("stabilized"), Variant::stabilized);
  EXPECT_THROW(parse_variant("mooney"), ConfigError);
}
