#include "hrom/material.hpp"

#include <cmath>

namespace hrom {

MaterialParams moduli_from_E_nu(double E, double nu, Variant variant) {
  if (!(E > 0.0)) throw ConfigError("Young's modulus must be positive");
  if (!(nu < 0.5)) throw ConfigError("Poisson ratio >= 0.5 reaches the incompressible limit");
  if (!(nu > 0.0)) throw ConfigError("Poisson ratio must be positive");
  return MaterialParams{E / (2.0 * (1.0 + nu)), E / (3.0 * (1.0 - 2.0 * nu)), variant};
}

namespace {

double checked_det(const Mat3& F) {
  const double J = F.determinant();
  if (!(J > 0.0)) throw InvertedElementError(-1, J);
  return J;
}

// Coefficient of F^{-T} in P.
double inverse_transpose_coefficient(const MaterialParams& p, double J) {
  const double vol = 0.5 * p.kappa * (J * J - 1.0);
  return p.variant == Variant::stabilized ? vol - p.mu : vol;
}

}  // namespace

double energy(const MaterialParams& p, const Mat3& F) {
  const double J = checked_det(F);
  const double lnJ = std::log(J);
  double W = 0.5 * p.mu * (F.squaredNorm() - 3.0) + 0.25 * p.kappa * (J * J - 1.0 - 2.0 * lnJ);
  if (p.variant == Variant::stabilized) W -= p.mu * lnJ;
  return W;
}

Mat3 stress(const MaterialParams& p, const Mat3& F) {
  const double J = checked_det(F);
  return p.mu * F + inverse_transpose_coefficient(p, J) * F.inverse().transpose();
}

StressTangent stress_tangent(const MaterialParams& p, const Mat3& F) {
  const double J = checked_det(F);
  const Mat3 Finv = F.inverse();
  const double c = inverse_transpose_coefficient(p, J);
  const double kJ2 = p.kappa * J * J;

  StressTangent out;
  out.P = p.mu * F + c * Finv.transpose();
  // A_iJkL = mu d_ik d_JL + kappa J^2 Finv_Ji Finv_Lk - c Finv_Jk Finv_Li
  for (int a = 0; a < 9; ++a) {
    const int i = kVoigtPairs[a][0];
    const int Jx = kVoigtPairs[a][1];
    for (int b = 0; b < 9; ++b) {
      const int k = kVoigtPairs[b][0];
      const int L = kVoigtPairs[b][1];
      double v = kJ2 * Finv(Jx, i) * Finv(L, k) - c * Finv(Jx, k) * Finv(L, i);
      if (i == k && Jx == L) v += p.mu;
      out.A(a, b) = v;
    }
  }
  return out;
}

Variant parse_variant(const std::string& name) {
  if (name == "literal") return Variant::literal;
  if (name == "stabilized") return Variant::stabilized;
  throw ConfigError("unknown material variant '" + name + "'");
}

std::string to_string(Variant v) { return v == Variant::literal ? "literal" : "stabilized"; }

}  // namespace hrom
