#pragma once

#include "hrom/common.hpp"

namespace hrom {

/// Which neo-Hookean potential to evaluate.
///  - literal:    W = mu/2 (Ic - 3) + kappa/4 (J^2 - 1 - 2 ln J), so P(I) = mu I.
///  - stabilized: adds -mu ln J, giving a stress-free reference state.
enum class Variant { literal, stabilized };

struct MaterialParams {
  double mu = 0.0;     // shear modulus [N/mm^2]
  double kappa = 0.0;  // bulk modulus [N/mm^2]
  Variant variant = Variant::stabilized;
};

/// First Piola-Kirchhoff stress and nominal tangent A_iJkL = dP_iJ / dF_kL.
/// A is stored as a 9x9 matrix indexed by (voigt(i,J), voigt(k,L)).
struct StressTangent {
  Mat3 P;
  Mat9 A;
};

/// mu = E / (2(1+nu)), kappa = E / (3(1-2nu)). Throws ConfigError outside E > 0, 0 < nu < 0.5.
MaterialParams moduli_from_E_nu(double E, double nu, Variant variant = Variant::stabilized);

/// Throws InvertedElementError(-1, det) when det F <= 0.
double energy(const MaterialParams& params, const Mat3& F);
Mat3 stress(const MaterialParams& params, const Mat3& F);
StressTangent stress_tangent(const MaterialParams& params, const Mat3& F);

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

}  // namespace hrom
