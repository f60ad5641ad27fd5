#pragma once

#include <Eigen/SparseCholesky>

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "hrom/material.hpp"
#include "hrom/mesh.hpp"
#include "hrom/timing.hpp"

namespace hrom {

using MaterialTable = std::map<int, MaterialParams>;

/// Matrix E=1000, inclusions E=3000, both nu=0.2.
MaterialTable default_materials(Variant variant = Variant::stabilized);

using ElementDofs = std::array<int, 24>;  // local 3*k+alpha -> free index or PeriodicMap::kAnchored
using NodalMatrix = Eigen::Matrix<double, 8, 3>;

/// Mesh, periodic map, materials and the stiffness sparsity pattern. Immutable once built.
class RveProblem {
 public:
  RveProblem(Mesh mesh, MaterialTable materials);

  const Mesh& mesh() const { return mesh_; }
  const PeriodicMap& periodic() const { return periodic_; }
  int num_dofs() const { return periodic_.num_free(); }
  int num_elements() const { return mesh_.num_elements(); }
  double volume() const { return mesh_.volume; }
  const ElementDofs& element_dofs(int e) const { return element_dofs_[e]; }
  const MaterialParams& element_material(int e) const { return *element_params_[e]; }

  /// Full symmetric pattern of K with all values zero.
  const SpMat& stiffness_pattern() const { return pattern_; }
  /// Offsets into the value array of the pattern for each of the 24x24 local entries (-1 if anchored).
  const std::array<int, 576>& element_slots(int e) const { return slots_[e]; }

  /// Nodal fluctuations of element e read from a free-DOF vector.
  NodalMatrix element_fluctuation(int e, const Vec& u) const;

 private:
  Mesh mesh_;
  MaterialTable materials_;
  PeriodicMap periodic_;
  std::vector<ElementDofs> element_dofs_;
  std::vector<const MaterialParams*> element_params_;
  SpMat pattern_;
  std::vector<std::array<int, 576>> slots_;
};

struct FullState {
  Vec u;       // free fluctuation DOFs
  Mat3 Fbar = Mat3::Identity();
};

/// Nodal total displacement (Fbar - I) X + scatter(u).
Vec total_displacement(const RveProblem& problem, const FullState& state);

struct GaussState {
  Mat3 F;
  Mat3 P;
  Mat9 A;
};

/// Deformation gradient, stress and (optionally) tangent at the 8 Gauss points of element e.
/// Throws InvertedElementError when det F <= 0.
void evaluate_element(const RveProblem& problem, int e, const NodalMatrix& ue, const Mat3& Fbar,
                      bool with_tangent, std::array<GaussState, 8>& out);

using ElementVector = Eigen::Matrix<double, 24, 1>;
using ElementMatrix = Eigen::Matrix<double, 24, 24>;
using ElementSensitivity = Eigen::Matrix<double, 24, 9>;

ElementVector element_residual(const RveProblem& problem, int e, const std::array<GaussState, 8>& gs);
ElementMatrix element_stiffness(const RveProblem& problem, int e, const std::array<GaussState, 8>& gs);
ElementSensitivity element_sensitivity(const RveProblem& problem, int e, const std::array<GaussState, 8>& gs);

struct AssembledSystem {
  Vec g;
  SpMat K;
};

/// Residual and stiffness over all elements or over `subset`.
AssembledSystem assemble(const RveProblem& problem, const FullState& state, std::span<const int> subset = {});
/// Sensitivity coefficient L (D x 9), columns in Voigt order.
Mat assemble_L(const RveProblem& problem, const FullState& state, std::span<const int> subset = {});
/// Stored energy integrated over the RVE.
double total_energy(const RveProblem& problem, const FullState& state);

/// Sparse LDL^T with the symbolic analysis done once.
class SparseFactorization {
 public:
  void factorize(const SpMat& K);
  Vec solve(const Vec& rhs) const;
  Mat solve(const Mat& rhs) const;

 private:
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  Eigen::Index size_ = 0;
};

struct NewtonOptions {
  double tol = 1e-8;  // on max |g|
  int max_iter = 25;
  int load_steps = 1;
  int max_bisections = 5;
};

struct IterationRecord {
  int step = 0;
  int iteration = 0;
  double residual = 0.0;       // convergence measure: max |g| (FOM) or the reduced criterion (ROM)
  double full_residual = 0.0;  // max |g| when available, else -1
  double seconds = 0.0;
};

struct NewtonResult {
  FullState state;
  bool converged = false;
  std::string failure;
  std::vector<IterationRecord> trace;
  AssembledSystem last;  // system assembled at the returned state
  Timings timings;
  int iterations = 0;
};

/// Load-stepped Newton-Raphson: Fbar moves linearly from start.Fbar to Fbar_target. Inverted elements
/// halve the current increment up to max_bisections times.
NewtonResult newton_solve(const RveProblem& problem, const FullState& start, const Mat3& Fbar_target,
                          const NewtonOptions& options = {});

struct HomogenizedResponse {
  Mat3 Pbar = Mat3::Zero();
  Mat9 Abar = Mat9::Zero();
  Mat S;  // D x 9 (full order) or d x 9 (reduced)
};

/// Volume-averaged stress and Voigt tangent (1/V) sum_e int P dV, (1/V) sum_e int A dV.
std::pair<Mat3, Mat9> volume_averages(const RveProblem& problem, const FullState& state);

/// Pbar and consistent Abar = Abar^v - (1/V) L^T S with K S = L.
HomogenizedResponse homogenize(const RveProblem& problem, const FullState& state, const SpMat& K, const Mat& L,
                               Timings* timings = nullptr);
HomogenizedResponse homogenize(const RveProblem& problem, const FullState& state, Timings* timings = nullptr);

}  // namespace hrom
