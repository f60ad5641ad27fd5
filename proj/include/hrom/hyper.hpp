#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hrom/galerkin.hpp"

namespace hrom {

enum class HyperMethod { deim, lehm, lspg };

HyperMethod parse_hyper_method(const std::string& name);
std::string to_string(HyperMethod m);

/// Greedy DEIM point selection on the columns of Omega (argmax over |.|, lowest index on ties).
std::vector<int> deim_indices(const Mat& Omega);

struct MagicPoints {
  std::vector<int> indices;
  Mat Omega;              // D x m leading left singular vectors of G
  Vec singular_values;    // all singular values of G
};

MagicPoints select_magic_points(const Mat& G, int m);

/// Reduced integration domain: elements whose residual reaches a magic DOF and the free DOFs they touch.
struct ReducedDomain {
  std::vector<int> magic;                     // m global free-DOF ids, selection order
  std::vector<int> elements;                  // E_m, ascending
  std::vector<int> dofs;                      // I_m, ascending
  std::vector<std::array<int, 24>> local;     // per E_m element: local dof -> row of dofs, -1 if anchored
  std::vector<std::vector<std::pair<int, int>>> rows;  // per E_m element: (local dof, magic j)
  std::vector<int> magic_rows;                // position of magic[j] within dofs

  int num_magic() const { return static_cast<int>(magic.size()); }
};

ReducedDomain build_reduced_domain(const RveProblem& problem, std::vector<int> magic);

/// Residual reconstruction matrices M (D x m).
Mat deim_reconstruction(const Mat& Omega, const std::vector<int>& magic);
Mat lehm_reconstruction(const Mat& G, const std::vector<int>& magic, double ridge, double* condition = nullptr);
/// Default LEHM ridge 1e-10 * trace(G_m G_m^T) / m.
double lehm_default_ridge(const Mat& G, const std::vector<int>& magic);

struct XiWeights {
  std::vector<int> elements;
  Vec xi;                 // Pbar ~ (1/V) sum_e xi_e int_e P dV, so xi = 1 is exact integration
  double residual = 0.0;  // || Pe xi - Pbar ||
};

/// Nonnegative least squares fit of the element weights; Pe is 9s x |elements|, Pbar has length 9s.
XiWeights fit_xi(const Mat& Pe, const Vec& Pbar, std::vector<int> elements);

/// Columns (1/V) int_e P dV (Voigt, stacked per snapshot) for the given elements, and the stacked Pbar.
std::pair<Mat, Vec> xi_training_data(const RveProblem& problem, const std::vector<int>& elements,
                                     const std::vector<FullState>& states);

struct HyperConfig {
  HyperMethod method = HyperMethod::lehm;
  int m = 100;
  double ridge_scale = 1e-10;
};

struct HyperModel {
  HyperMethod method = HyperMethod::lehm;
  ReducedDomain domain;
  Mat phibar_m;     // rows I_m of phibar
  Mat left;         // phibar^T M (dbar x m); empty for LSPG
  XiWeights xi;
  double ridge = 0.0;
  double condition = 0.0;  // cond(G_m G_m^T + ridge I) for LEHM, cond(Z^T Omega) for DEIM
  std::vector<std::string> warnings;
};

/// Offline stage: magic points from the residual snapshots G, reconstruction left factor, xi from snapshots.
HyperModel train_hyper(const RveProblem& problem, const ApproximationSpace& space, const Mat& G,
                       const SnapshotSet& snapshots, const HyperConfig& config);
HyperModel make_hyper_model(const RveProblem& problem, const ApproximationSpace& space, HyperMethod method,
                            std::vector<int> magic, const Mat& M, XiWeights xi);

/// Magic rows of g, K * basis_m and (optionally) L, integrated over E_m only. basis_m has one row per I_m dof
/// (phibar_m, or phibar_m T to get the chart-projected stiffness directly).
struct HyperSystem {
  Vec g_m;
  Mat KPhi;  // m x basis_m.cols()
  Mat L_m;   // m x 9
};

HyperSystem hyper_assemble(const RveProblem& problem, const ReducedDomain& domain, const Vec& u_m, const Mat3& Fbar,
                           const Mat& basis_m, bool with_L = false);

/// Newton increment of the DEIM-like schemes: (T^T left KPhi T) dy = -T^T left g_m.
Vec hyper_step_deimlike(const Mat& left, const Vec& g_m, const Mat& KPhi, const Mat& T);
/// Least-squares increment argmin || KPhi T dy + g_m || (paper_sign: argmin || KPhi T dy - g_m ||).
Vec hyper_step_lspg(const Vec& g_m, const Mat& KPhi, const Mat& T, bool paper_sign = false);

struct HyperOptions {
  double tol = 1e-8;  // max|g_hred| (DEIM-like) or max|J dy| (LSPG)
  int max_iter = 25;
  int max_bisections = 5;
  bool lspg_paper_sign = false;
};

struct HyperState {
  Vec y;
  Vec ybar;
  Vec u_m;  // fluctuation on I_m
  Mat3 Fbar = Mat3::Identity();
};

HyperState initial_hyper_state(const ApproximationSpace& space, const HyperModel& model);

struct HyperResult {
  HyperState state;
  bool converged = false;
  std::string failure;
  std::vector<IterationRecord> trace;  // full_residual = -1 (never available online)
  Timings timings;
  int iterations = 0;
  StepChart chart;
  std::uint64_t full_order_ops = 0;  // O(D) or O(|E|) operations performed online
};

HyperResult hyper_newton(const RveProblem& problem, const ApproximationSpace& space, const HyperModel& model,
                         const HyperState& start, const Mat3& Fbar_target, const HyperOptions& options = {});

/// Pbar and Abar from the xi-weighted E_m integrals and the hyperreduced sensitivity.
HomogenizedResponse hyper_homogenize(const RveProblem& problem, const HyperModel& model, const HyperResult& result,
                                     Timings* timings = nullptr);

}  // namespace hrom
