#pragma once

#include "hrom/fem.hpp"
#include "hrom/space.hpp"

namespace hrom {

struct RomOptions {
  double tol = 1e-8;  // on max |g_red| (or the hyperreduced criterion)
  int max_iter = 25;
  int max_bisections = 5;
};

/// Reduced state: chart coordinates y and the intermediate coordinates they map to.
struct RomState {
  Vec y;
  Vec ybar;
  Mat3 Fbar = Mat3::Identity();
};

RomState initial_rom_state(const ApproximationSpace& space);

struct ResidualRecord {
  int path = 0;
  int step = 0;
  int iteration = 0;
  bool converged = false;
};

/// Residual snapshots (gathered free-DOF vectors) from every Galerkin Newton iterate.
struct ResidualSet {
  std::vector<Vec> columns;
  std::vector<ResidualRecord> meta;

  void append(const Vec& g, const ResidualRecord& record);
  Mat matrix() const;
  int size() const { return static_cast<int>(columns.size()); }
};

struct RomResult {
  RomState state;
  bool converged = false;
  std::string failure;
  std::vector<IterationRecord> trace;  // residual = max|g_red|, full_residual = max|g|
  Timings timings;
  int iterations = 0;
  StepChart chart;  // chart of the last (sub)step
};

/// Galerkin-reduced Newton-Raphson from `start` to Fbar_target. Inverted elements halve the increment;
/// each (sub)step requests a fresh chart from the space at its own Fbar.
RomResult reduced_newton(const RveProblem& problem, const ApproximationSpace& space, const RomState& start,
                         const Mat3& Fbar_target, const RomOptions& options = {}, ResidualSet* record = nullptr,
                         int path = 0, int step = 0);

/// Full-order fluctuation phibar * ybar.
Vec reconstruct(const ApproximationSpace& space, const RomState& state);

/// Pbar by full volume averaging; Abar = Abar^v - (1/V) L_red^T S_red with K_red S_red = L_red.
HomogenizedResponse reduced_homogenize(const RveProblem& problem, const FullState& state, const Mat& phi,
                                       const SpMat& K, const Mat& L, Timings* timings = nullptr);
HomogenizedResponse reduced_homogenize(const RveProblem& problem, const ApproximationSpace& space,
                                       const RomResult& result, Timings* timings = nullptr);

}  // namespace hrom
