#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hrom/hyper.hpp"

namespace hrom {

/// Random load path: each step adds dlp * N_lp (fixed per path) + dls * N_ls (fresh per step) to Fbar.
struct LoadPath {
  Mat3 N_lp = Mat3::Zero();
  std::vector<Mat3> N_ls;
  double dlp = 0.03;
  double dls = 0.015;

  int steps() const { return static_cast<int>(N_ls.size()); }
  /// Fbar after steps 1..n, starting from the identity.
  std::vector<Mat3> targets() const;
};

/// Directions have standard normal entries scaled to unit Frobenius norm; a step whose Fbar would have
/// det <= 0 is resampled (at most 100 times).
std::vector<LoadPath> gen_load_paths(std::uint64_t seed, int n_paths, int n_steps, double dlp = 0.03,
                                     double dls = 0.015);

/// Mean of ||a_i - b_i|| / ||b_i|| in percent.
double mean_relative_error_percent(const std::vector<Vec>& approx, const std::vector<Vec>& reference);

/// Eigenvalues of U^T U, descending.
Vec eig_decay(const Mat& U);

struct CorrelationCurve {
  std::vector<double> r;      // radii with a nonzero pair count
  std::vector<double> C;      // 2 / (s (s-1)) #{i < j : |u_i - u_j| < r}
  std::vector<double> slope;  // centred d log C / d log r at r[1..n-2]
};

CorrelationCurve correlation_dimension(const Mat& U, const std::vector<double>& r_grid);

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results must be written to per-index slots.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

struct StateRecord {
  int path = 0;
  int step = 0;
  bool converged = false;
  Vec u;                      // full-order fluctuation (reconstructed offline for reduced runs)
  Mat3 Pbar = Mat3::Zero();
  Mat9 Abar = Mat9::Zero();
  int iterations = 0;
  double seconds = 0.0;       // online wall time of the solve plus homogenization
  std::string failure;
};

struct CampaignResult {
  std::vector<StateRecord> states;  // path-major, step-minor
  Timings timings;
  std::vector<double> iteration_seconds;
  std::uint64_t full_order_ops = 0;

  int diverged() const;
  double total_seconds() const;
  /// Converged fluctuations of paths [0, n_paths) with their load parameters; throws if any diverged.
  SnapshotSet snapshots(const std::vector<LoadPath>& paths, int n_paths) const;
};

CampaignResult run_fom_campaign(const RveProblem& problem, const std::vector<LoadPath>& paths,
                                const NewtonOptions& options = {}, int threads = 1);
CampaignResult run_galerkin_campaign(const RveProblem& problem, const ApproximationSpace& space,
                                     const std::vector<LoadPath>& paths, const RomOptions& options = {},
                                     ResidualSet* residuals = nullptr, int threads = 1);
CampaignResult run_hyper_campaign(const RveProblem& problem, const ApproximationSpace& space, const HyperModel& model,
                                  const std::vector<LoadPath>& paths, const HyperOptions& options = {},
                                  int threads = 1);

struct CampaignErrors {
  int total = 0;
  int diverged = 0;
  double error_u = std::numeric_limits<double>::quiet_NaN();  // percent; NaN when any state diverged
  double error_P = std::numeric_limits<double>::quiet_NaN();
  double error_u_converged = std::numeric_limits<double>::quiet_NaN();  // over converged states only
  double error_P_converged = std::numeric_limits<double>::quiet_NaN();
};

CampaignErrors campaign_errors(const CampaignResult& rom, const CampaignResult& fom);

struct SweepCell {
  Method method = Method::lle;
  HyperMethod hyper = HyperMethod::lehm;
  int d = 0;
  int m = 0;
  std::string failure;  // training failure, if any
  CampaignErrors errors;
  Timings timings;
  double online_seconds = 0.0;
  double mean_iteration_seconds = 0.0;
};

struct SweepConfig {
  std::vector<Method> methods{Method::lle};
  std::vector<HyperMethod> hypers{HyperMethod::lehm};
  std::vector<int> ds{15};
  std::vector<int> ms{100};
  ReductionConfig reduction;
  HyperConfig hyper;
  RomOptions rom;
  HyperOptions hyper_options;
  int n_training = 20;
  int threads = 1;
};

/// Trains every (method, d) space and (hyper, m) model on the first n_training paths and validates on all paths.
std::vector<SweepCell> sweep(const RveProblem& problem, const std::vector<LoadPath>& paths, const CampaignResult& fom,
                             const SweepConfig& config);

/// Deterministic report (no timings): one row per cell.
std::string sweep_csv(const std::vector<SweepCell>& cells);
/// Runtime breakdown per cell and category, plus error vs relative runtime for Pareto plots.
std::string sweep_timing_csv(const std::vector<SweepCell>& cells, double fom_seconds);

}  // namespace hrom
