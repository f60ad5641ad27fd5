#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "hrom/reduce.hpp"

namespace hrom {

enum class Method { pod, lpod, pm, lle };

Method parse_method(const std::string& name);
std::string to_string(Method m);

/// Parametrisation in force during one load step: ubar(y) = phibar * ybar(y), d ybar / dy = tangent(y).
/// POD, LPOD and LLE charts are affine (ybar = phitilde y + offset); the PM chart is quadratic.
class StepChart {
 public:
  static StepChart affine(Mat phitilde, Vec offset);
  static StepChart quadratic(const PmModel& model);

  bool is_affine() const { return pm_ == nullptr; }
  int dim() const;
  Vec ybar(const Vec& y) const;
  Mat tangent(const Vec& y) const;
  /// Starting coordinates reproducing the previous intermediate state as closely as the chart allows.
  Vec initial(const Vec& ybar_prev) const;

  const Mat& phitilde() const { return phitilde_; }
  const Vec& offset() const { return offset_; }

  int cluster = -1;
  std::vector<int> neighbor_ids;
  bool ridge_applied = false;

 private:
  Mat phitilde_;
  Vec offset_;
  const PmModel* pm_ = nullptr;
};

struct ReductionConfig {
  Method method = Method::lle;
  int d = 15;
  int d_bar = 0;       // LLE intermediate dimension; 0 = s
  int k = 0;           // LLE graph neighbors; 0 = max(d + 1, 12)
  int N = 0;           // chart neighbors; 0 = 2d
  double lle_reg = 1e-3;
  int n_clusters = 4;  // LPOD
  int overlap = 2;     // LPOD
  int d_tilde = 0;     // PM; 0 = d
  int pm_iters = 20;
  double pm_tol = 1e-8;
  std::uint64_t seed = 0;

  int resolved_k(int s) const;
  int resolved_N() const { return N > 0 ? N : 2 * d; }
  int resolved_d_tilde(int s) const;
};

/// Unified view of the four approximation spaces: an orthonormal intermediate basis phibar (D x dbar)
/// plus per-step charts in the dbar-dimensional intermediate coordinates.
class ApproximationSpace {
 public:
  virtual ~ApproximationSpace() = default;
  virtual Method method() const = 0;
  virtual const Mat& phibar() const = 0;
  virtual int dim() const = 0;
  virtual StepChart chart(const Mat3& Fbar, const Vec& ybar_prev) const = 0;

  int intermediate_dim() const { return static_cast<int>(phibar().cols()); }
  int full_dim() const { return static_cast<int>(phibar().rows()); }
};

class PodSpace final : public ApproximationSpace {
 public:
  explicit PodSpace(PodBasis basis) : basis_(std::move(basis)) {}
  Method method() const override { return Method::pod; }
  const Mat& phibar() const override { return basis_.psi; }
  int dim() const override { return static_cast<int>(basis_.psi.cols()); }
  StepChart chart(const Mat3& Fbar, const Vec& ybar_prev) const override;
  const PodBasis& basis() const { return basis_; }

 private:
  PodBasis basis_;
};

class LpodSpace final : public ApproximationSpace {
 public:
  explicit LpodSpace(LpodModel model) : model_(std::move(model)) {}
  Method method() const override { return Method::lpod; }
  const Mat& phibar() const override { return model_.phibar; }
  int dim() const override { return static_cast<int>(model_.local_bases.front().cols()); }
  StepChart chart(const Mat3& Fbar, const Vec& ybar_prev) const override;
  const LpodModel& model() const { return model_; }

 private:
  LpodModel model_;
};

class PmSpace final : public ApproximationSpace {
 public:
  explicit PmSpace(PmModel model);
  Method method() const override { return Method::pm; }
  const Mat& phibar() const override { return phibar_; }
  int dim() const override { return model_.dim(); }
  StepChart chart(const Mat3& Fbar, const Vec& ybar_prev) const override;
  const PmModel& model() const { return model_; }

 private:
  PmModel model_;
  Mat phibar_;  // [Vbar Vtilde]
};

class LleSpace final : public ApproximationSpace {
 public:
  LleSpace(LleModel model, int N) : model_(std::move(model)), N_(N) {}
  Method method() const override { return Method::lle; }
  const Mat& phibar() const override { return model_.phibar; }
  int dim() const override { return model_.dim(); }
  StepChart chart(const Mat3& Fbar, const Vec& ybar_prev) const override;
  const LleModel& model() const { return model_; }
  int neighbors() const { return N_; }

 private:
  LleModel model_;
  int N_;
};

std::unique_ptr<ApproximationSpace> build_space(const SnapshotSet& snapshots, const ReductionConfig& config);

}  // namespace hrom
