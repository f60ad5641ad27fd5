#include "hrom/space.hpp"

#include "hrom/linalg.hpp"

namespace hrom {

Method parse_method(const std::string& name) {
  if (name == "pod") return Method::pod;
  if (name == "lpod") return Method::lpod;
  if (name == "pm") return Method::pm;
  if (name == "lle") return Method::lle;
  throw ConfigError("unknown reduction method '" + name + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::pod: return "pod";
    case Method::lpod: return "lpod";
    case Method::pm: return "pm";
    case Method::lle: return "lle";
  }
  return "?";
}

StepChart StepChart::affine(Mat phitilde, Vec offset) {
  StepChart c;
  c.phitilde_ = std::move(phitilde);
  c.offset_ = std::move(offset);
  return c;
}

StepChart StepChart::quadratic(const PmModel& model) {
  StepChart c;
  c.pm_ = &model;
  return c;
}

int StepChart::dim() const { return pm_ ? pm_->dim() : static_cast<int>(phitilde_.cols()); }

Vec StepChart::ybar(const Vec& y) const {
  if (!pm_) return phitilde_ * y + offset_;
  Vec out(pm_->Vbar.cols() + pm_->Vtilde.cols());
  out << y, pm_->Xi * kron_square(y);
  return out;
}

Mat StepChart::tangent(const Vec& y) const {
  if (!pm_) return phitilde_;
  const int d = pm_->dim();
  Mat T(d + pm_->Vtilde.cols(), d);
  T << Mat::Identity(d, d), pm_->Xi * kron_square_jacobian(y);
  return T;
}

Vec StepChart::initial(const Vec& ybar_prev) const {
  if (pm_) return ybar_prev.head(pm_->dim());
  return lstsq(phitilde_, ybar_prev - offset_).col(0);
}

int ReductionConfig::resolved_k(int s) const {
  const int kk = k > 0 ? k : std::max(d + 1, 12);
  return std::min(kk, s - 1);
}

int ReductionConfig::resolved_d_tilde(int s) const {
  const int dt = d_tilde > 0 ? d_tilde : d;
  return std::max(0, std::min(dt, s - d));
}

StepChart PodSpace::chart(const Mat3&, const Vec&) const {
  return StepChart::affine(Mat::Identity(dim(), dim()), Vec::Zero(dim()));
}

StepChart LpodSpace::chart(const Mat3&, const Vec& ybar_prev) const {
  const int c = lpod_select(model_, ybar_prev);
  StepChart chart = StepChart::affine(model_.local_bases[c], Vec::Zero(model_.phibar.cols()));
  chart.cluster = c;
  return chart;
}

PmSpace::PmSpace(PmModel model) : model_(std::move(model)) {
  phibar_.resize(model_.Vbar.rows(), model_.Vbar.cols() + model_.Vtilde.cols());
  phibar_ << model_.Vbar, model_.Vtilde;
}

StepChart PmSpace::chart(const Mat3&, const Vec&) const { return StepChart::quadratic(model_); }

StepChart LleSpace::chart(const Mat3& Fbar, const Vec&) const {
  LocalChart lc = local_chart(model_, Fbar, N_);
  StepChart c = StepChart::affine(std::move(lc.phitilde), std::move(lc.offset));
  c.neighbor_ids = std::move(lc.neighbor_ids);
  c.ridge_applied = lc.ridge_applied;
  return c;
}

std::unique_ptr<ApproximationSpace> build_space(const SnapshotSet& snapshots, const ReductionConfig& config) {
  const Mat& U = snapshots.U;
  const int s = snapshots.size();
  if (s < 2) throw ConfigError("at least two snapshots are required");
  switch (config.method) {
    case Method::pod:
      return std::make_unique<PodSpace>(pod_fit(U, config.d));
    case Method::lpod:
      return std::make_unique<LpodSpace>(lpod_fit(U, config.n_clusters, config.d, config.seed, config.overlap));
    case Method::pm:
      return std::make_unique<PmSpace>(
          pm_fit(U, config.d, config.resolved_d_tilde(s), config.pm_iters, config.pm_tol));
    case Method::lle: {
      LleOptions opt;
      opt.k = config.resolved_k(s);
      opt.d = config.d;
      opt.d_bar = config.d_bar;
      opt.reg = config.lle_reg;
      return std::make_unique<LleSpace>(lle_fit(U, snapshots.params, opt), config.resolved_N());
    }
  }
  throw ConfigError("unhandled reduction method");
}

}  // namespace hrom
