#include "hrom/bench.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace hrom {

std::vector<Mat3> LoadPath::targets() const {
  std::vector<Mat3> out;
  Mat3 F = Mat3::Identity();
  for (const Mat3& N : N_ls) {
    F += dlp * N_lp + dls * N;
    out.push_back(F);
  }
  return out;
}

namespace {

Mat3 unit_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Mat3 N;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) N(i, j) = n(rng);
    const double norm = N.norm();
    if (norm > 0) return N / norm;
  }
}

}  // namespace

std::vector<LoadPath> gen_load_paths(std::uint64_t seed, int n_paths, int n_steps, double dlp, double dls) {
  if (n_paths < 0 || n_steps < 0 || dlp < 0 || dls < 0) throw ConfigError("load path sizes must be nonnegative");
  std::mt19937_64 rng(seed);
  std::vector<LoadPath> paths;
  for (int p = 0; p < n_paths; ++p) {
    LoadPath path;
    path.dlp = dlp;
    path.dls = dls;
    path.N_lp = unit_direction(rng);
    Mat3 F = Mat3::Identity();
    for (int k = 0; k < n_steps; ++k) {
      int attempts = 0;
      for (;;) {
        const Mat3 N = unit_direction(rng);
        const Mat3 next = F + dlp * path.N_lp + dls * N;
        if (next.determinant() > 0) {
          path.N_ls.push_back(N);
          F = next;
          break;
        }
        if (++attempts >= 100) throw ConfigError("could not sample a load step with det F > 0");
      }
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

double mean_relative_error_percent(const std::vector<Vec>& approx, const std::vector<Vec>& reference) {
  if (approx.size() != reference.size() || approx.empty()) throw ConfigError("error metric needs aligned lists");
  double sum = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    const double norm = reference[i].norm();
    if (norm == 0.0) throw ConfigError("error metric reference has zero norm");
    sum += (approx[i] - reference[i]).norm() / norm;
  }
  return 100.0 * sum / static_cast<double>(approx.size());
}

Vec eig_decay(const Mat& U) {
  if (U.cols() < 3) throw ConfigError("eigenvalue decay needs at least three snapshots");
  Eigen::SelfAdjointEigenSolver<Mat> es(U.transpose() * U, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

CorrelationCurve correlation_dimension(const Mat& U, const std::vector<double>& r_grid) {
  const Eigen::Index s = U.cols();
  if (s < 3) throw ConfigError("correlation dimension needs at least three snapshots");
  std::vector<double> dist;
  dist.reserve(s * (s - 1) / 2);
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = i + 1; j < s; ++j) dist.push_back((U.col(i) - U.col(j)).norm());
  std::sort(dist.begin(), dist.end());
  const double pairs = static_cast<double>(dist.size());
  CorrelationCurve c;
  for (double r : r_grid) {
    const auto count = std::lower_bound(dist.begin(), dist.end(), r) - dist.begin();
    if (count == 0) continue;
    c.r.push_back(r);
    c.C.push_back(static_cast<double>(count) / pairs);
  }
  for (std::size_t i = 1; i + 1 < c.r.size(); ++i)
    c.slope.push_back((std::log(c.C[i + 1]) - std::log(c.C[i - 1])) / (std::log(c.r[i + 1]) - std::log(c.r[i - 1])));
  return c;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int CampaignResult::diverged() const {
  return static_cast<int>(std::count_if(states.begin(), states.end(), [](const StateRecord& s) { return !s.converged; }));
}

double CampaignResult::total_seconds() const {
  double t = 0.0;
  for (const auto& s : states) t += s.seconds;
  return t;
}

SnapshotSet CampaignResult::snapshots(const std::vector<LoadPath>& paths, int n_paths) const {
  SnapshotSet set;
  for (const auto& s : states)
    if (s.path < n_paths) {
      if (!s.converged) throw ConfigError("training campaign has a diverged state");
      set.append(s.u, paths.at(s.path).targets()[s.step], s.path, s.step);
    }
  return set;
}

namespace {

struct PathOutput {
  std::vector<StateRecord> states;
  Timings timings;
  std::vector<double> iteration_seconds;
  std::uint64_t ops = 0;
  ResidualSet residuals;
};

CampaignResult merge(std::vector<PathOutput>& outputs, ResidualSet* residuals) {
  CampaignResult result;
  for (auto& o : outputs) {
    for (auto& s : o.states) result.states.push_back(std::move(s));
    result.timings.merge(o.timings);
    result.iteration_seconds.insert(result.iteration_seconds.end(), o.iteration_seconds.begin(),
                                    o.iteration_seconds.end());
    result.full_order_ops += o.ops;
    if (residuals)
      for (int i = 0; i < o.residuals.size(); ++i) residuals->append(o.residuals.columns[i], o.residuals.meta[i]);
  }
  return result;
}

void collect_iterations(const std::vector<IterationRecord>& trace, std::vector<double>& out) {
  for (const auto& r : trace) out.push_back(r.seconds);
}

}  // namespace

CampaignResult run_fom_campaign(const RveProblem& problem, const std::vector<LoadPath>& paths,
                                const NewtonOptions& options, int threads) {
  std::vector<PathOutput> outputs(paths.size());
  parallel_for(static_cast<int>(paths.size()), threads, [&](int p) {
    PathOutput& out = outputs[p];
    FullState state{Vec::Zero(problem.num_dofs()), Mat3::Identity()};
    const std::vector<Mat3> targets = paths[p].targets();
    for (int k = 0; k < static_cast<int>(targets.size()); ++k) {
      StateRecord rec;
      rec.path = p;
      rec.step = k;
      Stopwatch watch;
      NewtonResult r = newton_solve(problem, state, targets[k], options);
      out.timings.merge(r.timings);
      collect_iterations(r.trace, out.iteration_seconds);
      rec.iterations = r.iterations;
      rec.converged = r.converged;
      rec.failure = r.failure;
      if (r.converged) {
        const HomogenizedResponse h =
            homogenize(problem, r.state, r.last.K, assemble_L(problem, r.state), &out.timings);
        rec.Pbar = h.Pbar;
        rec.Abar = h.Abar;
        rec.u = r.state.u;
        state = r.state;
      }
      rec.seconds = watch.seconds();
      out.states.push_back(std::move(rec));
    }
  });
  return merge(outputs, nullptr);
}

CampaignResult run_galerkin_campaign(const RveProblem& problem, const ApproximationSpace& space,
                                     const std::vector<LoadPath>& paths, const RomOptions& options,
                                     ResidualSet* residuals, int threads) {
  std::vector<PathOutput> outputs(paths.size());
  parallel_for(static_cast<int>(paths.size()), threads, [&](int p) {
    PathOutput& out = outputs[p];
    RomState state = initial_rom_state(space);
    const std::vector<Mat3> targets = paths[p].targets();
    for (int k = 0; k < static_cast<int>(targets.size()); ++k) {
      StateRecord rec;
      rec.path = p;
      rec.step = k;
      Stopwatch watch;
      RomResult r = reduced_newton(problem, space, state, targets[k], options, residuals ? &out.residuals : nullptr,
                                   p, k);
      out.timings.merge(r.timings);
      collect_iterations(r.trace, out.iteration_seconds);
      rec.iterations = r.iterations;
      rec.converged = r.converged;
      rec.failure = r.failure;
      if (r.converged) {
        try {
          const HomogenizedResponse h = reduced_homogenize(problem, space, r, &out.timings);
          rec.Pbar = h.Pbar;
          rec.Abar = h.Abar;
          rec.u = reconstruct(space, r.state);
          state = r.state;
        } catch (const SingularSystemError& err) {
          rec.converged = false;
          rec.failure = err.what();
        }
      }
      rec.seconds = watch.seconds();
      out.states.push_back(std::move(rec));
    }
  });
  return merge(outputs, residuals);
}

CampaignResult run_hyper_campaign(const RveProblem& problem, const ApproximationSpace& space, const HyperModel& model,
                                  const std::vector<LoadPath>& paths, const HyperOptions& options, int threads) {
  std::vector<PathOutput> outputs(paths.size());
  parallel_for(static_cast<int>(paths.size()), threads, [&](int p) {
    PathOutput& out = outputs[p];
    HyperState state = initial_hyper_state(space, model);
    const std::vector<Mat3> targets = paths[p].targets();
    for (int k = 0; k < static_cast<int>(targets.size()); ++k) {
      StateRecord rec;
      rec.path = p;
      rec.step = k;
      Stopwatch watch;
      HyperResult r = hyper_newton(problem, space, model, state, targets[k], options);
      out.timings.merge(r.timings);
      collect_iterations(r.trace, out.iteration_seconds);
      out.ops += r.full_order_ops;
      rec.iterations = r.iterations;
      rec.converged = r.converged;
      rec.failure = r.failure;
      if (r.converged) {
        try {
          const HomogenizedResponse h = hyper_homogenize(problem, model, r, &out.timings);
          rec.Pbar = h.Pbar;
          rec.Abar = h.Abar;
          state = r.state;
        } catch (const SingularSystemError& err) {
          rec.converged = false;
          rec.failure = err.what();
        }
      }
      rec.seconds = watch.seconds();
      if (rec.converged) rec.u = space.phibar() * r.state.ybar;
      out.states.push_back(std::move(rec));
    }
  });
  return merge(outputs, nullptr);
}

CampaignErrors campaign_errors(const CampaignResult& rom, const CampaignResult& fom) {
  if (rom.states.size() != fom.states.size()) throw ConfigError("campaigns are not aligned");
  CampaignErrors e;
  e.total = static_cast<int>(rom.states.size());
  std::vector<Vec> ua, ur, pa, pr;
  for (std::size_t i = 0; i < rom.states.size(); ++i) {
    const StateRecord& a = rom.states[i];
    const StateRecord& b = fom.states[i];
    if (!b.converged) throw ConfigError("reference campaign has a diverged state");
    if (!a.converged) {
      ++e.diverged;
      continue;
    }
    ua.push_back(a.u);
    ur.push_back(b.u);
    pa.push_back(to_voigt(a.Pbar));
    pr.push_back(to_voigt(b.Pbar));
  }
  if (!ua.empty()) {
    e.error_u_converged = mean_relative_error_percent(ua, ur);
    e.error_P_converged = mean_relative_error_percent(pa, pr);
  }
  if (e.diverged == 0 && e.total > 0) {
    e.error_u = e.error_u_converged;
    e.error_P = e.error_P_converged;
  }
  return e;
}

std::vector<SweepCell> sweep(const RveProblem& problem, const std::vector<LoadPath>& paths, const CampaignResult& fom,
                             const SweepConfig& config) {
  const int n_train = std::min<int>(config.n_training, static_cast<int>(paths.size()));
  const std::vector<LoadPath> training(paths.begin(), paths.begin() + n_train);
  const SnapshotSet snapshots = fom.snapshots(paths, n_train);

  std::vector<SweepCell> cells;
  for (Method method : config.methods)
    for (int d : config.ds) {
      ReductionConfig rc = config.reduction;
      rc.method = method;
      rc.d = d;
      std::unique_ptr<ApproximationSpace> space;
      ResidualSet residuals;
      std::string failure;
      try {
        space = build_space(snapshots, rc);
        run_galerkin_campaign(problem, *space, training, config.rom, &residuals, config.threads);
      } catch (const Error& err) {
        failure = err.what();
      }
      const Mat G = failure.empty() ? residuals.matrix() : Mat();
      for (HyperMethod hyper : config.hypers)
        for (int m : config.ms) {
          SweepCell cell;
          cell.method = method;
          cell.hyper = hyper;
          cell.d = d;
          cell.m = m;
          cell.failure = failure;
          cell.errors.total = static_cast<int>(fom.states.size());
          if (failure.empty()) {
            try {
              HyperConfig hc = config.hyper;
              hc.method = hyper;
              hc.m = m;
              const HyperModel model = train_hyper(problem, *space, G, snapshots, hc);
              const CampaignResult run =
                  run_hyper_campaign(problem, *space, model, paths, config.hyper_options, config.threads);
              cell.errors = campaign_errors(run, fom);
              cell.timings = run.timings;
              cell.online_seconds = run.total_seconds();
              double it = 0.0;
              for (double s : run.iteration_seconds) it += s;
              cell.mean_iteration_seconds = run.iteration_seconds.empty() ? 0.0 : it / run.iteration_seconds.size();
            } catch (const Error& err) {
              cell.failure = err.what();
            }
          }
          if (!cell.failure.empty()) cell.errors.diverged = cell.errors.total;
          cells.push_back(std::move(cell));
        }
    }
  return cells;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream os;
  os << "method,hyper,d,m,states,diverged,error_u_percent,error_P_percent,error_u_converged_percent,"
        "error_P_converged_percent,failure\r\n";
  for (const auto& c : cells)
    os << to_string(c.method) << ',' << to_string(c.hyper) << ',' << c.d << ',' << c.m << ',' << c.errors.total << ','
       << c.errors.diverged << ',' << number(c.errors.error_u) << ',' << number(c.errors.error_P) << ','
       << number(c.errors.error_u_converged) << ',' << number(c.errors.error_P_converged) << ','
       << csv_field(c.failure) << "\r\n";
  return os.str();
}

std::string sweep_timing_csv(const std::vector<SweepCell>& cells, double fom_seconds) {
  const char* cats[] = {category::kAssembly, category::kLinearSolve, category::kChart, category::kProjection,
                        category::kHomogenization};
  std::ostringstream os;
  os << "method,hyper,d,m,online_seconds,relative_runtime,mean_iteration_seconds,error_u_percent";
  for (const char* c : cats) os << ',' << c;
  os << ',' << category::kOther << "\r\n";
  for (const auto& c : cells) {
    double categorized = 0.0;
    for (const char* k : cats) categorized += c.timings.get(k);
    os << to_string(c.method) << ',' << to_string(c.hyper) << ',' << c.d << ',' << c.m << ','
       << number(c.online_seconds) << ',' << number(fom_seconds > 0 ? c.online_seconds / fom_seconds : 0.0) << ','
       << number(c.mean_iteration_seconds) << ',' << number(c.errors.error_u);
    for (const char* k : cats) os << ',' << number(c.timings.get(k));
    os << ',' << number(std::max(0.0, c.online_seconds - categorized)) << "\r\n";
  }
  return os.str();
}

}  // namespace hrom
