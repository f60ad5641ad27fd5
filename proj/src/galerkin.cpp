#include "hrom/galerkin.hpp"

#include <Eigen/LU>

namespace hrom {

RomState initial_rom_state(const ApproximationSpace& space) {
  RomState s;
  s.ybar = Vec::Zero(space.intermediate_dim());
  s.y = Vec::Zero(space.dim());
  return s;
}

void ResidualSet::append(const Vec& g, const ResidualRecord& record) {
  columns.push_back(g);
  meta.push_back(record);
}

Mat ResidualSet::matrix() const {
  if (columns.empty()) return Mat();
  Mat G(columns.front().size(), columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) G.col(j) = columns[j];
  return G;
}

Vec reconstruct(const ApproximationSpace& space, const RomState& state) {
  FullOrderCounter::bump();
  return space.phibar() * state.ybar;
}

RomResult reduced_newton(const RveProblem& problem, const ApproximationSpace& space, const RomState& start,
                         const Mat3& Fbar_target, const RomOptions& options, ResidualSet* record, int path,
                         int step) {
  RomResult result;
  result.state = start;
  if (result.state.ybar.size() != space.intermediate_dim()) result.state = initial_rom_state(space);
  result.state.Fbar = start.Fbar;
  const Mat3 F0 = start.Fbar;
  const Mat& phibar = space.phibar();

  double t = 0.0, dt = 1.0;
  int bisections = 0, sub = 0;
  while (t < 1.0) {
    const double t_next = (t + dt >= 1.0 - 1e-12) ? 1.0 : t + dt;
    const Mat3 F = F0 + t_next * (Fbar_target - F0);
    StepChart chart;
    {
      ScopedTimer timer(result.timings, category::kChart);
      chart = space.chart(F, result.state.ybar);
    }
    Vec y = chart.initial(result.state.ybar);
    Mat phi;
    if (chart.is_affine()) {
      ScopedTimer timer(result.timings, category::kProjection);
      phi = phibar * chart.phitilde();
    }
    bool converged = false;
    try {
      for (int it = 0;; ++it) {
        Stopwatch watch;
        FullState full;
        {
          ScopedTimer timer(result.timings, category::kProjection);
          full = FullState{phibar * chart.ybar(y), F};
          if (!chart.is_affine()) phi = phibar * chart.tangent(y);
        }
        AssembledSystem sys;
        {
          ScopedTimer timer(result.timings, category::kAssembly);
          sys = assemble(problem, full);
        }
        Vec g_red;
        {
          ScopedTimer timer(result.timings, category::kProjection);
          g_red = phi.transpose() * sys.g;
        }
        const double crit = g_red.size() ? g_red.cwiseAbs().maxCoeff() : 0.0;
        const double full_res = sys.g.size() ? sys.g.cwiseAbs().maxCoeff() : 0.0;
        converged = crit <= options.tol;
        if (record) record->append(sys.g, {path, step, it, converged});
        if (converged || it >= options.max_iter || !std::isfinite(crit)) {
          result.trace.push_back({sub, it, crit, full_res, watch.seconds()});
          break;
        }
        Mat K_red;
        {
          ScopedTimer timer(result.timings, category::kProjection);
          K_red = phi.transpose() * (sys.K * phi);
        }
        {
          ScopedTimer timer(result.timings, category::kLinearSolve);
          Eigen::FullPivLU<Mat> lu(K_red);
          if (!lu.isInvertible()) throw SingularSystemError("reduced stiffness is singular");
          y -= lu.solve(g_red);
        }
        ++result.iterations;
        result.trace.push_back({sub, it, crit, full_res, watch.seconds()});
      }
    } catch (const InvertedElementError& err) {
      if (++bisections > options.max_bisections) {
        result.failure = std::string("load step bisection limit reached: ") + err.what();
        return result;
      }
      dt *= 0.5;
      continue;
    } catch (const SingularSystemError& err) {
      result.failure = err.what();
      return result;
    }
    if (!converged) {
      result.failure = "reduced Newton did not converge within " + std::to_string(options.max_iter) + " iterations";
      return result;
    }
    result.state = RomState{y, chart.ybar(y), F};
    result.chart = std::move(chart);
    t = t_next;
    ++sub;
  }
  result.converged = true;
  return result;
}

HomogenizedResponse reduced_homogenize(const RveProblem& problem, const FullState& state, const Mat& phi,
                                       const SpMat& K, const Mat& L, Timings* timings) {
  Timings local;
  ScopedTimer timer(timings ? *timings : local, category::kHomogenization);
  HomogenizedResponse out;
  auto [P, Av] = volume_averages(problem, state);
  const Mat K_red = phi.transpose() * (K * phi);
  const Mat L_red = phi.transpose() * L;
  Eigen::FullPivLU<Mat> lu(K_red);
  if (!lu.isInvertible()) throw SingularSystemError("reduced stiffness is singular in homogenization");
  out.S = lu.solve(L_red);
  out.Pbar = P;
  out.Abar = Av - (L_red.transpose() * out.S) / problem.volume();
  return out;
}

HomogenizedResponse reduced_homogenize(const RveProblem& problem, const ApproximationSpace& space,
                                       const RomResult& result, Timings* timings) {
  const FullState full{reconstruct(space, result.state), result.state.Fbar};
  const AssembledSystem sys = assemble(problem, full);
  const Mat phi = space.phibar() * result.chart.tangent(result.state.y);
  return reduced_homogenize(problem, full, phi, sys.K, assemble_L(problem, full), timings);
}

}  // namespace hrom
