#include "hrom/fem.hpp"

#include <algorithm>
#include <cmath>

namespace hrom {

MaterialTable default_materials(Variant variant) {
  return {{0, moduli_from_E_nu(1000.0, 0.2, variant)}, {1, moduli_from_E_nu(3000.0, 0.2, variant)}};
}

RveProblem::RveProblem(Mesh mesh, MaterialTable materials)
    : mesh_(std::move(mesh)), materials_(std::move(materials)), periodic_(build_periodic_map(mesh_)) {
  const int ne = mesh_.num_elements();
  element_dofs_.resize(ne);
  element_params_.resize(ne);
  for (int e = 0; e < ne; ++e) {
    auto it = materials_.find(mesh_.element_material[e]);
    if (it == materials_.end())
      throw ConfigError("no material parameters for material id " + std::to_string(mesh_.element_material[e]));
    element_params_[e] = &it->second;
    for (int k = 0; k < 8; ++k)
      for (int a = 0; a < 3; ++a) element_dofs_[e][3 * k + a] = periodic_.dof(mesh_.elements[e][k], a);
  }

  const int D = num_dofs();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(ne) * 576);
  for (const auto& dofs : element_dofs_)
    for (int i : dofs)
      for (int j : dofs)
        if (i >= 0 && j >= 0) triplets.emplace_back(i, j, 0.0);
  pattern_.resize(D, D);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  slots_.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const auto& dofs = element_dofs_[e];
    for (int a = 0; a < 24; ++a)
      for (int b = 0; b < 24; ++b) {
        const int row = dofs[a], col = dofs[b];
        int slot = -1;
        if (row >= 0 && col >= 0) {
          const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
          slot = static_cast<int>(pos - inner);
        }
        slots_[e][24 * a + b] = slot;
      }
  }
}

NodalMatrix RveProblem::element_fluctuation(int e, const Vec& u) const {
  NodalMatrix ue;
  const auto& dofs = element_dofs_[e];
  for (int k = 0; k < 8; ++k)
    for (int a = 0; a < 3; ++a) {
      const int d = dofs[3 * k + a];
      ue(k, a) = d >= 0 ? u(d) : 0.0;
    }
  return ue;
}

Vec total_displacement(const RveProblem& problem, const FullState& state) {
  const Mesh& mesh = problem.mesh();
  Vec x = problem.periodic().scatter(state.u);
  const Mat3 H = state.Fbar - Mat3::Identity();
  for (int n = 0; n < mesh.num_nodes(); ++n) x.segment<3>(3 * n) += H * mesh.node_coords[n];
  return x;
}

void evaluate_element(const RveProblem& problem, int e, const NodalMatrix& ue, const Mat3& Fbar, bool with_tangent,
                      std::array<GaussState, 8>& out) {
  const ElementGeometry& geo = problem.mesh().geometry[e];
  const MaterialParams& params = problem.element_material(e);
  for (int q = 0; q < 8; ++q) {
    GaussState& gs = out[q];
    gs.F = Fbar + ue.transpose() * geo.dNdX[q];
    try {
      if (with_tangent) {
        StressTangent st = stress_tangent(params, gs.F);
        gs.P = st.P;
        gs.A = st.A;
      } else {
        gs.P = stress(params, gs.F);
      }
    } catch (const InvertedElementError&) {
      throw InvertedElementError(e, gs.F.determinant());
    }
  }
}

ElementVector element_residual(const RveProblem& problem, int e, const std::array<GaussState, 8>& gs) {
  const ElementGeometry& geo = problem.mesh().geometry[e];
  ElementVector r = ElementVector::Zero();
  for (int q = 0; q < 8; ++q) {
    const Eigen::Matrix<double, 8, 3> G = geo.dNdX[q] * gs[q].P.transpose() * geo.dV[q];
    for (int k = 0; k < 8; ++k) r.segment<3>(3 * k) += G.row(k).transpose();
  }
  return r;
}

ElementMatrix element_stiffness(const RveProblem& problem, int e, const std::array<GaussState, 8>& gs) {
  const ElementGeometry& geo = problem.mesh().geometry[e];
  ElementMatrix Ke = ElementMatrix::Zero();
  Eigen::Matrix<double, 9, 24> AB;
  for (int q = 0; q < 8; ++q) {
    const ShapeGradients& dN = geo.dNdX[q];
    const Mat9& A = gs[q].A;
    // AB(a, 3l+c) = sum_d A(a, voigt(c,d)) dN(l,d)
    for (int l = 0; l < 8; ++l)
      for (int c = 0; c < 3; ++c)
        AB.col(3 * l + c) = A.col(voigt(c, 0)) * dN(l, 0) + A.col(voigt(c, 1)) * dN(l, 1) + A.col(voigt(c, 2)) * dN(l, 2);
    const double dV = geo.dV[q];
    for (int k = 0; k < 8; ++k)
      for (int a = 0; a < 3; ++a) {
        const double w0 = dN(k, 0) * dV, w1 = dN(k, 1) * dV, w2 = dN(k, 2) * dV;
        Ke.row(3 * k + a) += w0 * AB.row(voigt(a, 0)) + w1 * AB.row(voigt(a, 1)) + w2 * AB.row(voigt(a, 2));
      }
  }
  return Ke;
}

ElementSensitivity element_sensitivity(const RveProblem& problem, int e, const std::array<GaussState, 8>& gs) {
  const ElementGeometry& geo = problem.mesh().geometry[e];
  ElementSensitivity Le = ElementSensitivity::Zero();
  for (int q = 0; q < 8; ++q) {
    const ShapeGradients& dN = geo.dNdX[q];
    const Mat9& A = gs[q].A;
    const double dV = geo.dV[q];
    for (int k = 0; k < 8; ++k)
      for (int a = 0; a < 3; ++a)
        Le.row(3 * k + a) +=
            dV * (dN(k, 0) * A.row(voigt(a, 0)) + dN(k, 1) * A.row(voigt(a, 1)) + dN(k, 2) * A.row(voigt(a, 2)));
  }
  return Le;
}

namespace {

template <typename Fn>
void for_elements(const RveProblem& problem, std::span<const int> subset, Fn&& fn) {
  if (subset.empty()) {
    for (int e = 0; e < problem.num_elements(); ++e) fn(e);
  } else {
    for (int e : subset) fn(e);
  }
}

}  // namespace

AssembledSystem assemble(const RveProblem& problem, const FullState& state, std::span<const int> subset) {
  FullOrderCounter::bump();
  AssembledSystem sys;
  sys.g = Vec::Zero(problem.num_dofs());
  sys.K = problem.stiffness_pattern();
  double* values = sys.K.valuePtr();
  std::array<GaussState, 8> gs;
  for_elements(problem, subset, [&](int e) {
    evaluate_element(problem, e, problem.element_fluctuation(e, state.u), state.Fbar, true, gs);
    const ElementVector re = element_residual(problem, e, gs);
    const ElementMatrix Ke = element_stiffness(problem, e, gs);
    const auto& dofs = problem.element_dofs(e);
    const auto& slots = problem.element_slots(e);
    for (int a = 0; a < 24; ++a) {
      if (dofs[a] < 0) continue;
      sys.g(dofs[a]) += re(a);
      for (int b = 0; b < 24; ++b)
        if (slots[24 * a + b] >= 0) values[slots[24 * a + b]] += Ke(a, b);
    }
  });
  return sys;
}

Mat assemble_L(const RveProblem& problem, const FullState& state, std::span<const int> subset) {
  FullOrderCounter::bump();
  Mat L = Mat::Zero(problem.num_dofs(), 9);
  std::array<GaussState, 8> gs;
  for_elements(problem, subset, [&](int e) {
    evaluate_element(problem, e, problem.element_fluctuation(e, state.u), state.Fbar, true, gs);
    const ElementSensitivity Le = element_sensitivity(problem, e, gs);
    const auto& dofs = problem.element_dofs(e);
    for (int a = 0; a < 24; ++a)
      if (dofs[a] >= 0) L.row(dofs[a]) += Le.row(a);
  });
  return L;
}

double total_energy(const RveProblem& problem, const FullState& state) {
  FullOrderCounter::bump();
  double W = 0.0;
  for (int e = 0; e < problem.num_elements(); ++e) {
    const ElementGeometry& geo = problem.mesh().geometry[e];
    const NodalMatrix ue = problem.element_fluctuation(e, state.u);
    for (int q = 0; q < 8; ++q) W += energy(problem.element_material(e), state.Fbar + ue.transpose() * geo.dNdX[q]) * geo.dV[q];
  }
  return W;
}

void SparseFactorization::factorize(const SpMat& K) {
  size_ = K.rows();
  if (size_ == 0) return;
  if (!analyzed_) {
    ldlt_.analyzePattern(K);
    analyzed_ = true;
  }
  ldlt_.factorize(K);
  if (ldlt_.info() != Eigen::Success) throw SingularSystemError("sparse LDL^T factorization failed");
  const Vec d = ldlt_.vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  if (!(d.cwiseAbs().minCoeff() > 1e-14 * scale)) throw SingularSystemError("stiffness matrix is singular");
}

Vec SparseFactorization::solve(const Vec& rhs) const {
  if (size_ == 0) return Vec(0);
  return ldlt_.solve(rhs);
}

Mat SparseFactorization::solve(const Mat& rhs) const {
  if (size_ == 0) return Mat(0, rhs.cols());
  return ldlt_.solve(rhs);
}

NewtonResult newton_solve(const RveProblem& problem, const FullState& start, const Mat3& Fbar_target,
                          const NewtonOptions& options) {
  if (!(options.tol > 0.0) || options.load_steps < 1) throw ConfigError("newton: tol > 0 and load_steps >= 1 required");
  NewtonResult result;
  result.state = start;
  if (result.state.u.size() != problem.num_dofs()) result.state.u = Vec::Zero(problem.num_dofs());
  const Mat3 F0 = start.Fbar;
  SparseFactorization factor;

  double t = 0.0;
  double dt = 1.0 / options.load_steps;
  int bisections = 0;
  int step = 0;
  while (t < 1.0) {
    const double t_next = (t + dt >= 1.0 - 1e-12) ? 1.0 : t + dt;
    FullState trial{result.state.u, F0 + t_next * (Fbar_target - F0)};
    bool converged = false;
    try {
      for (int it = 0;; ++it) {
        Stopwatch watch;
        {
          ScopedTimer timer(result.timings, category::kAssembly);
          result.last = assemble(problem, trial);
        }
        const double r = result.last.g.size() ? result.last.g.cwiseAbs().maxCoeff() : 0.0;
        if (r <= options.tol) {
          result.trace.push_back({step, it, r, r, watch.seconds()});
          converged = true;
          break;
        }
        if (it >= options.max_iter) {
          result.trace.push_back({step, it, r, r, watch.seconds()});
          break;
        }
        {
          ScopedTimer timer(result.timings, category::kLinearSolve);
          factor.factorize(result.last.K);
          trial.u -= factor.solve(result.last.g);
        }
        ++result.iterations;
        result.trace.push_back({step, it, r, r, watch.seconds()});
        if (!trial.u.allFinite()) break;
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
      result.failure = "Newton did not converge within " + std::to_string(options.max_iter) + " iterations";
      return result;
    }
    result.state = trial;
    t = t_next;
    ++step;
  }
  result.converged = true;
  return result;
}

std::pair<Mat3, Mat9> volume_averages(const RveProblem& problem, const FullState& state) {
  FullOrderCounter::bump();
  Mat3 P = Mat3::Zero();
  Mat9 A = Mat9::Zero();
  std::array<GaussState, 8> gs;
  for (int e = 0; e < problem.num_elements(); ++e) {
    evaluate_element(problem, e, problem.element_fluctuation(e, state.u), state.Fbar, true, gs);
    const ElementGeometry& geo = problem.mesh().geometry[e];
    for (int q = 0; q < 8; ++q) {
      P += gs[q].P * geo.dV[q];
      A += gs[q].A * geo.dV[q];
    }
  }
  return {P / problem.volume(), A / problem.volume()};
}

HomogenizedResponse homogenize(const RveProblem& problem, const FullState& state, const SpMat& K, const Mat& L,
                               Timings* timings) {
  Timings local;
  Timings& sink = timings ? *timings : local;
  ScopedTimer timer(sink, category::kHomogenization);
  HomogenizedResponse out;
  auto [P, Av] = volume_averages(problem, state);
  SparseFactorization factor;
  factor.factorize(K);
  out.S = factor.solve(L);
  out.Pbar = P;
  out.Abar = Av - (L.transpose() * out.S) / problem.volume();
  return out;
}

HomogenizedResponse homogenize(const RveProblem& problem, const FullState& state, Timings* timings) {
  const AssembledSystem sys = assemble(problem, state);
  return homogenize(problem, state, sys.K, assemble_L(problem, state), timings);
}

}  // namespace hrom
