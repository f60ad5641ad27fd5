#include "hrom/hyper.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "hrom/linalg.hpp"

namespace hrom {

HyperMethod parse_hyper_method(const std::string& name) {
  if (name == "deim") return HyperMethod::deim;
  if (name == "lehm") return HyperMethod::lehm;
  if (name == "lspg") return HyperMethod::lspg;
  throw ConfigError("unknown hyperreduction method '" + name + "'");
}

std::string to_string(HyperMethod m) {
  switch (m) {
    case HyperMethod::deim: return "deim";
    case HyperMethod::lehm: return "lehm";
    case HyperMethod::lspg: return "lspg";
  }
  return "?";
}

namespace {

int abs_argmax(const Vec& v) {
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_val) {
      best_val = a;
      best = i;
    }
  }
  return best;
}

Mat select_rows(const Mat& A, const std::vector<int>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = A.row(rows[i]);
  return out;
}

double condition_number(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& s = svd.singularValues();
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<int> deim_indices(const Mat& Omega) {
  const int m = static_cast<int>(Omega.cols());
  std::vector<int> idx;
  idx.reserve(m);
  for (int j = 0; j < m; ++j) {
    Vec r = Omega.col(j);
    if (j > 0) {
      const Mat ZO = select_rows(Omega.leftCols(j), idx);
      Eigen::FullPivLU<Mat> lu(ZO);
      if (!lu.isInvertible()) throw SingularSystemError("Z^T Omega became singular during magic point selection");
      Vec zw(j);
      for (int i = 0; i < j; ++i) zw(i) = Omega(idx[i], j);
      r -= Omega.leftCols(j) * lu.solve(zw);
    }
    const int pick = abs_argmax(r);
    if (std::find(idx.begin(), idx.end(), pick) != idx.end())
      throw SingularSystemError("magic point selection repeated index " + std::to_string(pick));
    idx.push_back(pick);
  }
  return idx;
}

MagicPoints select_magic_points(const Mat& G, int m) {
  const ThinSvd svd = thin_svd(G);
  const int rank = numerical_rank(svd.sigma);
  if (m < 1 || m > rank)
    throw ConfigError("number of magic points " + std::to_string(m) + " outside [1, rank(G)=" +
                      std::to_string(rank) + "]");
  MagicPoints mp;
  mp.Omega = svd.U.leftCols(m);
  mp.singular_values = svd.sigma;
  mp.indices = deim_indices(mp.Omega);
  return mp;
}

ReducedDomain build_reduced_domain(const RveProblem& problem, std::vector<int> magic) {
  const int D = problem.num_dofs();
  ReducedDomain dom;
  std::vector<int> magic_pos(D, -1);
  for (std::size_t j = 0; j < magic.size(); ++j) {
    if (magic[j] < 0 || magic[j] >= D) throw ConfigError("magic point index out of range");
    if (magic_pos[magic[j]] >= 0) throw ConfigError("magic point indices must be distinct");
    magic_pos[magic[j]] = static_cast<int>(j);
  }
  dom.magic = std::move(magic);

  std::vector<char> in_dofs(D, 0);
  for (int e = 0; e < problem.num_elements(); ++e) {
    const auto& dofs = problem.element_dofs(e);
    const bool hit = std::any_of(dofs.begin(), dofs.end(), [&](int d) { return d >= 0 && magic_pos[d] >= 0; });
    if (!hit) continue;
    dom.elements.push_back(e);
    for (int d : dofs)
      if (d >= 0) in_dofs[d] = 1;
  }
  std::vector<int> position(D, -1);
  for (int d = 0; d < D; ++d)
    if (in_dofs[d]) {
      position[d] = static_cast<int>(dom.dofs.size());
      dom.dofs.push_back(d);
    }
  for (int e : dom.elements) {
    const auto& dofs = problem.element_dofs(e);
    std::array<int, 24> loc;
    std::vector<std::pair<int, int>> rows;
    for (int a = 0; a < 24; ++a) {
      loc[a] = dofs[a] >= 0 ? position[dofs[a]] : -1;
      if (dofs[a] >= 0 && magic_pos[dofs[a]] >= 0) rows.emplace_back(a, magic_pos[dofs[a]]);
    }
    dom.local.push_back(loc);
    dom.rows.push_back(std::move(rows));
  }
  for (int d : dom.magic) dom.magic_rows.push_back(position[d]);
  return dom;
}

Mat deim_reconstruction(const Mat& Omega, const std::vector<int>& magic) {
  Eigen::FullPivLU<Mat> lu(select_rows(Omega, magic));
  if (!lu.isInvertible()) throw SingularSystemError("Z^T Omega is singular");
  return Omega * lu.inverse();
}

double lehm_default_ridge(const Mat& G, const std::vector<int>& magic) {
  const Mat Gm = select_rows(G, magic);
  return 1e-10 * Gm.squaredNorm() / static_cast<double>(magic.size());
}

Mat lehm_reconstruction(const Mat& G, const std::vector<int>& magic, double ridge, double* condition) {
  const Mat Gm = select_rows(G, magic);
  const int m = static_cast<int>(magic.size());
  Mat A = Gm * Gm.transpose();
  A.diagonal().array() += ridge;
  if (condition) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    const Vec& ev = es.eigenvalues();
    *condition = ev(0) > 0 ? ev(m - 1) / ev(0) : std::numeric_limits<double>::infinity();
  }
  Eigen::LDLT<Mat> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw SingularSystemError("G_m G_m^T is singular");
  // M^T = A^{-1} G_m G^T
  return ldlt.solve(Gm * G.transpose()).transpose();
}

XiWeights fit_xi(const Mat& Pe, const Vec& Pbar, std::vector<int> elements) {
  if (Pe.cols() != static_cast<Eigen::Index>(elements.size()) || Pe.rows() != Pbar.size())
    throw ConfigError("xi fit dimensions do not match");
  if (Pe.cwiseAbs().maxCoeff() == 0.0 || Pbar.cwiseAbs().maxCoeff() == 0.0)
    throw ConfigError("xi fit needs nonzero stress snapshots");
  const NnlsResult r = nnls(Pe, Pbar);
  XiWeights w;
  w.elements = std::move(elements);
  w.xi = r.x;
  w.residual = r.residual;
  return w;
}

std::pair<Mat, Vec> xi_training_data(const RveProblem& problem, const std::vector<int>& elements,
                                     const std::vector<FullState>& states) {
  const int n = static_cast<int>(states.size());
  Mat Pe(9 * n, static_cast<Eigen::Index>(elements.size()));
  Vec Pbar(9 * n);
  std::array<GaussState, 8> gs;
  for (int s = 0; s < n; ++s) {
    const FullState& st = states[s];
    Pbar.segment<9>(9 * s) = to_voigt(volume_averages(problem, st).first);
    for (std::size_t i = 0; i < elements.size(); ++i) {
      const int e = elements[i];
      evaluate_element(problem, e, problem.element_fluctuation(e, st.u), st.Fbar, false, gs);
      const ElementGeometry& geo = problem.mesh().geometry[e];
      Mat3 P = Mat3::Zero();
      for (int q = 0; q < 8; ++q) P += gs[q].P * geo.dV[q];
      Pe.col(i).segment<9>(9 * s) = to_voigt(Mat3(P / problem.volume()));
    }
  }
  return {Pe, Pbar};
}

HyperModel make_hyper_model(const RveProblem& problem, const ApproximationSpace& space, HyperMethod method,
                            std::vector<int> magic, const Mat& M, XiWeights xi) {
  HyperModel model;
  model.method = method;
  model.domain = build_reduced_domain(problem, std::move(magic));
  model.phibar_m = select_rows(space.phibar(), model.domain.dofs);
  if (method != HyperMethod::lspg) {
    if (M.rows() != space.full_dim() || M.cols() != model.domain.num_magic())
      throw ConfigError("reconstruction matrix has the wrong shape");
    model.left = space.phibar().transpose() * M;
  }
  model.xi = std::move(xi);
  return model;
}

HyperModel train_hyper(const RveProblem& problem, const ApproximationSpace& space, const Mat& G,
                       const SnapshotSet& snapshots, const HyperConfig& config) {
  if (G.rows() != problem.num_dofs()) throw ConfigError("residual snapshots do not match the mesh");
  const MagicPoints mp = select_magic_points(G, config.m);
  Mat M;
  double ridge = 0.0, cond = 0.0;
  switch (config.method) {
    case HyperMethod::deim:
      M = deim_reconstruction(mp.Omega, mp.indices);
      cond = condition_number(select_rows(mp.Omega, mp.indices));
      break;
    case HyperMethod::lehm: {
      const Mat Gm = select_rows(G, mp.indices);
      ridge = config.ridge_scale * Gm.squaredNorm() / config.m;
      M = lehm_reconstruction(G, mp.indices, ridge, &cond);
      break;
    }
    case HyperMethod::lspg:
      cond = condition_number(select_rows(mp.Omega, mp.indices));
      break;
  }
  const ReducedDomain dom = build_reduced_domain(problem, mp.indices);
  std::vector<FullState> states;
  for (int i = 0; i < snapshots.size(); ++i) states.push_back({snapshots.U.col(i), snapshots.params[i]});
  auto [Pe, Pbar] = xi_training_data(problem, dom.elements, states);
  HyperModel model = make_hyper_model(problem, space, config.method, mp.indices, M, fit_xi(Pe, Pbar, dom.elements));
  model.ridge = ridge;
  model.condition = cond;
  if (cond > 1e12)
    model.warnings.push_back("reconstruction system is ill-conditioned (condition estimate " + std::to_string(cond) +
                             ")");
  return model;
}

HyperSystem hyper_assemble(const RveProblem& problem, const ReducedDomain& domain, const Vec& u_m, const Mat3& Fbar,
                           const Mat& basis_m, bool with_L) {
  const int m = domain.num_magic();
  const Eigen::Index q = basis_m.cols();
  HyperSystem sys;
  sys.g_m = Vec::Zero(m);
  const Mat basisT = basis_m.transpose();
  Mat KPhiT = Mat::Zero(q, m);
  if (with_L) sys.L_m = Mat::Zero(m, 9);
  std::array<GaussState, 8> gs;
  Eigen::Matrix<double, 9, 24> AB;
  Eigen::Matrix<double, Eigen::Dynamic, 24> krows;
  for (std::size_t i = 0; i < domain.elements.size(); ++i) {
    const int e = domain.elements[i];
    const auto& loc = domain.local[i];
    const auto& rows = domain.rows[i];
    NodalMatrix ue;
    for (int k = 0; k < 8; ++k)
      for (int c = 0; c < 3; ++c) {
        const int p = loc[3 * k + c];
        ue(k, c) = p >= 0 ? u_m(p) : 0.0;
      }
    evaluate_element(problem, e, ue, Fbar, true, gs);
    const ElementGeometry& geo = problem.mesh().geometry[e];
    krows.setZero(static_cast<Eigen::Index>(rows.size()), 24);
    for (int q = 0; q < 8; ++q) {
      const ShapeGradients& dN = geo.dNdX[q];
      const Mat9& A = gs[q].A;
      const Mat3& P = gs[q].P;
      for (int l = 0; l < 8; ++l)
        for (int c = 0; c < 3; ++c)
          AB.col(3 * l + c) =
              A.col(voigt(c, 0)) * dN(l, 0) + A.col(voigt(c, 1)) * dN(l, 1) + A.col(voigt(c, 2)) * dN(l, 2);
      const double dV = geo.dV[q];
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const int k = rows[r].first / 3, a = rows[r].first % 3, j = rows[r].second;
        const double w0 = dN(k, 0) * dV, w1 = dN(k, 1) * dV, w2 = dN(k, 2) * dV;
        sys.g_m(j) += w0 * P(a, 0) + w1 * P(a, 1) + w2 * P(a, 2);
        krows.row(r) += w0 * AB.row(voigt(a, 0)) + w1 * AB.row(voigt(a, 1)) + w2 * AB.row(voigt(a, 2));
        if (with_L) sys.L_m.row(j) += w0 * A.row(voigt(a, 0)) + w1 * A.row(voigt(a, 1)) + w2 * A.row(voigt(a, 2));
      }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const int j = rows[r].second;
      for (int h = 0; h < 24; ++h)
        if (loc[h] >= 0) KPhiT.col(j) += krows(r, h) * basisT.col(loc[h]);
    }
  }
  sys.KPhi = KPhiT.transpose();
  return sys;
}

Vec hyper_step_deimlike(const Mat& left, const Vec& g_m, const Mat& KPhi, const Mat& T) {
  const Mat Kh = T.transpose() * (left * (KPhi * T));
  const Vec gh = T.transpose() * (left * g_m);
  Eigen::FullPivLU<Mat> lu(Kh);
  if (!lu.isInvertible()) throw SingularSystemError("hyperreduced stiffness is singular");
  return -lu.solve(gh);
}

Vec hyper_step_lspg(const Vec& g_m, const Mat& KPhi, const Mat& T, bool paper_sign) {
  const Mat J = KPhi * T;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
  return paper_sign ? Vec(cod.solve(g_m)) : Vec(-cod.solve(g_m));
}

HyperState initial_hyper_state(const ApproximationSpace& space, const HyperModel& model) {
  HyperState s;
  s.y = Vec::Zero(space.dim());
  s.ybar = Vec::Zero(space.intermediate_dim());
  s.u_m = Vec::Zero(model.phibar_m.rows());
  return s;
}

HyperResult hyper_newton(const RveProblem& problem, const ApproximationSpace& space, const HyperModel& model,
                         const HyperState& start, const Mat3& Fbar_target, const HyperOptions& options) {
  const std::uint64_t ops0 = FullOrderCounter::value();
  HyperResult result;
  result.state = start;
  if (result.state.ybar.size() != space.intermediate_dim()) {
    result.state = initial_hyper_state(space, model);
    result.state.Fbar = start.Fbar;
  }
  const bool lspg = model.method == HyperMethod::lspg;
  const Mat3 F0 = start.Fbar;
  double t = 0.0, dt = 1.0;
  int bisections = 0, sub = 0;
  auto finish = [&]() {
    result.full_order_ops = FullOrderCounter::value() - ops0;
    return result;
  };
  while (t < 1.0) {
    const double t_next = (t + dt >= 1.0 - 1e-12) ? 1.0 : t + dt;
    const Mat3 F = F0 + t_next * (Fbar_target - F0);
    StepChart chart;
    {
      ScopedTimer timer(result.timings, category::kChart);
      chart = space.chart(F, result.state.ybar);
    }
    // Affine charts: T, phibar_m T and T^T left are constant over the step.
    Mat step_phiT, step_leftT;
    Vec step_u0;
    if (chart.is_affine()) {
      ScopedTimer timer(result.timings, category::kChart);
      step_phiT = model.phibar_m * chart.phitilde();
      step_u0 = model.phibar_m * chart.offset();
      if (!lspg) step_leftT = chart.phitilde().transpose() * model.left;
    }
    Vec y = chart.initial(result.state.ybar);
    Vec u_m;
    bool converged = false;
    try {
      for (int it = 0;; ++it) {
        Stopwatch watch;
        // K phibar_m T is assembled directly (m x d) instead of K phibar_m (m x dbar).
        const Mat* phiT_m = &step_phiT;
        const Mat* leftT = &step_leftT;
        Mat own_phiT, own_leftT;
        {
          ScopedTimer timer(result.timings, category::kProjection);
          if (chart.is_affine()) {
            u_m = step_u0 + step_phiT * y;
          } else {
            u_m = model.phibar_m * chart.ybar(y);
            const Mat T = chart.tangent(y);
            own_phiT = model.phibar_m * T;
            if (!lspg) own_leftT = T.transpose() * model.left;
            phiT_m = &own_phiT;
            leftT = &own_leftT;
          }
        }
        HyperSystem sys;
        {
          ScopedTimer timer(result.timings, category::kAssembly);
          sys = hyper_assemble(problem, model.domain, u_m, F, *phiT_m);
        }
        const Mat I = Mat::Identity(chart.dim(), chart.dim());
        double crit;
        Vec dy;
        if (lspg) {
          ScopedTimer timer(result.timings, category::kLinearSolve);
          dy = hyper_step_lspg(sys.g_m, sys.KPhi, I, options.lspg_paper_sign);
          const Vec predicted = sys.KPhi * dy;
          crit = std::min(sys.g_m.cwiseAbs().maxCoeff(), predicted.size() ? predicted.cwiseAbs().maxCoeff() : 0.0);
        } else {
          Vec gh;
          {
            ScopedTimer timer(result.timings, category::kProjection);
            gh = *leftT * sys.g_m;
          }
          crit = gh.size() ? gh.cwiseAbs().maxCoeff() : 0.0;
          if (crit > options.tol && it < options.max_iter && std::isfinite(crit)) {
            ScopedTimer timer(result.timings, category::kLinearSolve);
            dy = hyper_step_deimlike(*leftT, sys.g_m, sys.KPhi, I);
          }
        }
        converged = crit <= options.tol;
        if (converged || it >= options.max_iter || !std::isfinite(crit)) {
          result.trace.push_back({sub, it, crit, -1.0, watch.seconds()});
          break;
        }
        y += dy;
        ++result.iterations;
        result.trace.push_back({sub, it, crit, -1.0, watch.seconds()});
      }
    } catch (const InvertedElementError& err) {
      if (++bisections > options.max_bisections) {
        result.failure = std::string("load step bisection limit reached: ") + err.what();
        return finish();
      }
      dt *= 0.5;
      continue;
    } catch (const SingularSystemError& err) {
      result.failure = err.what();
      return finish();
    }
    if (!converged) {
      result.failure =
          "hyperreduced Newton did not converge within " + std::to_string(options.max_iter) + " iterations";
      return finish();
    }
    result.state = HyperState{y, chart.ybar(y), u_m, F};
    result.chart = std::move(chart);
    t = t_next;
    ++sub;
  }
  result.converged = true;
  return finish();
}

HomogenizedResponse hyper_homogenize(const RveProblem& problem, const HyperModel& model, const HyperResult& result,
                                     Timings* timings) {
  Timings local;
  ScopedTimer timer(timings ? *timings : local, category::kHomogenization);
  const HyperState& st = result.state;
  const ReducedDomain& dom = model.domain;
  const Mat T = result.chart.tangent(st.y);
  const Mat phiT_m = model.phibar_m * T;
  const HyperSystem sys = hyper_assemble(problem, dom, st.u_m, st.Fbar, phiT_m, true);
  const bool lspg = model.method == HyperMethod::lspg;

  Mat3 P = Mat3::Zero();
  Mat9 Avv = Mat9::Zero();
  Mat Lh = Mat::Zero(T.cols(), 9);
  std::array<GaussState, 8> gs;
  for (std::size_t i = 0; i < model.xi.elements.size(); ++i) {
    const double w = model.xi.xi(i);
    if (w == 0.0) continue;
    const int e = model.xi.elements[i];
    const auto pos = std::lower_bound(dom.elements.begin(), dom.elements.end(), e);
    if (pos == dom.elements.end() || *pos != e) throw ConfigError("xi element outside the reduced domain");
    const auto& loc = dom.local[pos - dom.elements.begin()];
    NodalMatrix ue;
    for (int k = 0; k < 8; ++k)
      for (int c = 0; c < 3; ++c) ue(k, c) = loc[3 * k + c] >= 0 ? st.u_m(loc[3 * k + c]) : 0.0;
    evaluate_element(problem, e, ue, st.Fbar, true, gs);
    const ElementGeometry& geo = problem.mesh().geometry[e];
    for (int q = 0; q < 8; ++q) {
      P += w * geo.dV[q] * gs[q].P;
      Avv += w * geo.dV[q] * gs[q].A;
    }
    if (lspg) {
      const ElementSensitivity Le = element_sensitivity(problem, e, gs);
      for (int h = 0; h < 24; ++h)
        if (loc[h] >= 0) Lh += w * phiT_m.row(loc[h]).transpose() * Le.row(h);
    }
  }
  const double V = problem.volume();
  HomogenizedResponse out;
  out.Pbar = P / V;
  if (lspg) {
    out.S = Eigen::CompleteOrthogonalDecomposition<Mat>(sys.KPhi).solve(sys.L_m);
  } else {
    const Mat leftT = T.transpose() * model.left;
    const Mat Kh = leftT * sys.KPhi;
    Lh = leftT * sys.L_m;
    Eigen::FullPivLU<Mat> lu(Kh);
    if (!lu.isInvertible()) throw SingularSystemError("hyperreduced stiffness is singular in homogenization");
    out.S = lu.solve(Lh);
  }
  out.Abar = Avv / V - Lh.transpose() * out.S / V;
  return out;
}

}  // namespace hrom
