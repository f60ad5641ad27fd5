#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hrom/fem.hpp"
#include "test_support.hpp"

using namespace hrom;
using hrom::test_util::rel_error;

namespace {

RveProblem two_phase(int divisions, Variant v = Variant::stabilized) {
  return RveProblem(build_rve_mesh(two_inclusion_spec(divisions)), default_materials(v));
}

RveProblem homogeneous(int divisions) {
  MeshSpec spec;
  spec.divisions = divisions;
  return RveProblem(build_rve_mesh(spec), {{0, moduli_from_E_nu(1000.0, 0.2)}});
}

Mat3 stretch(double a) {
  Mat3 F = Mat3::Identity();
  F(0, 0) += a;
  return F;
}

// Independent residual: nodal positions x = X + (Fbar - I) X + u_master, F = sum_k x_k (x) grad N_k, forces
// on every grid node folded onto (i mod n, j mod n, k mod n).
Vec nodal_loop_residual(const RveProblem& problem, const FullState& state) {
  const Mesh& mesh = problem.mesh();
  const int n = mesh.divisions, np = n + 1;
  const double h = mesh.edge_length / n;
  auto master_of = [&](int node) {
    const Vec3& X = mesh.node_coords[node];
    const int i = static_cast<int>(std::lround(X(0) / h)) % n;
    const int j = static_cast<int>(std::lround(X(1) / h)) % n;
    const int k = static_cast<int>(std::lround(X(2) / h)) % n;
    return i + np * (j + np * k);
  };
  auto fluct = [&](int node) {
    Vec3 u = Vec3::Zero();
    const int m = master_of(node);
    for (int c = 0; c < 3; ++c) {
      const int d = problem.periodic().dof(m, c);
      if (d >= 0) u(c) = state.u(d);
    }
    return u;
  };
  Vec forces = Vec::Zero(3 * mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& conn = mesh.elements[e];
    const auto& geo = mesh.geometry[e];
    for (int q = 0; q < 8; ++q) {
      Mat3 F = Mat3::Zero();
      for (int k = 0; k < 8; ++k) {
        const Vec3 x = state.Fbar * mesh.node_coords[conn[k]] + fluct(conn[k]);
        F += x * geo.dNdX[q].row(k);
      }
      const Mat3 P = stress(problem.element_material(e), F);
      for (int k = 0; k < 8; ++k)
        forces.segment<3>(3 * master_of(conn[k])) += P * geo.dNdX[q].row(k).transpose() * geo.dV[q];
    }
  }
  Vec g = Vec::Zero(problem.num_dofs());
  for (int node = 0; node < mesh.num_nodes(); ++node)
    for (int c = 0; c < 3; ++c) {
      const int d = problem.periodic().dof(node, c);
      if (d >= 0 && problem.periodic().canonical(node) == node) g(d) = forces(3 * node + c);
    }
  return g;
}

Vec random_fluctuation(const RveProblem& problem, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  return scale * hrom::test_util::random_matrix(rng, problem.num_dofs(), 1);
}

}  // namespace

TEST(Assemble, ZeroResidualAtStressFreeState) {
  const RveProblem p = two_phase(3);
  const AssembledSystem sys = assemble(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()});
  EXPECT_EQ(sys.g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assemble, StretchLoadsTwoPhaseMesh) {
  const RveProblem p = two_phase(4);
  const AssembledSystem sys = assemble(p, FullState{Vec::Zero(p.num_dofs()), stretch(0.03)});
  EXPECT_GT(sys.g.norm(), 0.0);
}

TEST(Assemble, ResidualMatchesIndependentNodalLoop) {
  const RveProblem p = two_phase(3);
  Mat3 Fbar = stretch(0.04);
  Fbar(1, 2) = 0.02;
  const FullState s{random_fluctuation(p, 0.01, 1), Fbar};
  const Vec g = assemble(p, s).g;
  EXPECT_LT(rel_error(g, nodal_loop_residual(p, s)), 1e-12);
}

TEST(Assemble, SubsetOfAllElementsEqualsFullAssembly) {
  const RveProblem p = two_phase(2);
  const FullState s{random_fluctuation(p, 0.01, 2), stretch(0.02)};
  std::vector<int> all(p.num_elements());
  for (int e = 0; e < p.num_elements(); ++e) all[e] = e;
  const AssembledSystem a = assemble(p, s), b = assemble(p, s, all);
  EXPECT_EQ(a.g, b.g);
  EXPECT_EQ(Mat(a.K), Mat(b.K));
}

TEST(Assemble, StiffnessMatchesFiniteDifferences) {
  const RveProblem p = two_phase(2);
  const FullState s{random_fluctuation(p, 0.02, 3), stretch(0.05)};
  const Mat K = Mat(assemble(p, s).K);
  const double h = 1e-6;
  Mat fd(p.num_dofs(), p.num_dofs());
  for (int j = 0; j < p.num_dofs(); ++j) {
    FullState sp = s, sm = s;
    sp.u(j) += h;
    sm.u(j) -= h;
    fd.col(j) = (assemble(p, sp).g - assemble(p, sm).g) / (2 * h);
  }
  EXPECT_LT(rel_error(fd, K), 1e-5);
  EXPECT_LT((K - K.transpose()).norm(), 1e-12 * K.norm());
}

TEST(Assemble, StiffnessPositiveDefiniteAtReference) {
  const RveProblem p = two_phase(3);
  const Mat K = Mat(assemble(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()}).K);
  Eigen::SelfAdjointEigenSolver<Mat> eig(K);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(Assemble, ResidualIsEnergyGradient) {
  const RveProblem p = two_phase(3);
  const FullState s{random_fluctuation(p, 0.01, 4), stretch(0.03)};
  const Vec dir = random_fluctuation(p, 1.0, 5);
  const double h = 1e-6;
  FullState sp = s, sm = s;
  sp.u += h * dir;
  sm.u -= h * dir;
  const double fd = (total_energy(p, sp) - total_energy(p, sm)) / (2 * h);
  const double exact = assemble(p, s).g.dot(dir);
  EXPECT_NEAR(fd, exact, 1e-6 * std::abs(exact));
}

TEST(Sensitivity, MatchesFiniteDifferencesInFbar) {
  const RveProblem p = two_phase(2);
  const FullState s{random_fluctuation(p, 0.02, 6), stretch(0.05)};
  const Mat L = assemble_L(p, s);
  ASSERT_EQ(L.cols(), 9);
  const double h = 1e-6;
  Mat fd(p.num_dofs(), 9);
  for (int b = 0; b < 9; ++b) {
    FullState sp = s, sm = s;
    sp.Fbar(kVoigtPairs[b][0], kVoigtPairs[b][1]) += h;
    sm.Fbar(kVoigtPairs[b][0], kVoigtPairs[b][1]) -= h;
    fd.col(b) = (assemble(p, sp).g - assemble(p, sm).g) / (2 * h);
  }
  EXPECT_LT(rel_error(fd, L), 1e-5);
}

TEST(Sensitivity, VanishesForHomogeneousReference) {
  const RveProblem p = homogeneous(3);
  const Mat L = assemble_L(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()});
  EXPECT_LT(L.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Sensitivity, NonzeroAtInterfaces) {
  const RveProblem p = two_phase(4);
  const Mat L = assemble_L(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()});
  EXPECT_GT(L.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Newton, IdentityTargetNeedsNoIteration) {
  const RveProblem p = two_phase(3);
  const NewtonResult r = newton_solve(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()}, Mat3::Identity());
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 1);
  EXPECT_EQ(r.state.u.norm(), 0.0);
}

TEST(Newton, StretchConvergesQuadratically) {
  const RveProblem p = two_phase(4);
  NewtonOptions opt;
  opt.tol = 1e-8;
  const NewtonResult r = newton_solve(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()}, stretch(0.03), opt);
  ASSERT_TRUE(r.converged) << r.failure;
  EXPECT_LT(nodal_loop_residual(p, r.state).cwiseAbs().maxCoeff(), 1e-8);
  ASSERT_GE(r.trace.size(), 3u);
  const double r0 = r.trace[r.trace.size() - 3].residual;
  const double r1 = r.trace[r.trace.size() - 2].residual;
  const double r2 = r.trace.back().residual;
  // Observed constant from the previous contraction must also bound the last one.
  const double C = r1 / (r0 * r0);
  EXPECT_LE(r2, 10.0 * C * r1 * r1 + 1e-12);
  EXPECT_LT(r2 / r1, r1 / r0);
}

TEST(Newton, LoadStepsReachSameSolution) {
  const RveProblem p = two_phase(3);
  const FullState start{Vec::Zero(p.num_dofs()), Mat3::Identity()};
  NewtonOptions opt;
  opt.tol = 1e-10;
  const NewtonResult one = newton_solve(p, start, stretch(0.1), opt);
  opt.load_steps = 4;
  const NewtonResult four = newton_solve(p, start, stretch(0.1), opt);
  ASSERT_TRUE(one.converged && four.converged);
  EXPECT_LT(rel_error(four.state.u, one.state.u), 1e-8);
}

TEST(Newton, InvertingTargetReportsFailure) {
  const RveProblem p = two_phase(2);
  const Mat3 target = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  const NewtonResult r = newton_solve(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()}, target);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.failure.empty());
}

TEST(Homogenize, HomogeneousRveReproducesBulkLaw) {
  const RveProblem p = homogeneous(3);
  Mat3 Fbar = stretch(0.05);
  Fbar(0, 1) = 0.03;
  Fbar(2, 1) = -0.02;
  const NewtonResult r = newton_solve(p, FullState{Vec::Zero(p.num_dofs()), Mat3::Identity()}, Fbar);
  ASSERT_TRUE(r.converged);
  const HomogenizedResponse h = homogenize(p, r.state);
  const StressTangent bulk = stress_tangent(p.element_material(0), Fbar);
  EXPECT_LT((h.Pbar - bulk.P).cwiseAbs().maxCoeff(), 1e-10 * bulk.P.cwiseAbs().maxCoeff());
  EXPECT_LT((h.Abar - bulk.A).cwiseAbs().maxCoeff(), 1e-8 * bulk.A.cwiseAbs().maxCoeff());
}

TEST(Homogenize, TangentMatchesFiniteDifferencesOfStress) {
  const RveProblem p = two_phase(2);
  NewtonOptions opt;
  opt.tol = 1e-11;
  Mat3 Fbar = stretch(0.04);
  Fbar(1, 0) = 0.02;
  const FullState zero{Vec::Zero(p.num_dofs()), Mat3::Identity()};
  const NewtonResult base = newton_solve(p, zero, Fbar, opt);
  ASSERT_TRUE(base.converged);
  const HomogenizedResponse h = homogenize(p, base.state);
  const double step = 1e-6;
  Mat9 fd;
  for (int b = 0; b < 9; ++b) {
    Mat3 Fp = Fbar, Fm = Fbar;
    Fp(kVoigtPairs[b][0], kVoigtPairs[b][1]) += step;
    Fm(kVoigtPairs[b][0], kVoigtPairs[b][1]) -= step;
    const NewtonResult rp = newton_solve(p, base.state, Fp, opt);
    const NewtonResult rm = newton_solve(p, base.state, Fm, opt);
    ASSERT_TRUE(rp.converged && rm.converged);
    fd.col(b) = (to_voigt(volume_averages(p, rp.state).first) - to_voigt(volume_averages(p, rm.state).first)) /
                (2 * step);
  }
  EXPECT_LT(rel_error(fd, h.Abar), 1e-4);
}

TEST(Homogenize, ConsistentTangentSofterThanVoigtBound) {
  const RveProblem p = two_phase(4);
  const FullState zero{Vec::Zero(p.num_dofs()), Mat3::Identity()};
  const HomogenizedResponse h = homogenize(p, zero);
  const Mat9 voigt_bound = volume_averages(p, zero).second;
  EXPECT_GT(h.Abar.norm(), 0.0);
  Eigen::SelfAdjointEigenSolver<Mat9> a(0.5 * (h.Abar + h.Abar.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat9> v(0.5 * (voigt_bound + voigt_bound.transpose()));
  // Difference is positive semidefinite and strictly lowers the trace.
  Eigen::SelfAdjointEigenSolver<Mat9> diff(0.5 * (voigt_bound - h.Abar + (voigt_bound - h.Abar).transpose()));
  EXPECT_GT(diff.eigenvalues().minCoeff(), -1e-8 * v.eigenvalues().maxCoeff());
  EXPECT_LT(a.eigenvalues().sum(), v.eigenvalues().sum());
}

TEST(Assemble, CostScalesLinearlyInElementCount) {
  std::vector<double> logE, logT;
  for (int n : {4, 6, 8}) {
    const RveProblem p = two_phase(n);
    const FullState s{random_fluctuation(p, 0.01, 8), stretch(0.03)};
    double best = 1e30;
    for (int rep = 0; rep < 5; ++rep) {
      Stopwatch w;
      const AssembledSystem sys = assemble(p, s);
      best = std::min(best, w.seconds());
      EXPECT_GT(sys.g.size(), 0);
    }
    logE.push_back(std::log(double(p.num_elements())));
    logT.push_back(std::log(best));
  }
  const double slope = (logT.back() - logT.front()) / (logE.back() - logE.front());
  EXPECT_NEAR(slope, 1.0, 0.15);
}
