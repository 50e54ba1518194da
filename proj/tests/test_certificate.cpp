#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sodi/certificate.hpp"
#include "sodi/example51.hpp"
#include "sodi/solver.hpp"
#include "tiny_instances.hpp"

using namespace sodi;

namespace {

// Finite-difference oracle for the Lagrangian gradient at a solver point.
double lagrangian_fd_gradient_norm(const DiscreteProblem& dp,
                                   const GridTrajectory& traj,
                                   const Mat& raw_lambda) {
  const double h = 1e-7;
  const int N = dp.grid.steps();
  auto lagrangian = [&](const Mat& x) {
    GridTrajectory t(dp.grid, x);
    double val = objective_discrete(dp, t);
    for (int i = 0; i < dp.rows(); ++i)
      for (int k = 0; k < dp.m(); ++k)
        val += raw_lambda(k, i) *
               phi_value(dp, k, x.col(i), x.col(i + 1), x.col(i + 2));
    return val;
  };
  double worst = 0.0;
  for (int j = 2; j <= N; ++j) {
    Mat xp = traj.values, xm = traj.values;
    xp(0, j) += h;
    xm(0, j) -= h;
    worst = std::max(worst,
                     std::abs((lagrangian(xp) - lagrangian(xm)) / (2.0 * h)));
  }
  return worst;
}

}  // namespace

TEST_CASE("closed-form dual data for the benchmark instance") {
  const Certificate cert = analytic_certificate_example51(4);
  CHECK(cert.ustar(0, 4) == -1.0);  // u*(1)
  CHECK(cert.alphas(0, 0) ==
        doctest::Approx(std::exp(1.0 / 3.0) / 3.0).epsilon(1e-12));
  CHECK(cert.alphas.row(0).minCoeff() > 0.0);
  CHECK(cert.flavor == CertFlavor::W2Reduced);
  CHECK(cert.xstar.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flavor selection follows the constraint structure") {
  CHECK(flavor_for(make_example51_problem()) == CertFlavor::W2Reduced);

  ContinuousProblem w1;
  w1.n = 1;
  w1.f = RunningCost::of(ScalarFn::zero(1, 1));
  w1.q = ScalarFn::zero(1, 1);
  AffineParams p;
  p.p2 = Vec::Ones(1);
  w1.constraints.push_back(
      {ScalarFn::affine(1, 3, p), DependsOn{false, false, true}});
  w1.v0 = Vec::Zero(1);
  w1.v1 = Vec::Zero(1);
  CHECK(flavor_for(w1) == CertFlavor::W1Reduced);

  ContinuousProblem full = w1;
  AffineParams pf;
  pf.p0 = Vec::Ones(1);
  pf.p1 = Vec::Ones(1);
  pf.p2 = Vec::Ones(1);
  full.constraints.push_back(
      {ScalarFn::affine(1, 3, pf), DependsOn{true, true, true}});
  CHECK(flavor_for(full) == CertFlavor::Polyhedral);

  ContinuousProblem nonpoly = full;
  QuadraticParams qq;
  qq.hessian = Mat::Identity(1, 1);
  nonpoly.f = RunningCost::of(ScalarFn::convex_quadratic(1, 1, qq));
  CHECK(flavor_for(nonpoly) == CertFlavor::FullSsdfi);
}

TEST_CASE("reconstruction from the analytic multipliers reproduces the dual "
          "arc") {
  const int N = 100;
  const DiscreteProblem dp = discretize(make_example51_problem(), N);
  const GridTrajectory arc = example51_arc(dp.grid);
  Mat alphas(1, dp.rows());
  for (int i = 0; i < dp.rows(); ++i)
    alphas(0, i) = example51_multiplier(dp.grid.time(i));
  const Certificate cert =
      reconstruct_adjoints(dp, arc, alphas, 1.0, CertFlavor::W2Reduced);
  double err = 0.0;
  for (int i = 1; i <= N - 1; ++i)
    err = std::max(err, std::abs(cert.ustar(0, i) -
                                 example51_dual_u(dp.grid.time(i))));
  CHECK(err <= 5.0 * dp.grid.delta());
}

TEST_CASE("zero multipliers with zero cost give the zero certificate") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 10);
  const GridTrajectory arc = example51_arc(dp.grid);
  const Certificate cert = reconstruct_adjoints(
      dp, arc, Mat::Zero(1, dp.rows()), 1.0, CertFlavor::W2Reduced);
  CHECK(cert.xstar.cwiseAbs().maxCoeff() == 0.0);
  CHECK(cert.ustar.cwiseAbs().maxCoeff() == 0.0);
  CHECK(cert.psistar.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("negative multipliers are rejected") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 10);
  const GridTrajectory arc = example51_arc(dp.grid);
  Mat alphas = Mat::Zero(1, dp.rows());
  alphas(0, 3) = -0.5;
  CHECK_THROWS_AS(
      reconstruct_adjoints(dp, arc, alphas, 1.0, CertFlavor::W2Reduced),
      PreconditionError);
}

TEST_CASE("reconstruction requires smooth constraints") {
  ContinuousProblem pc = make_example51_problem();
  AffineParams a, b;
  a.p0 = Vec::Ones(1);
  b.p0 = Vec::Constant(1, -1.0);
  pc.constraints[0].fn = ScalarFn::max_of_affine(1, 3, {a, b});
  const DiscreteProblem dp = discretize(pc, 10);
  GridTrajectory traj(dp.grid, Mat::Zero(1, dp.grid.nodes()));
  Mat alphas = Mat::Ones(1, dp.rows());
  CHECK_THROWS_AS(
      reconstruct_adjoints(dp, traj, alphas, 1.0, CertFlavor::W2Reduced),
      UnsupportedError);
}

TEST_CASE("solver-derived certificates satisfy the stationarity residual at "
          "every node of a tiny affine instance") {
  const auto inst = testing::make_tiny_instance(3);
  const DiscreteProblem dp = discretize(inst.pc, 4);
  const SolveResult res = solve(dp);
  REQUIRE(res.converged);

  // Independent oracle: finite differences of the Lagrangian itself.
  CHECK(lagrangian_fd_gradient_norm(dp, res.trajectory,
                                    res.multipliers_raw) <= 1e-6);

  const Certificate cert = certificate_from_multipliers(
      dp, res.trajectory, res.multipliers_raw, 1.0);
  REQUIRE(cert.flavor == CertFlavor::FullSsdfi);
  const double d = dp.grid.delta();
  const int N = dp.grid.steps();
  for (int i = 2; i <= N - 2; ++i) {
    const Vec z = constraint_point(dp, res.trajectory, i);
    Vec combo = Vec::Zero(3);
    for (int k = 0; k < dp.m(); ++k)
      combo += cert.alphas(k, i) * gradient(inst.pc.constraints[k].fn, z);
    const Vec fx =
        inst.pc.f.grad(res.trajectory.values.col(i), dp.grid.time(i));
    const double first =
        (cert.xstar(0, i) - cert.ustar(0, i) + cert.ustar(0, i + 1) -
         cert.xstar(0, i + 2) - d * fx[0]) /
            (d * d) -
        combo[0];
    CHECK(std::abs(first) <= 1e-6);
  }
}

TEST_CASE("the terminal adjoint vanishes exactly and the auxiliary grid "
          "satisfies its defining relation") {
  const auto inst = testing::make_tiny_instance(4);
  const DiscreteProblem dp = discretize(inst.pc, 4);
  const SolveResult res = solve(dp);
  REQUIRE(res.converged);
  const Certificate cert = certificate_from_multipliers(
      dp, res.trajectory, res.multipliers_raw, 1.0);

  CHECK(cert.xstar.col(dp.grid.steps()).cwiseAbs().maxCoeff() == 0.0);
  const double d = dp.grid.delta();
  for (int i = 0; i <= dp.grid.steps() - 1; ++i) {
    const Vec expect = (cert.ustar.col(i) - 2.0 * cert.xstar.col(i + 1)) / d;
    CHECK((cert.psistar.col(i) - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("the second-difference identity holds on reconstructed "
          "certificates") {
  // Both a full-flavor tiny instance and the reduced benchmark flavor.
  std::vector<Certificate> certs;
  std::vector<Grid> grids;
  {
    const auto inst = testing::make_tiny_instance(5);
    const DiscreteProblem dp = discretize(inst.pc, 4);
    const SolveResult res = solve(dp);
    REQUIRE(res.converged);
    certs.push_back(certificate_from_multipliers(dp, res.trajectory,
                                                 res.multipliers_raw, 1.0));
    grids.push_back(dp.grid);
  }
  {
    const DiscreteProblem dp = discretize(make_example51_problem(), 50);
    const SolveResult res = solve(dp);
    REQUIRE(res.converged);
    certs.push_back(certificate_from_multipliers(dp, res.trajectory,
                                                 res.multipliers_raw, 1.0));
    grids.push_back(dp.grid);
  }
  for (std::size_t c = 0; c < certs.size(); ++c) {
    const Certificate& cert = certs[c];
    const double d = grids[c].delta();
    const int N = grids[c].steps();
    for (int i = 2; i <= N - 2; ++i) {
      const Vec lhs = (cert.xstar.col(i) - cert.ustar.col(i) +
                       cert.ustar.col(i + 1) - cert.xstar.col(i + 2)) /
                      (d * d);
      const Vec d2x = (cert.xstar.col(i + 2) - 2.0 * cert.xstar.col(i + 1) +
                       cert.xstar.col(i)) /
                      (d * d);
      const Vec dpsi = (cert.psistar.col(i + 1) - cert.psistar.col(i)) / d;
      const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
      CHECK((lhs - d2x - dpsi).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    }
  }
}

TEST_CASE("the analytic dual arc satisfies its defining differential "
          "equation under central differences") {
  const int N = 100;
  const Certificate cert = analytic_certificate_example51(N);
  const Grid grid(N);
  const double d = grid.delta();
  for (int i = 1; i <= N - 1; ++i) {
    const double du =
        (cert.ustar(0, i + 1) - cert.ustar(0, i - 1)) / (2.0 * d);
    CHECK(std::abs(du + cert.ustar(0, i) / 3.0) <= 5.0 * d);
  }
}

TEST_CASE("w1 reconstruction couples the auxiliary grid to the shifted "
          "adjoint") {
  ContinuousProblem pc;
  pc.n = 1;
  pc.f = RunningCost::of(ScalarFn::zero(1, 1));
  AffineParams q;
  q.p0 = Vec::Ones(1);
  pc.q = ScalarFn::affine(1, 1, q);
  AffineParams w;  // W = -v2 + 0.2 x
  w.p0 = Vec::Constant(1, 0.2);
  w.p2 = Vec::Ones(1);
  pc.constraints.push_back(
      {ScalarFn::affine(1, 3, w), DependsOn{true, false, true}});
  pc.v0 = Vec::Ones(1);
  pc.v1 = Vec::Zero(1);
  REQUIRE(flavor_for(pc) == CertFlavor::W1Reduced);

  const DiscreteProblem dp = discretize(pc, 8);
  GridTrajectory traj = dp.initial_trajectory();
  Mat alphas = Mat::Constant(1, dp.rows(), 0.25);
  const Certificate cert =
      reconstruct_adjoints(dp, traj, alphas, 1.0, CertFlavor::W1Reduced);
  for (int i = 0; i < dp.rows(); ++i)
    CHECK((cert.ustar.col(i + 1) - 2.0 * cert.xstar.col(i + 2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}
