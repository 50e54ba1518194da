#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sodi/example51.hpp"
#include "sodi/solver.hpp"
#include "tiny_instances.hpp"

using namespace sodi;

TEST_CASE("the benchmark instance solves to first-order accuracy") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 100);
  const SolveResult res = solve(dp);
  REQUIRE(res.converged);
  CHECK(std::abs(res.objective - std::exp(1.0 / 3.0)) <= 5e-2);
  double err = 0.0;
  for (int i = 0; i < dp.grid.nodes(); ++i)
    err = std::max(err, std::abs(res.trajectory.values(0, i) -
                                 example51_arc_value(dp.grid.time(i))));
  CHECK(err <= 5e-2);
}

TEST_CASE("an inactive constraint leaves the interior nodes at the "
          "unconstrained minimum") {
  ContinuousProblem pc;
  pc.n = 1;
  QuadraticParams f;
  f.hessian = Mat::Ones(1, 1);
  pc.f = RunningCost::of(ScalarFn::convex_quadratic(1, 1, f));
  pc.q = ScalarFn::zero(1, 1);
  AffineParams never;  // W == -1
  never.d = 1.0;
  pc.constraints.push_back(
      {ScalarFn::affine(1, 3, never), DependsOn{false, false, false}});
  pc.v0 = Vec::Constant(1, 0.4);
  pc.v1 = Vec::Constant(1, -0.1);

  const DiscreteProblem dp = discretize(pc, 20);
  const SolveResult res = solve(dp);
  REQUIRE(res.converged);
  for (int i = 2; i <= 18; ++i)
    CHECK(std::abs(res.trajectory.values(0, i)) <= 1e-6);
  CHECK(res.multipliers.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("oracle on the coarse benchmark instance") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 4);
  Vec lo = Vec::Constant(dp.grid.nodes(), 0.5);
  Vec hi = Vec::Constant(dp.grid.nodes(), 2.0);
  const OracleResult o = brute_force_oracle(dp, lo, hi, 200);
  REQUIRE(o.feasible_found);
  CHECK(std::abs(o.objective - std::exp(0.25)) <= 2e-2);
}

TEST_CASE("an infeasible instance ends unconverged with diagnostics") {
  ContinuousProblem pc = make_example51_problem();
  AffineParams always;  // W == 1
  always.d = -1.0;
  pc.constraints[0] = {ScalarFn::affine(1, 3, always),
                       DependsOn{false, false, false}};
  const DiscreteProblem dp = discretize(pc, 6);
  SolverConfig cfg;
  cfg.max_outer = 6;
  const SolveResult res = solve(dp, cfg);
  CHECK_FALSE(res.converged);
  CHECK_FALSE(res.diagnostics.empty());
  CHECK(res.feasibility >= 0.5);
}

TEST_CASE("oracle preconditions are enforced") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 4);
  const Vec lo = Vec::Constant(5, 0.0), hi = Vec::Constant(5, 1.0);
  CHECK_THROWS_AS(brute_force_oracle(dp, lo, hi, 300), ConfigError);
  CHECK_THROWS_AS(brute_force_oracle(dp, Vec::Zero(3), Vec::Ones(3), 50),
                  DimensionError);
  const DiscreteProblem wide = discretize(make_example51_problem(), 8);
  CHECK_THROWS_AS(brute_force_oracle(wide, Vec::Zero(9), Vec::Ones(9), 50),
                  ConfigError);  // more than four enumerated nodes
}

TEST_CASE("oracle reports infeasible instances") {
  ContinuousProblem pc = make_example51_problem();
  AffineParams always;  // W == 1
  always.d = -1.0;
  pc.constraints[0] = {ScalarFn::affine(1, 3, always),
                       DependsOn{false, false, false}};
  const DiscreteProblem dp = discretize(pc, 4);
  Vec lo = Vec::Constant(5, -1.0), hi = Vec::Constant(5, 1.0);
  CHECK_FALSE(brute_force_oracle(dp, lo, hi, 50).feasible_found);
}

TEST_CASE("oracle drives a monotone objective to the box edge") {
  ContinuousProblem pc = make_example51_problem();
  AffineParams never;
  never.d = 1.0;
  pc.constraints[0] = {ScalarFn::affine(1, 3, never),
                       DependsOn{false, false, false}};
  const DiscreteProblem dp = discretize(pc, 4);
  Vec lo = Vec::Constant(5, -0.75), hi = Vec::Constant(5, 2.0);
  const OracleResult o = brute_force_oracle(dp, lo, hi, 50);
  REQUIRE(o.feasible_found);
  CHECK(o.objective == -0.75);  // q(x) = x at node N-1, box edge included
}

TEST_CASE("solver and oracle agree on seeded tiny instances") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = testing::make_tiny_instance(seed);
    const DiscreteProblem dp = discretize(inst.pc, 4);
    const SolveResult res = solve(dp);
    REQUIRE(res.converged);
    const OracleResult o =
        brute_force_oracle(dp, inst.box_lo, inst.box_hi, 200);
    REQUIRE(o.feasible_found);
    CHECK(std::abs(res.objective - o.objective) <=
          o.resolution_error + 1e-6);
  }
}

TEST_CASE("max constraint violation decreases after the first penalty "
          "increase") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 50);
  SolverConfig cfg;
  const SolveResult res = solve(dp, cfg);
  int first_increase = -1;
  for (std::size_t i = 1; i < res.history.size(); ++i)
    if (res.history[i].penalty > res.history[i - 1].penalty) {
      first_increase = static_cast<int>(i);
      break;
    }
  // Monotone approach phase: once violations reach the feasibility
  // tolerance the remaining fluctuation is converged noise.
  if (first_increase >= 0)
    for (std::size_t i = first_increase + 1; i < res.history.size(); ++i) {
      if (res.history[i - 1].max_violation <= cfg.feas_tol) break;
      CHECK(res.history[i].max_violation <=
            res.history[i - 1].max_violation + 1e-10);
    }
}

TEST_CASE("multipliers are nonnegative and complementary at convergence") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 50);
  const SolveResult res = solve(dp);
  REQUIRE(res.converged);
  CHECK(res.multipliers.minCoeff() >= 0.0);
  for (int i = 0; i < dp.rows(); ++i) {
    const double phi =
        phi_value(dp, 0, res.trajectory.values.col(i),
                  res.trajectory.values.col(i + 1),
                  res.trajectory.values.col(i + 2));
    CHECK(res.multipliers(0, i) * std::abs(phi) <= 1e-6);
  }
}

TEST_CASE("identical configurations reproduce identical runs") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 25);
  SolverConfig cfg;
  cfg.seed = 99;
  const SolveResult a = solve(dp, cfg);
  const SolveResult b = solve(dp, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].objective == b.history[i].objective);
    CHECK(a.history[i].max_violation == b.history[i].max_violation);
    CHECK(a.history[i].stationarity == b.history[i].stationarity);
  }
  CHECK((a.trajectory.values - b.trajectory.values).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((a.multipliers - b.multipliers).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a NaN objective raises a numerical failure") {
  ContinuousProblem pc = make_example51_problem();
  pc.f = RunningCost::of(ScalarFn::smooth(
      1, 1, [](const Vec&) { return std::nan(""); },
      [](const Vec&) { return Vec(Vec::Zero(1)); }));
  const DiscreteProblem dp = discretize(pc, 4);
  CHECK_THROWS_AS(solve(dp), NumericalError);
}

TEST_CASE("an initial guess on the wrong grid is rejected") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 10);
  GridTrajectory wrong(Grid(20), Mat::Zero(1, 21));
  CHECK_THROWS_AS(solve(dp, SolverConfig{}, wrong), DimensionError);
}

TEST_CASE("solver configuration is validated") {
  SolverConfig bad;
  bad.penalty_growth = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  SolverConfig bad2;
  bad2.grad_tol = 0.0;
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
}

TEST_CASE("raw and rescaled multipliers differ by the square of the step") {
  const DiscreteProblem dp = discretize(make_example51_problem(), 25);
  const SolveResult res = solve(dp);
  const double d2 = dp.grid.delta() * dp.grid.delta();
  CHECK((res.multipliers * d2 - res.multipliers_raw).cwiseAbs().maxCoeff() <=
        1e-15 * std::max(1.0, res.multipliers_raw.cwiseAbs().maxCoeff()));
}
