#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sodi/problem.hpp"

namespace sodi {

struct SolverConfig {
  int max_outer = 30;
  int max_inner = 5000;
  double penalty_init = 1.0;
  double penalty_growth = 10.0;
  double grad_tol = 1e-8;
  double feas_tol = 1e-8;
  double backtrack_shrink = 0.5;
  double sufficient_decrease = 1e-4;
  std::uint64_t seed = 0;
  bool polish = true;  // active-set refinement after the multiplier loop

  void validate() const;
};

struct OuterIterate {
  double max_violation;
  double stationarity;
  double objective;
  double penalty;
};

struct SolveResult {
  explicit SolveResult(GridTrajectory traj) : trajectory(std::move(traj)) {}

  GridTrajectory trajectory;
  // Row multipliers in the rescaled form the adjoint reconstruction consumes
  // (lambda / delta^2), and the raw inequality multipliers themselves.
  Mat multipliers;      // m x rows
  Mat multipliers_raw;  // m x rows
  double objective = 0.0;
  double feasibility = 0.0;   // max residual incl. initial conditions
  double stationarity = 0.0;  // |grad J + sum lambda grad Phi|_inf
  int outer_iters = 0;
  bool converged = false;
  bool polished = false;
  std::vector<OuterIterate> history;
  std::string diagnostics;
};

// Augmented-Lagrangian solve of the discretized problem.  Outer loop updates
// lambda <- max(0, lambda + rho Phi); the inner loop is gradient descent with
// Armijo backtracking on the smoothed augmented Lagrangian.  Nodes 0 and 1
// are fixed by the initial data.  Deterministic for a fixed config and
// instance.
SolveResult solve(const DiscreteProblem& dp, const SolverConfig& cfg = {},
                  const std::optional<GridTrajectory>& init = {});

struct OracleResult {
  GridTrajectory best;
  double objective = 0.0;
  double resolution_error = 0.0;  // Lipschitz bound x box width / steps
  bool feasible_found = false;
};

// Exhaustive grid search over the free nodes for tiny scalar instances
// (n = 1, at most 4 enumerated nodes, steps <= 200).  `box_lo`/`box_hi` give
// one interval per grid node.  An independent check on the solver.
OracleResult brute_force_oracle(const DiscreteProblem& dp, const Vec& box_lo,
                                const Vec& box_hi, int steps);

}  // namespace sodi
