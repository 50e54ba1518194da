#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sodi/functions.hpp"

namespace sodi {

// Which of the (x, v1, v2) arguments a constraint actually uses.
struct DependsOn {
  bool x = true;
  bool v1 = false;
  bool v2 = false;
};

struct ConstraintFn {
  ScalarFn fn;  // arity 3n
  DependsOn deps;
};

// Running cost with the time slot explicit.  Either a plain spatial function
// (t ignored) or a pair of (value, gradient) callables taking (x, t).
class RunningCost {
 public:
  RunningCost() : spatial_(ScalarFn::zero(1, 1)) {}

  static RunningCost of(ScalarFn spatial);
  static RunningCost time_varying(
      int n, std::function<double(const Vec&, double)> value,
      std::function<Vec(const Vec&, double)> gradient);

  double value(const Vec& x, double t) const;
  Vec grad(const Vec& x, double t) const;

  bool is_identically_zero() const;
  const std::optional<ScalarFn>& spatial() const { return spatial_; }

 private:
  std::optional<ScalarFn> spatial_;
  std::function<double(const Vec&, double)> value_t_;
  std::function<Vec(const Vec&, double)> grad_t_;
};

// The continuous problem on the fixed horizon [0, 1]:
//
//   minimize  J[x] = integral of f(x(t), t) dt + q(x(1))
//   subject to W_k(x, x', x'') <= 0 a.e.,  x(0) = v0, x'(0) = v1.
struct ContinuousProblem {
  int n = 1;
  RunningCost f;
  ScalarFn q;  // arity n
  std::vector<ConstraintFn> constraints;  // m >= 1 entries, arity 3n each
  Vec v0, v1;

  int m() const { return static_cast<int>(constraints.size()); }
  bool any_v1() const;
  bool any_v2() const;
  void validate() const;  // throws on shape violations
};

// Uniform grid on [0, 1] with N >= 4 steps.  The step is always derived as
// 1/N, never stored.
class Grid {
 public:
  explicit Grid(int steps);
  int steps() const { return steps_; }          // N
  int nodes() const { return steps_ + 1; }      // N + 1
  double delta() const { return 1.0 / steps_; }
  double inv_delta() const { return static_cast<double>(steps_); }
  double time(int i) const { return static_cast<double>(i) / steps_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.steps_ == b.steps_;
  }

 private:
  int steps_;
};

struct GridTrajectory {
  Grid grid;
  Mat values;  // n x (N+1), one column per node

  GridTrajectory(Grid g, Mat v);
  int n() const { return static_cast<int>(values.rows()); }
  Vec at(int i) const { return values.col(i); }

  static GridTrajectory sample(Grid g, int n,
                               const std::function<Vec(double)>& x_of_t);
};

// First-order forward difference (1/delta)(x(t+delta) - x(t)).
Vec delta(const GridTrajectory& traj, int i);

// Second difference (1/delta^2)(x(t+2delta) - 2x(t+delta) + x(t)).
Vec delta2(const GridTrajectory& traj, int i);

// The discretized problem: constraint rows at nodes i = 0..N-2 with the two
// leading nodes eliminated by the initial data x(0) = v0, x(delta) = v0 +
// delta v1.
struct DiscreteProblem {
  ContinuousProblem source;
  Grid grid;

  int rows() const { return grid.steps() - 1; }  // constraint nodes 0..N-2
  int m() const { return source.m(); }
  Vec fixed_x0() const { return source.v0; }
  Vec fixed_x1() const { return source.v0 + grid.delta() * source.v1; }
  GridTrajectory initial_trajectory() const;  // x(t) = v0 + t v1
};

DiscreteProblem discretize(const ContinuousProblem& pc, int N);

// The stacked point (x(t), Dx(t), D2x(t)) a constraint row is evaluated at.
Vec constraint_point(const DiscreteProblem& dp, const Vec& x0, const Vec& x1,
                     const Vec& x2);
Vec constraint_point(const DiscreteProblem& dp, const GridTrajectory& traj,
                     int i);

// Phi_k(x(t), x(t+delta), x(t+2delta)) == W_k(x(t), Dx(t), D2x(t)), computed
// with the exact same arithmetic as delta/delta2.
double phi_value(const DiscreteProblem& dp, int k, const Vec& x0,
                 const Vec& x1, const Vec& x2);

// Left-rectangle objective of the discrete problem: sum over t = 2delta ..
// 1-2delta of delta f(x(t), t), plus q(x(1-delta)).
double objective_discrete(const DiscreteProblem& dp,
                          const GridTrajectory& traj);

// Composite-trapezoid estimate of the continuous objective plus q(x(1)).
// A reporting quantity of order delta^2, not used in certificate arithmetic.
double objective_continuous(const ContinuousProblem& pc,
                            const GridTrajectory& traj);

struct FeasibilityTable {
  Mat residuals;       // rows x m, entries max(0, Phi_k)
  double init0 = 0.0;  // |x(0) - v0|_inf
  double init1 = 0.0;  // |x(delta) - v0 - delta v1|_inf
  double max_residual() const;
};

FeasibilityTable feasibility_residuals(const DiscreteProblem& dp,
                                       const GridTrajectory& traj);

}  // namespace sodi
