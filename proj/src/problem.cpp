#include "sodi/problem.hpp"

#include <cmath>

namespace sodi {

RunningCost RunningCost::of(ScalarFn spatial) {
  if (spatial.blocks != 1)
    throw ConfigError("running cost must be a single-block function of x");
  RunningCost f;
  f.spatial_ = std::move(spatial);
  return f;
}

RunningCost RunningCost::time_varying(
    int n, std::function<double(const Vec&, double)> value,
    std::function<Vec(const Vec&, double)> gradient) {
  if (!value || !gradient)
    throw ConfigError("time-varying cost needs value and gradient");
  (void)n;
  RunningCost f;
  f.spatial_.reset();
  f.value_t_ = std::move(value);
  f.grad_t_ = std::move(gradient);
  return f;
}

double RunningCost::value(const Vec& x, double t) const {
  if (spatial_) return eval(*spatial_, x);
  return value_t_(x, t);
}

Vec RunningCost::grad(const Vec& x, double t) const {
  if (spatial_) return gradient(*spatial_, x);
  return grad_t_(x, t);
}

bool RunningCost::is_identically_zero() const {
  if (!spatial_) return false;
  if (spatial_->kind != FnKind::Affine) return false;
  const auto& p = std::get<AffineParams>(spatial_->params);
  auto zero = [](const Vec& v) { return v.size() == 0 || v.isZero(0); };
  return zero(p.p0) && zero(p.p1) && zero(p.p2) && p.d == 0.0;
}

bool ContinuousProblem::any_v1() const {
  for (const auto& c : constraints)
    if (c.deps.v1) return true;
  return false;
}

bool ContinuousProblem::any_v2() const {
  for (const auto& c : constraints)
    if (c.deps.v2) return true;
  return false;
}

void ContinuousProblem::validate() const {
  if (n < 1) throw ConfigError("state dimension must be positive");
  if (constraints.empty())
    throw ConfigError("the problem needs at least one constraint");
  for (const auto& c : constraints) {
    if (c.fn.n != n || c.fn.blocks != 3)
      throw DimensionError("constraints must have arity 3n");
  }
  if (q.n != n || q.blocks != 1)
    throw DimensionError("terminal cost must be a function of x");
  if (v0.size() != n || v1.size() != n)
    throw DimensionError("initial data must have dimension n");
  if (f.spatial() && !is_smooth(*f.spatial()))
    throw ConfigError("running cost must be continuously differentiable");
}

Grid::Grid(int steps) : steps_(steps) {
  if (steps < 4)
    throw ConfigError("grid needs at least 4 steps so nodes 2delta..1-2delta "
                      "are non-empty");
}

GridTrajectory::GridTrajectory(Grid g, Mat v) : grid(g), values(std::move(v)) {
  if (values.cols() != grid.nodes())
    throw DimensionError("trajectory length must be N+1");
}

GridTrajectory GridTrajectory::sample(
    Grid g, int n, const std::function<Vec(double)>& x_of_t) {
  Mat vals(n, g.nodes());
  for (int i = 0; i < g.nodes(); ++i) vals.col(i) = x_of_t(g.time(i));
  return GridTrajectory(g, std::move(vals));
}

Vec delta(const GridTrajectory& traj, int i) {
  if (i < 0 || i > traj.grid.steps() - 1)
    throw std::out_of_range("delta: node must satisfy t <= 1 - delta");
  return (traj.values.col(i + 1) - traj.values.col(i)) *
         traj.grid.inv_delta();
}

Vec delta2(const GridTrajectory& traj, int i) {
  if (i < 0 || i > traj.grid.steps() - 2)
    throw std::out_of_range("delta2: node must satisfy t <= 1 - 2delta");
  const double inv2 = traj.grid.inv_delta() * traj.grid.inv_delta();
  return (traj.values.col(i + 2) - 2.0 * traj.values.col(i + 1) +
          traj.values.col(i)) *
         inv2;
}

DiscreteProblem discretize(const ContinuousProblem& pc, int N) {
  pc.validate();
  if (N < 4) throw ConfigError("discretization needs N >= 4");
  return DiscreteProblem{pc, Grid(N)};
}

GridTrajectory DiscreteProblem::initial_trajectory() const {
  Mat vals(source.n, grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i)
    vals.col(i) = source.v0 + grid.time(i) * source.v1;
  return GridTrajectory(grid, std::move(vals));
}

Vec constraint_point(const DiscreteProblem& dp, const Vec& x0, const Vec& x1,
                     const Vec& x2) {
  const int n = dp.source.n;
  const double inv = dp.grid.inv_delta();
  Vec z(3 * n);
  z.segment(0, n) = x0;
  z.segment(n, n) = (x1 - x0) * inv;
  z.segment(2 * n, n) = (x2 - 2.0 * x1 + x0) * (inv * inv);
  return z;
}

Vec constraint_point(const DiscreteProblem& dp, const GridTrajectory& traj,
                     int i) {
  if (i < 0 || i > dp.rows() - 1)
    throw std::out_of_range("constraint row out of range");
  return constraint_point(dp, traj.values.col(i), traj.values.col(i + 1),
                          traj.values.col(i + 2));
}

double phi_value(const DiscreteProblem& dp, int k, const Vec& x0,
                 const Vec& x1, const Vec& x2) {
  return eval(dp.source.constraints[k].fn, constraint_point(dp, x0, x1, x2));
}

double objective_discrete(const DiscreteProblem& dp,
                          const GridTrajectory& traj) {
  if (!(traj.grid == dp.grid))
    throw DimensionError("trajectory grid does not match the problem grid");
  const int N = dp.grid.steps();
  const double d = dp.grid.delta();
  double sum = 0.0;
  for (int i = 2; i <= N - 2; ++i)
    sum += d * dp.source.f.value(traj.values.col(i), dp.grid.time(i));
  return sum + eval(dp.source.q, traj.values.col(N - 1));
}

double objective_continuous(const ContinuousProblem& pc,
                            const GridTrajectory& traj) {
  const int N = traj.grid.steps();
  const double d = traj.grid.delta();
  double sum = 0.5 * (pc.f.value(traj.values.col(0), 0.0) +
                      pc.f.value(traj.values.col(N), 1.0));
  for (int i = 1; i < N; ++i)
    sum += pc.f.value(traj.values.col(i), traj.grid.time(i));
  return d * sum + eval(pc.q, traj.values.col(N));
}

double FeasibilityTable::max_residual() const {
  double r = std::max(init0, init1);
  if (residuals.size()) r = std::max(r, residuals.maxCoeff());
  return r;
}

FeasibilityTable feasibility_residuals(const DiscreteProblem& dp,
                                       const GridTrajectory& traj) {
  if (!(traj.grid == dp.grid))
    throw DimensionError("trajectory grid does not match the problem grid");
  FeasibilityTable table;
  table.residuals = Mat::Zero(dp.rows(), dp.m());
  for (int i = 0; i < dp.rows(); ++i) {
    const Vec z = constraint_point(dp, traj, i);
    for (int k = 0; k < dp.m(); ++k)
      table.residuals(i, k) =
          std::max(0.0, eval(dp.source.constraints[k].fn, z));
  }
  table.init0 = (traj.values.col(0) - dp.fixed_x0()).cwiseAbs().maxCoeff();
  table.init1 = (traj.values.col(1) - dp.fixed_x1()).cwiseAbs().maxCoeff();
  return table;
}

}  // namespace sodi
