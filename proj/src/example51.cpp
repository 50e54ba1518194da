#include "sodi/example51.hpp"

#include <cmath>

namespace sodi {

ContinuousProblem make_example51_problem() {
  ContinuousProblem pc;
  pc.n = 1;
  pc.f = RunningCost::of(ScalarFn::zero(1, 1));

  AffineParams q;
  q.p0 = Vec::Ones(1);
  pc.q = ScalarFn::affine(1, 1, q);

  AffineParams w;
  w.p0 = Vec::Ones(1);
  w.p1 = Vec::Constant(1, -3.0);
  ConstraintFn c;
  c.fn = ScalarFn::affine(1, 3, w);
  c.deps = DependsOn{true, true, false};
  pc.constraints.push_back(std::move(c));

  pc.v0 = Vec::Ones(1);
  pc.v1 = Vec::Constant(1, 1.0 / 3.0);
  return pc;
}

GridTrajectory example51_arc(const Grid& grid) {
  Mat vals(1, grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i)
    vals(0, i) = example51_arc_value(grid.time(i));
  return GridTrajectory(grid, std::move(vals));
}

}  // namespace sodi
