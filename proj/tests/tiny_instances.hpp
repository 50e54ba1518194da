// Seeded desk-size instances shared by the solver tests and the acceptance
// suite: scalar state, N = 4, affine constraints feasible at the initial
// extension, strictly convex quadratic running cost.
#pragma once

#include <random>

#include "sodi/problem.hpp"

namespace sodi::testing {

struct TinyInstance {
  ContinuousProblem pc;
  Vec box_lo, box_hi;  // per-node oracle box
};

inline TinyInstance make_tiny_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.2, 1.0);

  ContinuousProblem pc;
  pc.n = 1;

  // Strictly convex running and terminal costs keep every instance bounded
  // whatever the random constraints turn out to be.
  QuadraticParams f;
  f.hessian = Mat::Constant(1, 1, 0.5 + pos(rng));
  f.linear = Vec::Constant(1, -f.hessian(0, 0) * 0.4 * u(rng));
  pc.f = RunningCost::of(ScalarFn::convex_quadratic(1, 1, f));

  QuadraticParams q;
  q.hessian = Mat::Constant(1, 1, 0.5 + pos(rng));
  q.linear = Vec::Constant(1, -q.hessian(0, 0) * 0.4 * u(rng));
  pc.q = ScalarFn::convex_quadratic(1, 1, q);

  pc.v0 = Vec::Constant(1, 0.25 * u(rng));
  pc.v1 = Vec::Constant(1, 0.25 * u(rng));

  const int m = 1 + static_cast<int>(rng() % 2);
  const Grid grid(4);
  for (int k = 0; k < m; ++k) {
    AffineParams w;
    w.p0 = Vec::Constant(1, u(rng));
    w.p1 = Vec::Constant(1, u(rng));
    w.p2 = Vec::Constant(1, u(rng));
    // Choose the offset so the initial extension x = v0 + t v1 is strictly
    // feasible with a known margin.
    double worst = -1e300;
    for (int i = 0; i <= 2; ++i) {
      const double x = pc.v0[0] + grid.time(i) * pc.v1[0];
      const double dx = pc.v1[0];
      const double val = w.p0[0] * x + w.p1[0] * dx - w.p2[0] * 0.0;
      worst = std::max(worst, val);
    }
    w.d = worst + 0.3 + 0.5 * pos(rng);
    ConstraintFn c;
    c.fn = ScalarFn::affine(1, 3, w);
    c.deps = DependsOn{true, true, true};
    pc.constraints.push_back(std::move(c));
  }

  TinyInstance inst{std::move(pc), Vec(grid.nodes()), Vec(grid.nodes())};
  for (int i = 0; i < grid.nodes(); ++i) {
    const double center = inst.pc.v0[0] + grid.time(i) * inst.pc.v1[0];
    inst.box_lo[i] = center - 1.5;
    inst.box_hi[i] = center + 1.5;
  }
  return inst;
}

}  // namespace sodi::testing
