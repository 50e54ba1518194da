#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sodi/functions.hpp"

using namespace sodi;

namespace {

ScalarFn growth_constraint() {  // W(x, v1) = x - 3 v1
  AffineParams p;
  p.p0 = Vec::Ones(1);
  p.p1 = Vec::Constant(1, -3.0);
  return ScalarFn::affine(1, 2, p);
}

ScalarFn half_square() {  // f(x) = x^2 / 2
  QuadraticParams q;
  q.hessian = Mat::Ones(1, 1);
  q.linear = Vec::Zero(1);
  return ScalarFn::convex_quadratic(1, 1, q);
}

ScalarFn abs_fn() {  // |x| as max(x, -x)
  AffineParams up, dn;
  up.p0 = Vec::Ones(1);
  dn.p0 = Vec::Constant(1, -1.0);
  return ScalarFn::max_of_affine(1, 1, {up, dn});
}

// Independent gradient oracle: central finite differences.
Vec fd_gradient(const ScalarFn& fn, const Vec& z, double h) {
  Vec g(z.size());
  for (int i = 0; i < z.size(); ++i) {
    Vec zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    g[i] = (eval(fn, zp) - eval(fn, zm)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("affine evaluation on the active growth arc") {
  const ScalarFn w = growth_constraint();
  Vec z(2);
  z << 1.0, 1.0 / 3.0;
  CHECK(eval(w, z) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("the zero affine function vanishes everywhere") {
  const ScalarFn z0 = ScalarFn::zero(2, 1);
  Vec z(2);
  z << 3.7, -1.2;
  CHECK(eval(z0, z) == 0.0);
}

TEST_CASE("max of affine pieces takes the maximum") {
  const ScalarFn f = abs_fn();
  Vec z(1);
  z << 0.7;
  CHECK(eval(f, z) == 0.7);
  z << -0.4;
  CHECK(eval(f, z) == 0.4);
}

TEST_CASE("max-of-affine evaluation equals the piece maximum exactly") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<AffineParams> pieces(4);
  for (auto& p : pieces) {
    p.p0 = Vec::NullaryExpr(3, [&](int) { return u(rng); });
    p.d = u(rng);
  }
  const ScalarFn f = ScalarFn::max_of_affine(3, 1, pieces);
  for (int s = 0; s < 50; ++s) {
    Vec z = Vec::NullaryExpr(3, [&](int) { return u(rng); });
    double best = -1e300;
    for (const auto& p : pieces) best = std::max(best, p.p0.dot(z) - p.d);
    CHECK(eval(f, z) == best);
  }
}

TEST_CASE("subdifferential of the growth constraint is its gradient") {
  const ScalarFn w = growth_constraint();
  Vec z(2);
  z << 5.0, -2.0;
  const SubdiffSet sd = subdiff(w, z);
  REQUIRE(sd.is_singleton);
  CHECK(sd.generators(0, 0) == 1.0);
  CHECK(sd.generators(1, 0) == -3.0);
}

TEST_CASE("subdifferential of the identity terminal cost") {
  AffineParams p;
  p.p0 = Vec::Ones(1);
  const ScalarFn q = ScalarFn::affine(1, 1, p);
  const SubdiffSet sd = subdiff(q, Vec::Constant(1, 0.3));
  REQUIRE(sd.is_singleton);
  CHECK(sd.generators(0, 0) == 1.0);
}

TEST_CASE("absolute value at the kink returns both piece gradients") {
  const SubdiffSet sd = subdiff(abs_fn(), Vec::Zero(1), 1e-9);
  REQUIRE(sd.generators.cols() == 2);
  CHECK(sd.generators(0, 0) == 1.0);
  CHECK(sd.generators(0, 1) == -1.0);
  CHECK_FALSE(sd.is_singleton);
}

TEST_CASE("affine minus-sign convention: gradient is (p0, p1, -p2)") {
  AffineParams p;
  p.p0 = Vec::Constant(1, 2.0);
  p.p1 = Vec::Constant(1, 0.5);
  p.p2 = Vec::Constant(1, 4.0);
  p.d = 1.0;
  const ScalarFn w = ScalarFn::affine(1, 3, p);
  Vec z(3);
  z << 1.0, 2.0, 3.0;
  CHECK(eval(w, z) == doctest::Approx(2.0 + 1.0 - 12.0 - 1.0));
  const Vec g = gradient(w, z);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 0.5);
  CHECK(g[2] == -4.0);
}

TEST_CASE("subgradient inequality is an identity for affine functions") {
  const ScalarFn w = growth_constraint();
  Vec z0(2);
  z0 << -1.0, 2.0;
  CHECK(check_subgradient_inequality(w, z0, gradient(w, z0), 100, 42));
}

TEST_CASE("subgradient inequality accepts the true quadratic slope") {
  const ScalarFn f = half_square();
  CHECK(check_subgradient_inequality(f, Vec::Ones(1), Vec::Ones(1), 100, 1));
}

TEST_CASE("subgradient inequality rejects an overstated slope") {
  // Hand oracle: f(1.5) - f(1) = 0.625 < 2 * 0.5 = 1, so g = 2 is no
  // subgradient at z0 = 1.
  const ScalarFn f = half_square();
  const double lhs = eval(f, Vec::Constant(1, 1.5)) - eval(f, Vec::Ones(1));
  CHECK(lhs < 2.0 * 0.5);
  CHECK_FALSE(
      check_subgradient_inequality(f, Vec::Ones(1), Vec::Constant(1, 2.0),
                                   100, 1));
}

TEST_CASE("every generator of every convex kind satisfies the subgradient "
          "inequality at 100 random pairs") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-2.0, 2.0);

  std::vector<ScalarFn> fns;
  fns.push_back(growth_constraint());
  fns.push_back(half_square());
  fns.push_back(abs_fn());
  fns.push_back(ScalarFn::smooth(
      1, 1, [](const Vec& z) { return std::exp(z[0]); },
      [](const Vec& z) { return Vec(Vec::Constant(1, std::exp(z[0]))); }));

  std::uint64_t seed = 1000;
  for (const auto& fn : fns) {
    for (int trial = 0; trial < 100; ++trial) {
      Vec z0 = Vec::NullaryExpr(fn.dim(), [&](int) { return u(rng); });
      const SubdiffSet sd = subdiff(fn, z0);
      for (int c = 0; c < sd.generators.cols(); ++c)
        CHECK(check_subgradient_inequality(fn, z0, sd.generators.col(c), 100,
                                           seed++));
    }
  }
}

TEST_CASE("smooth subdifferentials match central finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  QuadraticParams qp;
  Mat a = Mat::NullaryExpr(3, 3, [&](int, int) { return u(rng); });
  qp.hessian = a * a.transpose();
  qp.linear = Vec::NullaryExpr(3, [&](int) { return u(rng); });
  qp.offset = 0.3;
  const ScalarFn q = ScalarFn::convex_quadratic(3, 1, qp);

  const ScalarFn e = ScalarFn::smooth(
      2, 1, [](const Vec& z) { return std::exp(z[0]) + z[1] * z[1]; },
      [](const Vec& z) {
        Vec g(2);
        g << std::exp(z[0]), 2.0 * z[1];
        return g;
      });

  for (const ScalarFn* fn : {&q, &e}) {
    for (int s = 0; s < 20; ++s) {
      Vec z = Vec::NullaryExpr(fn->dim(), [&](int) { return u(rng); });
      const SubdiffSet sd = subdiff(*fn, z);
      REQUIRE(sd.is_singleton);
      const Vec g = sd.generators.col(0);
      const Vec fd = fd_gradient(*fn, z, 1e-6);
      for (int i = 0; i < g.size(); ++i)
        CHECK(std::abs(g[i] - fd[i]) <= 1e-5 * (1.0 + std::abs(g[i])));
    }
  }
}

TEST_CASE("arity mismatch raises a dimension error") {
  CHECK_THROWS_AS(eval(growth_constraint(), Vec::Zero(3)), DimensionError);
  CHECK_THROWS_AS(subdiff(growth_constraint(), Vec::Zero(1)), DimensionError);
}

TEST_CASE("black box without gradient cannot provide subdifferentials") {
  const ScalarFn f =
      ScalarFn::smooth(1, 1, [](const Vec& z) { return z[0]; }, nullptr);
  CHECK_THROWS_AS(subdiff(f, Vec::Zero(1)), UnsupportedError);
}

TEST_CASE("quadratic construction rejects indefinite or asymmetric input") {
  QuadraticParams neg;
  neg.hessian = Mat::Constant(1, 1, -1.0);
  neg.linear = Vec::Zero(1);
  CHECK_THROWS_AS(ScalarFn::convex_quadratic(1, 1, neg), ConfigError);

  QuadraticParams asym;
  asym.hessian = Mat::Zero(2, 2);
  asym.hessian(0, 1) = 1.0;  // not symmetric
  asym.linear = Vec::Zero(2);
  CHECK_THROWS_AS(ScalarFn::convex_quadratic(2, 1, asym), ConfigError);

  // Eigenvalue floor: a tiny negative eigenvalue within -1e-10 passes.
  QuadraticParams near;
  near.hessian = Mat::Constant(1, 1, -5e-11);
  near.linear = Vec::Zero(1);
  CHECK_NOTHROW(ScalarFn::convex_quadratic(1, 1, near));
}

TEST_CASE("piece activity tolerance is relative to the maximum") {
  // Two pieces meeting at the sample within a relative gap of 1e-9.
  AffineParams a, b;
  a.p0 = Vec::Ones(1);
  b.p0 = Vec::Constant(1, 1.0 + 1e-9);
  const ScalarFn f = ScalarFn::max_of_affine(1, 1, {a, b});
  const Vec z = Vec::Ones(1);
  CHECK(subdiff(f, z, 1e-8).generators.cols() == 2);
  CHECK(subdiff(f, z, 1e-12).generators.cols() == 1);
}
