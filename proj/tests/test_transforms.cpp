#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sodi/nnls.hpp"
#include "sodi/transforms.hpp"

using namespace sodi;

namespace {

SubgradTriple triple(double a, double b, double c) {
  return SubgradTriple{Vec::Constant(1, a), Vec::Constant(1, b),
                       Vec::Constant(1, c)};
}

double triple_gap(const SubgradTriple& a, const SubgradTriple& b) {
  return std::max({(a.xs - b.xs).cwiseAbs().maxCoeff(),
                   (a.v1s - b.v1s).cwiseAbs().maxCoeff(),
                   (a.v2s - b.v2s).cwiseAbs().maxCoeff()});
}

}  // namespace

TEST_CASE("the forward map fixes the origin and pure-x subgradients") {
  const SubgradTriple z = phi_to_w(triple(0, 0, 0), 0.37);
  CHECK(triple_gap(z, triple(0, 0, 0)) == 0.0);
  const SubgradTriple x = phi_to_w(triple(1, 0, 0), 0.37);
  CHECK(triple_gap(x, triple(1, 0, 0)) == 0.0);
}

TEST_CASE("forward map on a concrete triple") {
  const SubgradTriple y = phi_to_w(triple(1, 2, 4), 0.5);
  CHECK(y.xs[0] == 7.0);
  CHECK(y.v1s[0] == 5.0);
  CHECK(y.v2s[0] == 1.0);
}

TEST_CASE("inverse map on a concrete triple") {
  const SubgradTriple y = w_to_phi(triple(7, 5, 1), 0.5);
  CHECK(y.xs[0] == 1.0);
  CHECK(y.v1s[0] == 2.0);
  CHECK(y.v2s[0] == 4.0);
}

TEST_CASE("nonpositive steps are rejected") {
  CHECK_THROWS_AS(phi_to_w(triple(1, 1, 1), 0.0), ConfigError);
  CHECK_THROWS_AS(w_to_phi(triple(1, 1, 1), -0.1), ConfigError);
}

TEST_CASE("the two maps are mutually inverse on random triples") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rand_triple = [&](int n) {
    SubgradTriple t;
    t.xs = Vec::NullaryExpr(n, [&](int) { return u(rng); });
    t.v1s = Vec::NullaryExpr(n, [&](int) { return u(rng); });
    t.v2s = Vec::NullaryExpr(n, [&](int) { return u(rng); });
    return t;
  };

  // Starting from the composed side the round trip is well conditioned for
  // any step.
  for (double d : {1.0, 0.1, 0.01}) {
    for (int s = 0; s < 1000; ++s) {
      const SubgradTriple g = rand_triple(2);
      CHECK(triple_gap(w_to_phi(phi_to_w(g, d), d), g) <= 1e-12);
    }
  }
  // Starting from the W side the intermediates carry a 1/delta^2 factor.
  for (double d : {1.0, 0.1}) {
    for (int s = 0; s < 1000; ++s) {
      const SubgradTriple g = rand_triple(2);
      CHECK(triple_gap(phi_to_w(w_to_phi(g, d), d), g) <= 1e-12);
    }
  }
}

TEST_CASE("w1 reduction on concrete triples") {
  const auto [xs, v2s] = reduced_to_w1(triple(0, 0, 0), 0.25);
  CHECK(xs[0] == 0.0);
  CHECK(v2s[0] == 0.0);

  const auto [a, b] = reduced_to_w1(triple(3, -2, 1), 0.5);
  CHECK(a[0] == 2.0);
  CHECK(b[0] == 0.25);

  CHECK_THROWS_AS(reduced_to_w1(triple(1, 0, 1), 0.5), PreconditionError);
}

TEST_CASE("w2 reduction on concrete triples") {
  const auto [a, b] = reduced_to_w2(triple(1, 2, 0), 0.1);
  CHECK(a[0] == 3.0);
  CHECK(b[0] == doctest::Approx(0.2).epsilon(1e-15));

  CHECK_THROWS_AS(reduced_to_w2(triple(1, 2, 1), 0.1), PreconditionError);
}

TEST_CASE("w1 reduction agrees with its defining relations on consistent "
          "triples") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int s = 0; s < 200; ++s) {
    SubgradTriple g;
    g.xs = Vec::NullaryExpr(3, [&](int) { return u(rng); });
    g.v2s = Vec::NullaryExpr(3, [&](int) { return u(rng); });
    g.v1s = -2.0 * g.v2s;
    const double d = 0.5 + std::abs(u(rng));
    const auto [xs, v2s] = reduced_to_w1(g, d);
    CHECK((xs - (g.xs - g.v2s)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((v2s - d * d * g.v2s).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("cone membership at the apex") {
  ConeGenerators cone;
  cone.generators = Mat::Zero(2, 0);
  const ConeMembership at_apex = cone_membership(Vec::Zero(2), cone);
  CHECK(at_apex.member);
  CHECK(at_apex.coefficients.size() == 0);

  const ConeMembership off = cone_membership(Vec::Ones(2), cone);
  CHECK_FALSE(off.member);
}

TEST_CASE("membership along a single ray recovers the scale factor") {
  ConeGenerators cone;
  cone.generators = Mat(2, 1);
  cone.generators << 1.0, -3.0;
  Vec target(2);
  target << 2.0, -6.0;
  const ConeMembership r = cone_membership(target, cone);
  CHECK(r.member);
  // Scalar oracle: <g, y> / <g, g> = (2 + 18) / 10 = 2.
  CHECK(r.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("off-ray targets are rejected with the projection residual") {
  ConeGenerators cone;
  cone.generators = Mat(2, 1);
  cone.generators << 1.0, -3.0;
  Vec target(2);
  target << 1.0, 1.0;
  const ConeMembership r = cone_membership(target, cone);
  CHECK_FALSE(r.member);
  // Projection oracle: the optimal coefficient clips to zero, so the
  // residual is |target|.
  CHECK(r.residual == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(r.coefficients.minCoeff() >= 0.0);
}

TEST_CASE("membership holds for random nonnegative combinations") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> s(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat G = Mat::NullaryExpr(4, 3, [&](int, int) { return s(rng); });
    Vec lam = Vec::NullaryExpr(3, [&](int) { return u(rng); });
    const Vec target = G * lam;
    const ConeMembership r = cone_membership(target, ConeGenerators{G});
    CHECK(r.member);
    CHECK(r.coefficients.minCoeff() >= 0.0);
    CHECK((G * r.coefficients - target).norm() <=
          1e-9 * (1.0 + target.norm()));
  }
}

TEST_CASE("nnls recovers exact nonnegative coefficients") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat A = Mat::NullaryExpr(6, 4, [&](int, int) { return u(rng); });
    Vec xt(4);
    for (int i = 0; i < 4; ++i) xt[i] = std::max(0.0, u(rng));
    const NnlsResult r = nnls(A, A * xt);
    CHECK(r.residual <= 1e-10);
    CHECK(r.x.minCoeff() >= 0.0);
  }
}

TEST_CASE("weighted hull distance is exact algebra for singleton groups") {
  Mat g1(2, 1), g2(2, 1);
  g1 << 1.0, 0.0;
  g2 << 0.0, 1.0;
  Vec alphas(2);
  alphas << 2.0, 3.0;
  Vec target(2);
  target << 2.0, 2.0;
  CHECK(weighted_hull_distance(target, {g1, g2}, alphas) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("weighted hull distance lets convex weights roam inside a group") {
  // One group with two generators and total weight 1: the segment from
  // (1,0) to (0,1).  The midpoint is reachable, (1,1) is not.
  Mat g(2, 2);
  g << 1.0, 0.0, 0.0, 1.0;
  Vec alphas = Vec::Ones(1);
  Vec mid(2);
  mid << 0.5, 0.5;
  CHECK(weighted_hull_distance(mid, {g}, alphas) <= 1e-6);
  Vec corner(2);
  corner << 1.0, 1.0;
  CHECK(weighted_hull_distance(corner, {g}, alphas) >=
        std::sqrt(0.5) - 1e-4);
}

TEST_CASE("composing an affine constraint with the difference substitutions "
          "maps subgradients exactly") {
  // Acceptance-style semantic equivalence: the generator of the composed
  // constraint, pushed through the forward map, equals the generator of the
  // original constraint at the substituted point.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 2;
  for (double d : {1.0, 0.1}) {
    for (int trial = 0; trial < 50; ++trial) {
      AffineParams w;
      w.p0 = Vec::NullaryExpr(n, [&](int) { return u(rng); });
      w.p1 = Vec::NullaryExpr(n, [&](int) { return u(rng); });
      w.p2 = Vec::NullaryExpr(n, [&](int) { return u(rng); });
      w.d = u(rng);
      const ScalarFn W = ScalarFn::affine(n, 3, w);

      // Build the composed constraint from the pulled-back gradient.
      const Vec gw = gradient(W, Vec::Zero(3 * n));
      const SubgradTriple composed =
          w_to_phi(SubgradTriple::from_stacked(gw, n), d);
      AffineParams cp;
      cp.p0 = composed.xs;
      cp.p1 = composed.v1s;
      cp.p2 = -composed.v2s;  // stored with the minus-sign convention
      cp.d = w.d;
      const ScalarFn Phi = ScalarFn::affine(n, 3, cp);

      Vec z0 = Vec::NullaryExpr(3 * n, [&](int) { return u(rng); });
      // Value agreement at the substituted point.
      Vec zsub(3 * n);
      zsub.segment(0, n) = z0.segment(0, n);
      zsub.segment(n, n) = (z0.segment(n, n) - z0.segment(0, n)) / d;
      zsub.segment(2 * n, n) =
          (z0.segment(2 * n, n) - 2.0 * z0.segment(n, n) +
           z0.segment(0, n)) /
          (d * d);
      CHECK(std::abs(eval(Phi, z0) - eval(W, zsub)) <=
            1e-12 * (1.0 + std::abs(eval(W, zsub))));

      // Generator agreement through the forward map.
      const SubdiffSet sphi = subdiff(Phi, z0);
      REQUIRE(sphi.is_singleton);
      const SubgradTriple mapped = phi_to_w(
          SubgradTriple::from_stacked(sphi.generators.col(0), n), d);
      const SubdiffSet sw = subdiff(W, zsub);
      CHECK((mapped.stacked() - sw.generators.col(0)).cwiseAbs().maxCoeff() <=
            1e-12);
    }
  }
}
