#include "sodi/functions.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace sodi {

namespace {

void require_block(const Vec& p, int n, const char* name) {
  if (p.size() != 0 && p.size() != n)
    throw DimensionError(std::string("affine coefficient ") + name +
                         " must be empty or of state dimension");
}

double dot_block(const Vec& coeff, const Vec& z, int offset, int n) {
  if (coeff.size() == 0) return 0.0;
  return coeff.dot(z.segment(offset, n));
}

double affine_value(const AffineParams& p, const Vec& z, int n, int blocks) {
  double v = dot_block(p.p0, z, 0, n) - p.d;
  if (blocks >= 2) v += dot_block(p.p1, z, n, n);
  if (blocks >= 3) v -= dot_block(p.p2, z, 2 * n, n);
  return v;
}

Vec affine_gradient(const AffineParams& p, int n, int blocks) {
  Vec g = Vec::Zero(n * blocks);
  if (p.p0.size()) g.segment(0, n) = p.p0;
  if (blocks >= 2 && p.p1.size()) g.segment(n, n) = p.p1;
  if (blocks >= 3 && p.p2.size()) g.segment(2 * n, n) = -p.p2;
  return g;
}

void check_arity(const ScalarFn& fn, const Vec& z) {
  if (z.size() != fn.dim())
    throw DimensionError("point arity does not match the function arity");
}

}  // namespace

ScalarFn ScalarFn::affine(int n, int blocks, AffineParams p) {
  if (n < 1 || blocks < 1 || blocks > 3)
    throw ConfigError("affine function needs n >= 1 and 1..3 blocks");
  require_block(p.p0, n, "p0");
  require_block(p.p1, n, "p1");
  require_block(p.p2, n, "p2");
  if (blocks < 2 && p.p1.size() && !p.p1.isZero(0))
    throw ConfigError("p1 given for a function without a v1 block");
  if (blocks < 3 && p.p2.size() && !p.p2.isZero(0))
    throw ConfigError("p2 given for a function without a v2 block");
  ScalarFn fn;
  fn.kind = FnKind::Affine;
  fn.n = n;
  fn.blocks = blocks;
  fn.params = std::move(p);
  return fn;
}

ScalarFn ScalarFn::convex_quadratic(int n, int blocks, QuadraticParams p) {
  const int d = n * blocks;
  if (p.hessian.rows() != d || p.hessian.cols() != d)
    throw DimensionError("quadratic matrix must be dim x dim");
  if (p.linear.size() == 0) p.linear = Vec::Zero(d);
  if (p.linear.size() != d)
    throw DimensionError("quadratic linear term has wrong dimension");
  const double scale = std::max(1.0, p.hessian.cwiseAbs().maxCoeff());
  if ((p.hessian - p.hessian.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * scale)
    throw ConfigError("quadratic matrix must be symmetric");
  p.hessian = ((p.hessian + p.hessian.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(p.hessian,
                                        Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw ConfigError("quadratic matrix is not positive semidefinite");
  ScalarFn fn;
  fn.kind = FnKind::ConvexQuadratic;
  fn.n = n;
  fn.blocks = blocks;
  fn.params = std::move(p);
  return fn;
}

ScalarFn ScalarFn::smooth(int n, int blocks,
                          std::function<double(const Vec&)> value,
                          std::function<Vec(const Vec&)> gradient) {
  if (!value) throw ConfigError("smooth function needs a value callable");
  ScalarFn fn;
  fn.kind = FnKind::SmoothBlackBox;
  fn.n = n;
  fn.blocks = blocks;
  fn.params = BlackBoxParams{std::move(value), std::move(gradient)};
  return fn;
}

ScalarFn ScalarFn::max_of_affine(int n, int blocks,
                                 std::vector<AffineParams> pieces) {
  if (pieces.empty())
    throw ConfigError("max-of-affine needs at least one piece");
  for (const auto& p : pieces) {
    require_block(p.p0, n, "p0");
    require_block(p.p1, n, "p1");
    require_block(p.p2, n, "p2");
  }
  ScalarFn fn;
  fn.kind = FnKind::MaxOfAffine;
  fn.n = n;
  fn.blocks = blocks;
  fn.params = std::move(pieces);
  return fn;
}

ScalarFn ScalarFn::zero(int n, int blocks) {
  return affine(n, blocks, AffineParams{});
}

double eval(const ScalarFn& fn, const Vec& z) {
  check_arity(fn, z);
  switch (fn.kind) {
    case FnKind::Affine:
      return affine_value(std::get<AffineParams>(fn.params), z, fn.n,
                          fn.blocks);
    case FnKind::ConvexQuadratic: {
      const auto& q = std::get<QuadraticParams>(fn.params);
      return 0.5 * z.dot(q.hessian * z) + q.linear.dot(z) + q.offset;
    }
    case FnKind::SmoothBlackBox:
      return std::get<BlackBoxParams>(fn.params).value(z);
    case FnKind::MaxOfAffine: {
      const auto& pieces = std::get<std::vector<AffineParams>>(fn.params);
      double best = affine_value(pieces[0], z, fn.n, fn.blocks);
      for (std::size_t i = 1; i < pieces.size(); ++i)
        best = std::max(best, affine_value(pieces[i], z, fn.n, fn.blocks));
      return best;
    }
  }
  throw UnsupportedError("unknown function kind");
}

SubdiffSet subdiff(const ScalarFn& fn, const Vec& z, double eps_act) {
  check_arity(fn, z);
  SubdiffSet out;
  switch (fn.kind) {
    case FnKind::Affine:
      out.generators = affine_gradient(std::get<AffineParams>(fn.params),
                                       fn.n, fn.blocks);
      out.is_singleton = true;
      return out;
    case FnKind::ConvexQuadratic: {
      const auto& q = std::get<QuadraticParams>(fn.params);
      out.generators = q.hessian * z + q.linear;
      out.is_singleton = true;
      return out;
    }
    case FnKind::SmoothBlackBox: {
      const auto& b = std::get<BlackBoxParams>(fn.params);
      if (!b.gradient)
        throw UnsupportedError(
            "black-box function has no gradient callable");
      out.generators = b.gradient(z);
      out.is_singleton = true;
      return out;
    }
    case FnKind::MaxOfAffine: {
      const auto& pieces = std::get<std::vector<AffineParams>>(fn.params);
      std::vector<double> vals(pieces.size());
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        vals[i] = affine_value(pieces[i], z, fn.n, fn.blocks);
        best = std::max(best, vals[i]);
      }
      const double thresh = best - eps_act * (1.0 + std::abs(best));
      std::vector<int> active;
      for (std::size_t i = 0; i < pieces.size(); ++i)
        if (vals[i] >= thresh) active.push_back(static_cast<int>(i));
      out.generators.resize(fn.dim(), static_cast<int>(active.size()));
      for (std::size_t j = 0; j < active.size(); ++j)
        out.generators.col(static_cast<int>(j)) =
            affine_gradient(pieces[active[j]], fn.n, fn.blocks);
      out.is_singleton = active.size() == 1;
      return out;
    }
  }
  throw UnsupportedError("unknown function kind");
}

bool is_smooth(const ScalarFn& fn) {
  switch (fn.kind) {
    case FnKind::Affine:
    case FnKind::ConvexQuadratic:
      return true;
    case FnKind::SmoothBlackBox:
      return static_cast<bool>(
          std::get<BlackBoxParams>(fn.params).gradient);
    case FnKind::MaxOfAffine:
      return std::get<std::vector<AffineParams>>(fn.params).size() == 1;
  }
  return false;
}

Vec gradient(const ScalarFn& fn, const Vec& z) {
  if (!is_smooth(fn))
    throw UnsupportedError("gradient requested for a non-smooth function");
  return subdiff(fn, z).generators.col(0);
}

Vec descent_subgradient(const ScalarFn& fn, const Vec& z) {
  if (fn.kind != FnKind::MaxOfAffine) return gradient(fn, z);
  const auto& pieces = std::get<std::vector<AffineParams>>(fn.params);
  check_arity(fn, z);
  int best = 0;
  double bv = affine_value(pieces[0], z, fn.n, fn.blocks);
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    const double v = affine_value(pieces[i], z, fn.n, fn.blocks);
    if (v > bv) {
      bv = v;
      best = static_cast<int>(i);
    }
  }
  return affine_gradient(pieces[best], fn.n, fn.blocks);
}

double subgradient_violation(const ScalarFn& fn, const Vec& z0, const Vec& g,
                             int samples, std::uint64_t seed) {
  check_arity(fn, z0);
  if (g.size() != fn.dim())
    throw DimensionError("subgradient has wrong dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double f0 = eval(fn, z0);
  double worst = 0.0;
  Vec z(z0.size());
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < z.size(); ++i) z[i] = z0[i] + u(rng);
    const double lhs = eval(fn, z) - f0;
    const double rhs = g.dot(z - z0);
    worst = std::max(worst, rhs - lhs);
  }
  return worst;
}

bool check_subgradient_inequality(const ScalarFn& fn, const Vec& z0,
                                  const Vec& g, int samples,
                                  std::uint64_t seed) {
  return subgradient_violation(fn, z0, g, samples, seed) <= kSubgradientSlack;
}

}  // namespace sodi
