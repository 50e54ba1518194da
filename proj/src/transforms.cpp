#include "sodi/transforms.hpp"

#include "sodi/nnls.hpp"

namespace sodi {

namespace {

void check_triple(const SubgradTriple& g) {
  if (g.xs.size() != g.v1s.size() || g.xs.size() != g.v2s.size())
    throw DimensionError("subgradient triple blocks must share dimension");
}

void check_delta(double delta) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
}

}  // namespace

Vec SubgradTriple::stacked() const {
  Vec g(xs.size() + v1s.size() + v2s.size());
  g << xs, v1s, v2s;
  return g;
}

SubgradTriple SubgradTriple::from_stacked(const Vec& g, int n) {
  if (g.size() != 3 * n)
    throw DimensionError("stacked subgradient must have dimension 3n");
  return SubgradTriple{g.segment(0, n), g.segment(n, n), g.segment(2 * n, n)};
}

SubgradTriple phi_to_w(const SubgradTriple& g, double delta) {
  check_triple(g);
  check_delta(delta);
  SubgradTriple out;
  out.xs = g.xs + g.v1s + g.v2s;
  out.v1s = delta * g.v1s + 2.0 * delta * g.v2s;
  out.v2s = delta * delta * g.v2s;
  return out;
}

SubgradTriple w_to_phi(const SubgradTriple& g, double delta) {
  check_triple(g);
  check_delta(delta);
  SubgradTriple out;
  out.v2s = g.v2s / (delta * delta);
  out.v1s = g.v1s / delta - 2.0 * out.v2s;
  out.xs = g.xs - out.v1s - out.v2s;
  return out;
}

std::pair<Vec, Vec> reduced_to_w1(const SubgradTriple& g, double delta) {
  check_triple(g);
  check_delta(delta);
  if ((g.v1s + 2.0 * g.v2s).cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError(
        "w1 reduction requires the side condition v1* = -2 v2*");
  return {g.xs - g.v2s, delta * delta * g.v2s};
}

std::pair<Vec, Vec> reduced_to_w2(const SubgradTriple& g, double delta) {
  check_triple(g);
  check_delta(delta);
  if (g.v2s.cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError(
        "w2 reduction requires the side condition v2* = 0");
  return {g.xs + g.v1s, delta * g.v1s};
}

ConeMembership cone_membership(const Vec& target, const ConeGenerators& cone,
                               double tol) {
  ConeMembership out;
  if (cone.generators.cols() == 0) {
    out.coefficients = Vec();
    out.residual = target.norm();
    out.member = out.residual <= tol;  // the cone {0}
    return out;
  }
  if (cone.generators.rows() != target.size())
    throw DimensionError("cone generators and target must share dimension");
  const NnlsResult r = nnls(cone.generators, target);
  out.coefficients = r.x;
  out.residual = r.residual;
  out.member = r.residual <= tol * (1.0 + target.norm());
  return out;
}

double weighted_hull_distance(const Vec& target,
                              const std::vector<Mat>& groups,
                              const Vec& alphas) {
  if (static_cast<int>(groups.size()) != alphas.size())
    throw DimensionError("one weight per generator group required");
  const int dim = static_cast<int>(target.size());

  bool all_singleton = true;
  int total = 0;
  for (const auto& g : groups) {
    if (g.cols() != 1) all_singleton = false;
    total += static_cast<int>(g.cols());
  }
  if (all_singleton) {
    Vec combo = Vec::Zero(dim);
    for (std::size_t k = 0; k < groups.size(); ++k)
      combo += alphas[static_cast<int>(k)] * groups[k].col(0);
    return (target - combo).norm();
  }

  // Convex weights inside each group, scaled to alpha_k, via an augmented
  // nonnegative least-squares system.  The weight rows pin sum_j beta_kj =
  // alpha_k.
  double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  for (const auto& g : groups)
    if (g.size()) scale = std::max(scale, g.cwiseAbs().maxCoeff());
  const double w = 1e6 * scale;

  Mat A = Mat::Zero(dim + static_cast<int>(groups.size()), total);
  Vec b = Vec::Zero(dim + static_cast<int>(groups.size()));
  b.segment(0, dim) = target;
  int col = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    for (int j = 0; j < groups[k].cols(); ++j, ++col) {
      A.col(col).segment(0, dim) = groups[k].col(j);
      A(dim + static_cast<int>(k), col) = w;
    }
    b[dim + static_cast<int>(k)] = w * alphas[static_cast<int>(k)];
  }
  const NnlsResult r = nnls(A, b);
  return (target - A.topRows(dim) * r.x).norm();
}

}  // namespace sodi
