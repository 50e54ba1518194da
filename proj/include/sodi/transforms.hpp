#pragma once

#include <utility>

#include "sodi/functions.hpp"

namespace sodi {

// A subgradient of a three-block function, kept as named blocks.
struct SubgradTriple {
  Vec xs, v1s, v2s;

  Vec stacked() const;
  static SubgradTriple from_stacked(const Vec& g, int n);
};

// The exact linear map taking a subgradient of the composed constraint Phi to
// the corresponding subgradient of W at the difference-substituted point:
//   (xs + v1s + v2s, delta v1s + 2 delta v2s, delta^2 v2s).
SubgradTriple phi_to_w(const SubgradTriple& g, double delta);

// Unique inverse of phi_to_w (the map is triangular and invertible for
// delta > 0).
SubgradTriple w_to_phi(const SubgradTriple& g, double delta);

// Reduction for constraints independent of v1.  Requires v1s = -2 v2s
// within 1e-10; returns (xs - v2s, delta^2 v2s).
std::pair<Vec, Vec> reduced_to_w1(const SubgradTriple& g, double delta);

// Reduction for constraints independent of v2.  Requires v2s = 0 within
// 1e-10; returns (xs + v1s, delta v1s).
std::pair<Vec, Vec> reduced_to_w2(const SubgradTriple& g, double delta);

// A finitely generated cone; every nonnegative combination of the columns is
// a member.
struct ConeGenerators {
  Mat generators;  // dim x count (count may be zero)
};

struct ConeMembership {
  bool member = false;
  Vec coefficients;  // one weight per generator, all >= 0
  double residual = 0.0;
};

// Nonnegative-least-squares membership test: member iff the best nonnegative
// combination reconstructs `target` within tol * (1 + |target|).
ConeMembership cone_membership(const Vec& target, const ConeGenerators& cone,
                               double tol = 1e-9);

// Distance from `target` to the fixed-weight set sum_k alpha_k * conv(G_k).
// Exact algebra when every group is a singleton, augmented NNLS otherwise.
double weighted_hull_distance(const Vec& target,
                              const std::vector<Mat>& groups,
                              const Vec& alphas);

}  // namespace sodi
