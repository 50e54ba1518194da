#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "sodi/errors.hpp"

namespace sodi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Scalar functions of a point z split into up to three blocks (x, v1, v2),
// each block of state dimension n.  These carry constraint functions, running
// costs and terminal costs, together with their subdifferentials represented
// as finite generator lists.

enum class FnKind { Affine, ConvexQuadratic, SmoothBlackBox, MaxOfAffine };

// value(z) = <p0, x> + <p1, v1> - <p2, v2> - d.
//
// Note the third block enters with a minus sign and the offset is subtracted;
// the gradient is (p0, p1, -p2).  Empty coefficient vectors stand for zero
// blocks.
struct AffineParams {
  Vec p0, p1, p2;
  double d = 0.0;
};

// value(z) = z' H z / 2 + <b, z> + c, with H symmetric positive semidefinite.
struct QuadraticParams {
  Mat hessian;
  Vec linear;
  double offset = 0.0;
};

struct BlackBoxParams {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // may be null
};

struct ScalarFn {
  FnKind kind = FnKind::Affine;
  int n = 1;       // state dimension of one block
  int blocks = 1;  // arity over (x, v1, v2), between 1 and 3
  std::variant<AffineParams, QuadraticParams, BlackBoxParams,
               std::vector<AffineParams>>
      params;

  int dim() const { return n * blocks; }

  static ScalarFn affine(int n, int blocks, AffineParams p);
  static ScalarFn convex_quadratic(int n, int blocks, QuadraticParams p);
  static ScalarFn smooth(int n, int blocks,
                         std::function<double(const Vec&)> value,
                         std::function<Vec(const Vec&)> gradient);
  static ScalarFn max_of_affine(int n, int blocks,
                                std::vector<AffineParams> pieces);
  static ScalarFn zero(int n, int blocks);
};

// Finite generator representation of a subdifferential: the set is the convex
// hull of the columns of `generators`.
struct SubdiffSet {
  Mat generators;  // dim x count, count >= 1
  bool is_singleton = false;
};

inline constexpr double kDefaultActiveTol = 1e-8;
inline constexpr double kSubgradientSlack = 1e-10;

double eval(const ScalarFn& fn, const Vec& z);

// Generator list of the subdifferential at z.  For MaxOfAffine the gradient
// of every piece within eps_act * (1 + |max|) of the maximum is included.
SubdiffSet subdiff(const ScalarFn& fn, const Vec& z,
                   double eps_act = kDefaultActiveTol);

bool is_smooth(const ScalarFn& fn);

// Gradient of a smooth kind (throws UnsupportedError otherwise).
Vec gradient(const ScalarFn& fn, const Vec& z);

// A single usable descent subgradient: the gradient for smooth kinds, the
// gradient of the first maximizing piece for MaxOfAffine.
Vec descent_subgradient(const ScalarFn& fn, const Vec& z);

// True iff fn(z) - fn(z0) >= <g, z - z0> - 1e-10 at `samples` points drawn
// uniformly from the box z0 +- 2 per coordinate.  Pure predicate; meaningful
// for convex kinds.
bool check_subgradient_inequality(const ScalarFn& fn, const Vec& z0,
                                  const Vec& g, int samples,
                                  std::uint64_t seed);

// Largest violation max(0, <g, z-z0> - (fn(z) - fn(z0))) over the same
// sampling scheme; 0 means the inequality held at every sample.
double subgradient_violation(const ScalarFn& fn, const Vec& z0, const Vec& g,
                             int samples, std::uint64_t seed);

}  // namespace sodi
