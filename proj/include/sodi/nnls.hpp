#pragma once

#include "sodi/functions.hpp"

namespace sodi {

struct NnlsResult {
  Vec x;            // coefficients, all >= 0
  double residual;  // |A x - b|_2
  int iterations;
};

// Nonnegative least squares, min |A x - b| over x >= 0, by the Lawson-Hanson
// active-set method.  Deterministic; per-call workspaces only.
NnlsResult nnls(const Mat& A, const Vec& b, double tol = 1e-12,
                int max_iter = 0);

}  // namespace sodi
