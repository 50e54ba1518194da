#pragma once

#include <cmath>

#include "sodi/problem.hpp"

namespace sodi {

// The scalar benchmark instance solved end to end by the example51 command:
//
//   minimize x(1)  subject to  x(t) - 3 x'(t) <= 0,  x(0) = 1, x'(0) = 1/3.
//
// Optimal arc e^{t/3} with value e^{1/3}; dual arc u*(t) = -e^{(1-t)/3} and
// multiplier (1/3) e^{(1-t)/3}.
ContinuousProblem make_example51_problem();

// The optimal arc sampled on the grid.
GridTrajectory example51_arc(const Grid& grid);

inline double example51_arc_value(double t) { return std::exp(t / 3.0); }
inline double example51_dual_u(double t) {
  return -std::exp((1.0 - t) / 3.0);
}
inline double example51_multiplier(double t) {
  return std::exp((1.0 - t) / 3.0) / 3.0;
}

}  // namespace sodi
