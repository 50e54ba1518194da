#pragma once

#include <optional>

#include "sodi/problem.hpp"
#include "sodi/transforms.hpp"

namespace sodi {

enum class CertFlavor { FullSsdfi, W1Reduced, W2Reduced, Polyhedral };

const char* to_string(CertFlavor f);
CertFlavor flavor_from_string(const std::string& s);

// Optional closed-form derivative grids.  When present the checkers use them
// instead of finite differences.
struct CertificateDerivatives {
  std::optional<Mat> dxstar, d2xstar, dustar, dpsistar;
  std::optional<Mat> dalpha, d2alpha;
};

// The object every condition checker consumes: adjoint grids, multiplier
// grids and the cost multiplier mu.
//
// All grids span nodes 0..N.  For certificates reconstructed from discrete
// multipliers the nodes beyond `last_constrained_node` only carry
// extrapolations kept for reporting, and psistar satisfies
// psistar(t) = (1/delta)(ustar(t) - 2 xstar(t+delta)) by construction.
// Hand-built continuous certificates may supply psistar directly.
struct Certificate {
  Grid grid;
  int n = 1;
  double mu = 1.0;
  CertFlavor flavor = CertFlavor::FullSsdfi;
  Mat xstar, ustar, psistar;  // n x (N+1)
  Mat alphas;                 // m x (N+1), zero beyond the constrained range
  int last_constrained_node = 0;
  CertificateDerivatives analytic;

  Certificate(Grid g, int n_, int m_);
  int m() const { return static_cast<int>(alphas.rows()); }

  // Max norm across all components (x*, u*, psi*, alpha); the nontriviality
  // measure.
  double max_component_norm() const;
};

// Flavor the problem structure calls for: W2 when no constraint uses v2,
// W1 when none uses v1, polyhedral when everything is affine with f == 0.
CertFlavor flavor_for(const ContinuousProblem& pc);

// Backward reconstruction of the adjoint grids from multiplier estimates.
//
// `alphas` is m x rows (rows = N-1) in the flavor-consistent scaling (see
// certificate_from_multipliers for the raw-multiplier entry point).  The
// recursion imposes x*(1) = 0 and walks constraint rows backward; the first
// inclusion component is never used for construction and remains a residual
// for the checkers.  Requires every constraint smooth along the trajectory.
Certificate reconstruct_adjoints(const DiscreteProblem& dp,
                                 const GridTrajectory& traj, const Mat& alphas,
                                 double mu, CertFlavor flavor);

// Convenience overload picking the flavor from the problem structure.
Certificate reconstruct_adjoints(const DiscreteProblem& dp,
                                 const GridTrajectory& traj, const Mat& alphas,
                                 double mu);

// Scale raw inequality multipliers lambda (one per constraint row) into the
// grid multipliers the reconstruction consumes: lambda/delta^2 for the full
// and W1 forms, lambda/delta for the W2 form.
Mat multipliers_from_raw(const Mat& raw_lambda, const Grid& grid,
                         CertFlavor flavor);

Certificate certificate_from_multipliers(const DiscreteProblem& dp,
                                         const GridTrajectory& traj,
                                         const Mat& raw_lambda, double mu);

// Closed-form dual data for the scalar exponential instance solved end to end
// by the example51 command: u*(t) = -e^{(1-t)/3}, alpha(t) = (1/3)e^{(1-t)/3},
// x* = 0, flavor W2.  Analytic derivative grids included.
Certificate analytic_certificate_example51(int N);

}  // namespace sodi
