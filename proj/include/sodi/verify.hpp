#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sodi/certificate.hpp"
#include "sodi/problem.hpp"

namespace sodi {

inline constexpr double kTrivialTol = 1e-10;

struct ConditionResult {
  std::string label;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
  // Whether the residual scales linearly when the whole certificate is
  // scaled; the boundary condition against the terminal-cost subdifferential
  // is the one that does not.
  bool homogeneous = false;
  Vec node_residuals;  // per-node profile where node-wise, else empty
  int first_node = 0;  // grid node the profile starts at
};

struct VerificationReport {
  std::string theorem;  // T3.1, T4.1, T4.2, T4.3, T5.1, C5.1, T5.2, C5.2,
                        // C5.3 or T5.3
  std::vector<ConditionResult> conditions;
  double nontriviality = 0.0;
  double trivial_tol = kTrivialTol;
  bool pass = false;
  std::vector<std::string> notes;

  const ConditionResult* find(const std::string& label) const;
};

struct VerifyOptions {
  double tol = 1e-6;
  // Constraint-activity threshold; the checkers use max(eps_act, tol) so
  // finite-difference trajectories keep their active sets.
  double eps_act = kDefaultActiveTol;
  bool use_analytic = true;  // honor analytic derivative grids when present
  int boundary_samples = 200;
  std::uint64_t seed = 20240901ULL;
  // Analytic trajectory derivatives (n x N+1); finite differences otherwise.
  std::optional<Mat> traj_d1, traj_d2;
};

// Discrete condition sets --------------------------------------------------

// Full second-order adjoint inclusion for the discretized problem, checked
// with the supplied multiplier weights (exact vector algebra for smooth
// constraints).
VerificationReport verify_discrete(const DiscreteProblem& dp,
                                   const GridTrajectory& traj,
                                   const Certificate& cert,
                                   const VerifyOptions& opts = {});

// Same conditions in the composed-constraint coordinates; the dual route
// through the subgradient transform.
VerificationReport verify_discrete_t31(const DiscreteProblem& dp,
                                       const GridTrajectory& traj,
                                       const Certificate& cert,
                                       const VerifyOptions& opts = {});

// Reduced discrete forms for constraints independent of v1 (W1) or v2 (W2).
VerificationReport verify_discrete_w1(const DiscreteProblem& dp,
                                      const GridTrajectory& traj,
                                      const Certificate& cert,
                                      const VerifyOptions& opts = {});
VerificationReport verify_discrete_w2(const DiscreteProblem& dp,
                                      const GridTrajectory& traj,
                                      const Certificate& cert,
                                      const VerifyOptions& opts = {});

// Continuous condition sets ----------------------------------------------

VerificationReport verify_continuous(const ContinuousProblem& pc,
                                     const GridTrajectory& traj,
                                     const Certificate& cert,
                                     const VerifyOptions& opts = {});
VerificationReport verify_special_w1(const ContinuousProblem& pc,
                                     const GridTrajectory& traj,
                                     const Certificate& cert,
                                     const VerifyOptions& opts = {});
VerificationReport verify_special_w2(const ContinuousProblem& pc,
                                     const GridTrajectory& traj,
                                     const Certificate& cert,
                                     const VerifyOptions& opts = {});
VerificationReport verify_polyhedral(const ContinuousProblem& pc,
                                     const GridTrajectory& traj,
                                     const Certificate& cert,
                                     const VerifyOptions& opts = {});

struct NonconvexOptions : VerifyOptions {
  double box_halfwidth = 5.0;
  int sample_count = 1000;
};

VerificationReport verify_nonconvex(const ContinuousProblem& pc,
                                    const GridTrajectory& traj,
                                    const Certificate& cert,
                                    const NonconvexOptions& opts = {});

// Routes a condition-set identifier (T3.1 .. T5.3) to its checker.
VerificationReport verify_theorem(const std::string& theorem_id,
                                  const ContinuousProblem& pc,
                                  const GridTrajectory& traj,
                                  const Certificate& cert,
                                  const VerifyOptions& opts = {});

// Empirical consequence check --------------------------------------------

struct SufficiencyConfig {
  int target_samples = 1000;
  int max_attempts = 200000;
  double amplitude = 0.1;
  int modes = 3;
  std::uint64_t seed = 1;
  double feas_tol = 1e-12;  // strict feasibility for accepted samples
};

struct SufficiencyReport {
  int accepted = 0;
  int attempts = 0;
  double acceptance_rate = 0.0;
  double min_gap = 0.0;  // min over samples of J(sample) - J(traj_opt)
  int violations = 0;    // samples with gap < -1e-9
  bool sampling_failed = false;
  bool pass = false;
  double j_opt = 0.0;
};

// Draws random feasible trajectories around traj_opt (smooth perturbations
// vanishing at the two pinned nodes; infeasible draws discarded) and checks
// J >= J(traj_opt) - 1e-9 for each.
SufficiencyReport sufficiency_sampling_test(const ContinuousProblem& pc,
                                            const GridTrajectory& traj_opt,
                                            const SufficiencyConfig& cfg = {});

// Finite-difference grids over trajectory columns: central stencils inside,
// second-order one-sided at the ends.
Mat fd_first(const Mat& g, double delta);
Mat fd_second(const Mat& g, double delta);

}  // namespace sodi
