#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "sodi/certificate.hpp"
#include "sodi/problem.hpp"

namespace sodi {

using ordered_json = nlohmann::ordered_json;

// Closed-form reference solutions a problem file may carry: scalar
// exponentials c e^{r t} or polynomials in t.
struct AnalyticSolution {
  enum class Kind { Exp, Poly };
  Kind kind = Kind::Exp;
  double coef = 1.0;
  double rate = 0.0;
  std::vector<double> coeffs;

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  GridTrajectory sample(const Grid& grid) const;
};

struct ProblemFile {
  ContinuousProblem problem;
  std::optional<AnalyticSolution> analytic;
  std::string name;
};

// Strict schema: unknown keys are rejected, affine depends_on tags must agree
// with the zero coefficient blocks.
ProblemFile parse_problem_json(const std::string& text);
ProblemFile load_problem(const std::string& path);
ordered_json problem_to_json(const ProblemFile& pf);

// Canonical emission: fixed key order as built, floats at 17 significant
// digits, so identical inputs reproduce identical bytes.
std::string canonical_dump(const ordered_json& j);
std::string format_double(double v);

void save_text(const std::string& path, const std::string& text);
std::string load_text(const std::string& path);

// Trajectory CSV: header "t,x1,..,xn", one row per node.
std::string trajectory_to_csv(const GridTrajectory& traj);
GridTrajectory trajectory_from_csv(const std::string& text);

ordered_json certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const ordered_json& j);
Certificate load_certificate(const std::string& path);

// Sidecar table with the trajectory, its difference grids, multipliers and
// adjoint grids; cells outside a grid's defined range stay empty.
std::string run_csv(const DiscreteProblem& dp, const GridTrajectory& traj,
                    const Certificate* cert);

}  // namespace sodi
