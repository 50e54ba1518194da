#include "sodi/solver.hpp"

#include <Eigen/QR>

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "sodi/nnls.hpp"

namespace sodi {

void SolverConfig::validate() const {
  if (penalty_growth <= 1.0)
    throw ConfigError("penalty growth factor must exceed 1");
  if (grad_tol <= 0.0 || feas_tol <= 0.0 || penalty_init <= 0.0)
    throw ConfigError("solver tolerances must be positive");
  if (!(backtrack_shrink > 0.0 && backtrack_shrink < 1.0))
    throw ConfigError("backtracking shrink factor must lie in (0, 1)");
  if (max_outer < 1 || max_inner < 1)
    throw ConfigError("iteration limits must be positive");
}

namespace {

class AlProblem {
 public:
  AlProblem(const DiscreteProblem& dp) : dp_(dp) {
    const auto& pc = dp.source;
    for (const auto& c : pc.constraints) {
      if (c.fn.kind == FnKind::SmoothBlackBox && !is_smooth(c.fn))
        throw UnsupportedError(
            "solver needs smooth or max-of-affine constraints");
    }
    if (!is_smooth(pc.q) && pc.q.kind != FnKind::MaxOfAffine)
      throw UnsupportedError("solver needs a smooth or max-of-affine q");
  }

  int rows() const { return dp_.rows(); }
  int m() const { return dp_.m(); }
  int n() const { return dp_.source.n; }
  int N() const { return dp_.grid.steps(); }

  void phi_all(const Mat& x, Mat& phi) const {
    for (int i = 0; i < rows(); ++i) {
      const Vec z = point(x, i);
      for (int k = 0; k < m(); ++k)
        phi(i, k) = eval(dp_.source.constraints[k].fn, z);
    }
  }

  double objective(const Mat& x) const {
    double sum = 0.0;
    const double d = dp_.grid.delta();
    for (int i = 2; i <= N() - 2; ++i)
      sum += d * dp_.source.f.value(x.col(i), dp_.grid.time(i));
    return sum + eval(dp_.source.q, x.col(N() - 1));
  }

  void objective_gradient(const Mat& x, Mat& grad) const {
    const double d = dp_.grid.delta();
    for (int i = 2; i <= N() - 2; ++i)
      grad.col(i) += d * dp_.source.f.grad(x.col(i), dp_.grid.time(i));
    grad.col(N() - 1) += descent_subgradient(dp_.source.q, x.col(N() - 1));
  }

  // Adds w times the gradient of Phi row i, constraint k, to `grad`.
  void add_phi_gradient(const Mat& x, int i, int k, double w,
                        Mat& grad) const {
    const Vec z = point(x, i);
    const Vec g = descent_subgradient(dp_.source.constraints[k].fn, z);
    const int nn = n();
    const double inv = dp_.grid.inv_delta();
    const Vec pv2 = g.segment(2 * nn, nn) * (inv * inv);
    const Vec pv1 = g.segment(nn, nn) * inv - 2.0 * pv2;
    const Vec px = g.segment(0, nn) - pv1 - pv2;
    grad.col(i) += w * px;
    grad.col(i + 1) += w * pv1;
    grad.col(i + 2) += w * pv2;
  }

  double augmented_value(const Mat& x, const Mat& lambda, double rho) const {
    double val = objective(x);
    Mat phi(rows(), m());
    phi_all(x, phi);
    for (int i = 0; i < rows(); ++i)
      for (int k = 0; k < m(); ++k) {
        const double t = std::max(0.0, lambda(i, k) + rho * phi(i, k));
        val += (t * t - lambda(i, k) * lambda(i, k)) / (2.0 * rho);
      }
    return val;
  }

  void augmented_gradient(const Mat& x, const Mat& lambda, double rho,
                          Mat& grad) const {
    grad.setZero();
    objective_gradient(x, grad);
    for (int i = 0; i < rows(); ++i) {
      const Vec z = point(x, i);
      for (int k = 0; k < m(); ++k) {
        const double phi = eval(dp_.source.constraints[k].fn, z);
        const double w = std::max(0.0, lambda(i, k) + rho * phi);
        if (w != 0.0) add_phi_gradient(x, i, k, w, grad);
      }
    }
    grad.col(0).setZero();
    grad.col(1).setZero();
  }

  // Gradient of the plain Lagrangian J + <lambda, Phi> over the free nodes.
  void lagrangian_gradient(const Mat& x, const Mat& lambda, Mat& grad) const {
    grad.setZero();
    objective_gradient(x, grad);
    for (int i = 0; i < rows(); ++i)
      for (int k = 0; k < m(); ++k)
        if (lambda(i, k) != 0.0) add_phi_gradient(x, i, k, lambda(i, k), grad);
    grad.col(0).setZero();
    grad.col(1).setZero();
  }

  Vec point(const Mat& x, int i) const {
    const int nn = n();
    const double inv = dp_.grid.inv_delta();
    Vec z(3 * nn);
    z.segment(0, nn) = x.col(i);
    z.segment(nn, nn) = (x.col(i + 1) - x.col(i)) * inv;
    z.segment(2 * nn, nn) =
        (x.col(i + 2) - 2.0 * x.col(i + 1) + x.col(i)) * (inv * inv);
    return z;
  }

  const DiscreteProblem& dp() const { return dp_; }

 private:
  const DiscreteProblem& dp_;
};

double free_max_norm(const Mat& g) {
  if (g.cols() <= 2) return 0.0;
  return g.rightCols(g.cols() - 2).cwiseAbs().maxCoeff();
}

// Flatten index of node j, coordinate c over the free nodes 2..N.
int flat_index(int j, int c, int n) { return (j - 2) * n + c; }

struct PolishOutcome {
  bool applied = false;
  Mat x;
  Mat lambda;
  double feasibility = 0.0;
  double stationarity = 0.0;
};

using RowSet = std::vector<std::pair<int, int>>;

// One polish attempt for a fixed candidate active set: Gauss-Newton onto the
// active manifold, nonnegative least-squares multipliers, KKT measures.
PolishOutcome polish_attempt(const AlProblem& al, const Mat& x0,
                             RowSet active, const SolverConfig& cfg) {
  PolishOutcome out;
  const int n = al.n(), N = al.N(), rows = al.rows(), m = al.m();
  const int nfree = n * (N - 1);
  Mat x = x0;
  Mat phi(rows, m);

  auto constraint_row_gradient = [&](int i, int k) {
    Mat grad = Mat::Zero(n, N + 1);
    al.add_phi_gradient(x, i, k, 1.0, grad);
    Vec flat = Vec::Zero(nfree);
    for (int j = 2; j <= N; ++j)
      for (int c = 0; c < n; ++c) flat[flat_index(j, c, n)] = grad(c, j);
    return flat;
  };
  auto fit_multipliers = [&](const RowSet& set) {
    Mat jgrad = Mat::Zero(n, N + 1);
    al.objective_gradient(x, jgrad);
    Vec gj = Vec::Zero(nfree);
    for (int j = 2; j <= N; ++j)
      for (int c = 0; c < n; ++c) gj[flat_index(j, c, n)] = jgrad(c, j);
    Mat G(nfree, set.size());
    for (std::size_t a = 0; a < set.size(); ++a)
      G.col(a) = constraint_row_gradient(set[a].first, set[a].second);
    return nnls(G, -gj);
  };

  auto objective_flat_gradient_at = [&](const Mat& xx) {
    Mat jgrad = Mat::Zero(n, N + 1);
    al.objective_gradient(xx, jgrad);
    Vec gj = Vec::Zero(nfree);
    for (int j = 2; j <= N; ++j)
      for (int c = 0; c < n; ++c) gj[flat_index(j, c, n)] = jgrad(c, j);
    return gj;
  };
  // Finite-difference objective Hessian over the free nodes.  Constraint
  // curvature is left to the outer refinement rounds; every constraint in
  // solver scope is affine or piecewise affine anyway.
  auto objective_hessian = [&]() {
    Mat H(nfree, nfree);
    Mat xp = x, xm = x;
    for (int j = 2; j <= N; ++j)
      for (int c = 0; c < n; ++c) {
        const int col = flat_index(j, c, n);
        const double h = 1e-5 * (1.0 + std::abs(x(c, j)));
        xp(c, j) = x(c, j) + h;
        xm(c, j) = x(c, j) - h;
        H.col(col) = (objective_flat_gradient_at(xp) -
                      objective_flat_gradient_at(xm)) /
                     (2.0 * h);
        xp(c, j) = x(c, j);
        xm(c, j) = x(c, j);
      }
    return Mat(((H + H.transpose()) / 2.0));
  };

  std::vector<char> in_active(rows * m, 0);
  for (const auto& [i, k] : active) in_active[i * m + k] = 1;

  for (int round = 0; round < 3; ++round) {
    // Newton-KKT steps: minimize the quadratic objective model subject to
    // the linearized active rows.
    const Mat H = objective_hessian();
    const double reg = 1e-10 * std::max(1.0, H.cwiseAbs().maxCoeff());
    for (int it = 0; it < 6; ++it) {
      al.phi_all(x, phi);
      const int na = static_cast<int>(active.size());
      Vec r(na);
      for (int a = 0; a < na; ++a)
        r[a] = phi(active[a].first, active[a].second);
      const Vec gj = objective_flat_gradient_at(x);

      Mat kkt = Mat::Zero(nfree + na, nfree + na);
      kkt.topLeftCorner(nfree, nfree) =
          H + reg * Mat::Identity(nfree, nfree);
      Vec rhs(nfree + na);
      rhs.segment(0, nfree) = -gj;
      for (int a = 0; a < na; ++a) {
        const Vec ga = constraint_row_gradient(active[a].first,
                                               active[a].second);
        kkt.block(nfree + a, 0, 1, nfree) = ga.transpose();
        kkt.block(0, nfree + a, nfree, 1) = ga;
        rhs[nfree + a] = -r[a];
      }
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(kkt);
      const Vec sol = cod.solve(rhs);
      double dx_norm = 0.0;
      for (int j = 2; j <= N; ++j)
        for (int c = 0; c < n; ++c) {
          const double d = sol[flat_index(j, c, n)];
          x(c, j) += d;
          dx_norm = std::max(dx_norm, std::abs(d));
        }
      if (dx_norm <= 1e-14 && r.size() &&
          r.cwiseAbs().maxCoeff() <= 1e-14)
        break;
      if (dx_norm <= 1e-14 && !r.size()) break;
    }

    // Any inactive row pushed infeasible joins the active set.
    al.phi_all(x, phi);
    bool grew = false;
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < m; ++k)
        if (!in_active[i * m + k] && phi(i, k) > cfg.feas_tol) {
          active.push_back({i, k});
          in_active[i * m + k] = 1;
          grew = true;
        }
    if (!grew) break;
  }

  const NnlsResult fit = fit_multipliers(active);
  Mat lambda = Mat::Zero(rows, m);
  for (std::size_t a = 0; a < active.size(); ++a)
    lambda(active[a].first, active[a].second) = fit.x[a];

  Mat grad(n, N + 1);
  al.lagrangian_gradient(x, lambda, grad);
  al.phi_all(x, phi);
  out.x = x;
  out.lambda = lambda;
  out.stationarity = free_max_norm(grad);
  out.feasibility = std::max(0.0, phi.size() ? phi.maxCoeff() : 0.0);
  out.applied = true;
  return out;
}

// Candidate active sets in increasing aggressiveness: slack-based at the
// iterate, multiplier-augmented, then augmented by a dual fit over every
// row (useful when the descent phase stalled far from the solution but the
// constraint gradients are state-independent).  The first candidate whose
// polish reaches the solver tolerances wins; otherwise the best attempt is
// kept.
PolishOutcome polish_solution(const AlProblem& al, const Mat& x0,
                              const Mat& lambda0, const SolverConfig& cfg) {
  const int rows = al.rows(), m = al.m();
  Mat phi(rows, m);
  al.phi_all(x0, phi);
  const double act_phi = std::max(1e-6, 10.0 * cfg.feas_tol);
  const double lam_scale = std::max(1.0, lambda0.cwiseAbs().maxCoeff());

  RowSet slack_based, with_lambda;
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < m; ++k) {
      if (phi(i, k) >= -act_phi) slack_based.push_back({i, k});
      if (phi(i, k) >= -act_phi || lambda0(i, k) > 1e-9 * lam_scale)
        with_lambda.push_back({i, k});
    }

  std::vector<RowSet> candidates{slack_based};
  if (with_lambda.size() != slack_based.size())
    candidates.push_back(with_lambda);
  RowSet all;
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < m; ++k) all.push_back({i, k});
  if (all.size() != candidates.back().size()) candidates.push_back(all);

  PolishOutcome best;
  double best_measure = std::numeric_limits<double>::infinity();
  for (const RowSet& cand : candidates) {
    const PolishOutcome attempt = polish_attempt(al, x0, cand, cfg);
    const double measure =
        std::max(attempt.feasibility / cfg.feas_tol,
                 attempt.stationarity / cfg.grad_tol);
    if (measure < best_measure) {
      best = attempt;
      best_measure = measure;
    }
    if (attempt.feasibility <= cfg.feas_tol &&
        attempt.stationarity <= cfg.grad_tol)
      break;
  }
  return best;
}

}  // namespace

SolveResult solve(const DiscreteProblem& dp, const SolverConfig& cfg,
                  const std::optional<GridTrajectory>& init) {
  cfg.validate();
  AlProblem al(dp);
  const int n = al.n(), N = al.N(), rows = al.rows(), m = al.m();

  Mat x;
  if (init) {
    if (!(init->grid == dp.grid) || init->n() != n)
      throw DimensionError("initial guess does not match the grid");
    x = init->values;
  } else {
    x = dp.initial_trajectory().values;
  }
  x.col(0) = dp.fixed_x0();
  x.col(1) = dp.fixed_x1();

  Mat lambda = Mat::Zero(rows, m);
  Mat phi(rows, m);
  Mat grad(n, N + 1), trial(n, N + 1);
  double rho = cfg.penalty_init;
  double prev_viol = std::numeric_limits<double>::infinity();
  double step = 1.0;
  double best_stat = std::numeric_limits<double>::infinity();
  int stall = 0;

  SolveResult result(GridTrajectory(dp.grid, x));
  result.history.reserve(cfg.max_outer);

  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    const double omega =
        std::max(cfg.grad_tol, 1e-2 * std::pow(0.1, outer));

    // Inner descent on the augmented Lagrangian.
    double lval = al.augmented_value(x, lambda, rho);
    if (!std::isfinite(lval))
      throw NumericalError("augmented objective is not finite");
    for (int it = 0; it < cfg.max_inner; ++it) {
      al.augmented_gradient(x, lambda, rho, grad);
      const double gnorm = free_max_norm(grad);
      if (gnorm <= omega) break;
      const double gsq = grad.squaredNorm();
      double s = std::min(1.0, step * 2.0);
      bool accepted = false;
      while (s > 1e-20) {
        trial = x - s * grad;
        trial.col(0) = x.col(0);
        trial.col(1) = x.col(1);
        const double ltrial = al.augmented_value(trial, lambda, rho);
        if (ltrial <= lval - cfg.sufficient_decrease * s * gsq) {
          x.swap(trial);
          lval = ltrial;
          step = s;
          accepted = true;
          break;
        }
        s *= cfg.backtrack_shrink;
      }
      if (!accepted) break;
    }

    al.phi_all(x, phi);
    const double viol = std::max(0.0, phi.size() ? phi.maxCoeff() : 0.0);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < m; ++k)
        lambda(i, k) = std::max(0.0, lambda(i, k) + rho * phi(i, k));

    al.lagrangian_gradient(x, lambda, grad);
    const double stat = free_max_norm(grad);
    const double obj = al.objective(x);
    if (!std::isfinite(obj))
      throw NumericalError("objective is not finite");
    result.history.push_back({viol, stat, obj, rho});
    result.outer_iters = outer + 1;

    if (viol <= cfg.feas_tol && stat <= cfg.grad_tol) {
      result.converged = true;
      break;
    }
    // Once feasible, plain descent gains little per outer pass; hand the
    // iterate to the polish step instead of escalating the penalty.
    if (viol <= cfg.feas_tol) {
      if (stat < 0.9 * best_stat) {
        best_stat = stat;
        stall = 0;
      } else if (++stall >= 3) {
        break;
      }
    }
    if (viol > std::max(cfg.feas_tol, 0.25 * prev_viol))
      rho = std::min(rho * cfg.penalty_growth, 1e12);
    prev_viol = viol;
  }

  double feasibility;
  double stationarity;
  al.phi_all(x, phi);
  feasibility = std::max(0.0, phi.size() ? phi.maxCoeff() : 0.0);
  al.lagrangian_gradient(x, lambda, grad);
  stationarity = free_max_norm(grad);

  if (cfg.polish) {
    const PolishOutcome p = polish_solution(al, x, lambda, cfg);
    if (p.applied && p.feasibility <= std::max(feasibility, cfg.feas_tol) &&
        p.stationarity <= std::max(stationarity, cfg.grad_tol)) {
      x = p.x;
      lambda = p.lambda;
      feasibility = p.feasibility;
      stationarity = p.stationarity;
      result.polished = true;
      if (feasibility <= cfg.feas_tol && stationarity <= cfg.grad_tol)
        result.converged = true;
    }
  }

  // The terminal node is untouched by any constraint row when no W_k uses
  // v2; extend it with a constant second difference so reports stay smooth.
  if (!dp.source.any_v2() && N >= 3) {
    x.col(N) = 3.0 * x.col(N - 1) - 3.0 * x.col(N - 2) + x.col(N - 3);
  }

  // A constraint row touching only the two pinned nodes leaves its
  // multiplier undetermined by the reduced problem; extend such rows
  // linearly from their determined neighbours for reporting.
  {
    int maxoff = 0;
    for (const auto& c : dp.source.constraints)
      maxoff = std::max(maxoff, c.deps.v2 ? 2 : (c.deps.v1 ? 1 : 0));
    for (int i = 1 - maxoff; i >= 0; --i)
      if (i + 2 < rows)
        for (int k = 0; k < m; ++k)
          lambda(i, k) = std::max(0.0, 2.0 * lambda(i + 1, k) -
                                           lambda(i + 2, k));
  }

  result.trajectory = GridTrajectory(dp.grid, x);
  result.objective = al.objective(x);
  const FeasibilityTable table =
      feasibility_residuals(dp, result.trajectory);
  result.feasibility = table.max_residual();
  result.stationarity = stationarity;
  result.multipliers_raw = lambda.transpose();  // m x rows
  result.multipliers =
      result.multipliers_raw / (dp.grid.delta() * dp.grid.delta());
  if (!result.converged) {
    std::ostringstream os;
    os << "not converged after " << result.outer_iters
       << " outer iterations: feasibility " << result.feasibility
       << ", stationarity " << result.stationarity;
    result.diagnostics = os.str();
  }
  return result;
}

OracleResult brute_force_oracle(const DiscreteProblem& dp, const Vec& box_lo,
                                const Vec& box_hi, int steps) {
  const int n = dp.source.n, N = dp.grid.steps();
  if (n != 1) throw ConfigError("oracle handles scalar state only");
  if (steps < 2 || steps > 200)
    throw ConfigError("oracle needs 2..200 grid steps per node");
  if (box_lo.size() != N + 1 || box_hi.size() != N + 1)
    throw DimensionError("oracle box needs one interval per grid node");

  // Node N only matters when some constraint reads the second difference.
  const bool need_last = dp.source.any_v2();
  const int first_free = 2;
  const int last_free = need_last ? N : N - 1;
  const int enumerated = last_free - first_free + 1;
  if (enumerated > 4)
    throw ConfigError("oracle enumerates at most 4 free nodes");

  Mat x = dp.initial_trajectory().values;
  x.col(0) = dp.fixed_x0();
  x.col(1) = dp.fixed_x1();

  const double feas_slack = 1e-9;
  double best_obj = std::numeric_limits<double>::infinity();
  Mat best_x = x;
  bool found = false;

  AlProblem al(dp);

  // Depth-first enumeration with row-by-row pruning: once node j is set,
  // every row whose last referenced node is <= j can be rejected early.
  std::function<void(int)> visit = [&](int j) {
    if (j > last_free) {
      double obj = al.objective(x);
      if (obj < best_obj) {
        best_obj = obj;
        best_x = x;
        found = true;
      }
      return;
    }
    const double lo = box_lo[j], hi = box_hi[j];
    for (int s = 0; s < steps; ++s) {
      x(0, j) = lo + (hi - lo) * s / (steps - 1);
      bool feasible = true;
      for (int i = 0; i < dp.rows() && feasible; ++i) {
        const int last_node = need_last ? i + 2 : i + 1;
        if (last_node != j) continue;
        for (int k = 0; k < dp.m(); ++k)
          if (phi_value(dp, k, x.col(i), x.col(i + 1), x.col(i + 2)) >
              feas_slack) {
            feasible = false;
            break;
          }
      }
      if (feasible) visit(j + 1);
    }
  };
  visit(first_free);

  OracleResult out{GridTrajectory(dp.grid, best_x)};
  out.feasible_found = found;
  if (!found) return out;

  if (!need_last)
    out.best.values.col(N) = 3.0 * out.best.values.col(N - 1) -
                             3.0 * out.best.values.col(N - 2) +
                             out.best.values.col(N - 3);
  out.objective = best_obj;

  // Objective Lipschitz bound over the box, times the per-node spacing.
  double lipschitz = 0.0;
  double spacing = 0.0;
  for (int j = first_free; j <= last_free; ++j) {
    double lj = 0.0;
    for (double v : {box_lo[j], 0.5 * (box_lo[j] + box_hi[j]), box_hi[j]}) {
      Vec xv(1);
      xv[0] = v;
      if (j >= 2 && j <= N - 2)
        lj = std::max(lj, dp.grid.delta() *
                              dp.source.f.grad(xv, dp.grid.time(j))
                                  .cwiseAbs()
                                  .maxCoeff());
      if (j == N - 1)
        lj = std::max(
            lj, descent_subgradient(dp.source.q, xv).cwiseAbs().maxCoeff());
    }
    lipschitz += lj;
    spacing = std::max(spacing, (box_hi[j] - box_lo[j]) / (steps - 1));
  }
  out.resolution_error = lipschitz * spacing;
  return out;
}

}  // namespace sodi
