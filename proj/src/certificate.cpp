#include "sodi/certificate.hpp"

#include <cmath>

namespace sodi {

const char* to_string(CertFlavor f) {
  switch (f) {
    case CertFlavor::FullSsdfi: return "full_ssdfi";
    case CertFlavor::W1Reduced: return "w1_reduced";
    case CertFlavor::W2Reduced: return "w2_reduced";
    case CertFlavor::Polyhedral: return "polyhedral";
  }
  return "unknown";
}

CertFlavor flavor_from_string(const std::string& s) {
  if (s == "full_ssdfi") return CertFlavor::FullSsdfi;
  if (s == "w1_reduced") return CertFlavor::W1Reduced;
  if (s == "w2_reduced") return CertFlavor::W2Reduced;
  if (s == "polyhedral") return CertFlavor::Polyhedral;
  throw ConfigError("unknown certificate flavor: " + s);
}

Certificate::Certificate(Grid g, int n_, int m_)
    : grid(g),
      n(n_),
      xstar(Mat::Zero(n_, g.nodes())),
      ustar(Mat::Zero(n_, g.nodes())),
      psistar(Mat::Zero(n_, g.nodes())),
      alphas(Mat::Zero(m_, g.nodes())),
      last_constrained_node(g.steps() - 2) {}

double Certificate::max_component_norm() const {
  double v = 0.0;
  if (xstar.size()) v = std::max(v, xstar.cwiseAbs().maxCoeff());
  if (ustar.size()) v = std::max(v, ustar.cwiseAbs().maxCoeff());
  if (psistar.size()) v = std::max(v, psistar.cwiseAbs().maxCoeff());
  if (alphas.size()) v = std::max(v, alphas.cwiseAbs().maxCoeff());
  return v;
}

CertFlavor flavor_for(const ContinuousProblem& pc) {
  if (!pc.any_v2()) return CertFlavor::W2Reduced;
  if (!pc.any_v1()) return CertFlavor::W1Reduced;
  bool all_affine = true;
  for (const auto& c : pc.constraints)
    if (c.fn.kind != FnKind::Affine) all_affine = false;
  if (all_affine && pc.f.is_identically_zero()) return CertFlavor::Polyhedral;
  return CertFlavor::FullSsdfi;
}

Mat multipliers_from_raw(const Mat& raw_lambda, const Grid& grid,
                         CertFlavor flavor) {
  const double d = grid.delta();
  switch (flavor) {
    case CertFlavor::W2Reduced:
      return raw_lambda / d;
    case CertFlavor::FullSsdfi:
    case CertFlavor::W1Reduced:
    case CertFlavor::Polyhedral:
      return raw_lambda / (d * d);
  }
  return raw_lambda;
}

namespace {

// Gradient blocks of every constraint at row i, summed with the row weights.
struct WeightedGradients {
  Vec gx, gv1, gv2;
};

WeightedGradients weighted_gradients(const DiscreteProblem& dp,
                                     const GridTrajectory& traj,
                                     const Mat& alphas, int i) {
  const int n = dp.source.n;
  WeightedGradients s{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
  const Vec z = constraint_point(dp, traj, i);
  for (int k = 0; k < dp.m(); ++k) {
    const double a = alphas(k, i);
    if (a == 0.0) continue;
    const ScalarFn& fn = dp.source.constraints[k].fn;
    if (!is_smooth(fn))
      throw UnsupportedError(
          "adjoint reconstruction needs smooth constraints; verify a "
          "supplied certificate instead");
    const Vec g = gradient(fn, z);
    s.gx += a * g.segment(0, n);
    s.gv1 += a * g.segment(n, n);
    s.gv2 += a * g.segment(2 * n, n);
  }
  return s;
}

}  // namespace

Certificate reconstruct_adjoints(const DiscreteProblem& dp,
                                 const GridTrajectory& traj, const Mat& alphas,
                                 double mu, CertFlavor flavor) {
  const int N = dp.grid.steps();
  const int n = dp.source.n;
  if (alphas.rows() != dp.m() ||
      (alphas.cols() != dp.rows() && alphas.cols() != dp.grid.nodes()))
    throw DimensionError("multiplier grid must be m x rows");
  if (alphas.size() && alphas.minCoeff() < 0.0)
    throw PreconditionError("multipliers must be nonnegative");

  Certificate cert(dp.grid, n, dp.m());
  cert.mu = mu;
  cert.flavor = flavor;
  cert.alphas.leftCols(dp.rows()) = alphas.leftCols(dp.rows());
  cert.last_constrained_node = N - 2;

  const double d = dp.grid.delta();

  // x*(1) = 0 is imposed, then rows walk backward; the row at t = 1-2delta
  // would re-derive x*(1) and is skipped so the terminal condition stays
  // exact (its defect shows up in the first-component residual instead).
  for (int i = N - 2; i >= 0; --i) {
    const WeightedGradients s =
        weighted_gradients(dp, traj, cert.alphas, i);
    switch (flavor) {
      case CertFlavor::W2Reduced:
        cert.ustar.col(i + 1) = s.gv1;
        break;
      case CertFlavor::W1Reduced:
        if (i + 2 < N) cert.xstar.col(i + 2) = -s.gv2;
        cert.ustar.col(i + 1) = 2.0 * cert.xstar.col(i + 2);
        break;
      case CertFlavor::Polyhedral:
      case CertFlavor::FullSsdfi:
        if (i + 2 < N) cert.xstar.col(i + 2) = -s.gv2;
        cert.ustar.col(i + 1) = d * s.gv1 + 2.0 * cert.xstar.col(i + 2);
        break;
    }
  }

  // u*(0) = 0 per the abstract discrete conditions; the terminal u* column
  // is a linear extension kept for reporting only.
  cert.ustar.col(0).setZero();
  if (flavor == CertFlavor::W2Reduced) {
    cert.ustar.col(0) = 2.0 * cert.ustar.col(1) - cert.ustar.col(2);
  }
  cert.ustar.col(N) = 2.0 * cert.ustar.col(N - 1) - cert.ustar.col(N - 2);

  // psi*(t) = (1/delta)(u*(t) - 2 x*(t+delta)).
  for (int i = 0; i <= N - 1; ++i)
    cert.psistar.col(i) =
        (cert.ustar.col(i) - 2.0 * cert.xstar.col(i + 1)) / d;
  cert.psistar.col(N) =
      2.0 * cert.psistar.col(N - 1) - cert.psistar.col(N - 2);

  return cert;
}

Certificate reconstruct_adjoints(const DiscreteProblem& dp,
                                 const GridTrajectory& traj, const Mat& alphas,
                                 double mu) {
  return reconstruct_adjoints(dp, traj, alphas, mu, flavor_for(dp.source));
}

Certificate certificate_from_multipliers(const DiscreteProblem& dp,
                                         const GridTrajectory& traj,
                                         const Mat& raw_lambda, double mu) {
  const CertFlavor flavor = flavor_for(dp.source);
  const Mat alphas = multipliers_from_raw(raw_lambda, dp.grid, flavor);
  return reconstruct_adjoints(dp, traj, alphas, mu, flavor);
}

Certificate analytic_certificate_example51(int N) {
  Grid grid(N);
  Certificate cert(grid, 1, 1);
  cert.flavor = CertFlavor::W2Reduced;
  cert.mu = 1.0;
  cert.last_constrained_node = N;

  Mat dustar(1, grid.nodes()), dalpha(1, grid.nodes()), d2alpha(1, grid.nodes());
  for (int i = 0; i <= N; ++i) {
    const double t = grid.time(i);
    const double e = std::exp((1.0 - t) / 3.0);
    cert.ustar(0, i) = -e;
    cert.alphas(0, i) = e / 3.0;
    dustar(0, i) = e / 3.0;    // d/dt of -e^{(1-t)/3}
    dalpha(0, i) = -e / 9.0;
    d2alpha(0, i) = e / 27.0;
  }
  // xstar stays identically zero; psistar keeps the defining relation
  // psi* = (u* - 2 x*(t+delta)) / delta.
  const double d = grid.delta();
  for (int i = 0; i <= N; ++i) cert.psistar(0, i) = cert.ustar(0, i) / d;
  cert.analytic.dustar = dustar;
  cert.analytic.dalpha = dalpha;
  cert.analytic.d2alpha = d2alpha;
  cert.analytic.dxstar = Mat::Zero(1, grid.nodes());
  cert.analytic.d2xstar = Mat::Zero(1, grid.nodes());
  return cert;
}

}  // namespace sodi
