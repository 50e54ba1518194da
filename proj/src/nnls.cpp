#include "sodi/nnls.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <vector>

namespace sodi {

// Lawson-Hanson active-set iteration.  Columns enter the passive set by the
// largest dual value and leave whenever the passive least-squares solution
// turns a coefficient nonpositive.
NnlsResult nnls(const Mat& A, const Vec& b, double tol, int max_iter) {
  const int k = static_cast<int>(A.cols());
  NnlsResult out;
  out.x = Vec::Zero(k);
  out.iterations = 0;
  if (k == 0) {
    out.residual = b.norm();
    return out;
  }
  if (max_iter <= 0) max_iter = 5 * k + 50;

  const double scale =
      std::max({1.0, b.cwiseAbs().maxCoeff(), A.cwiseAbs().maxCoeff()});
  std::vector<char> passive(k, 0);
  std::vector<char> banned(k, 0);  // degenerate columns, skipped afterwards
  Vec x = Vec::Zero(k);
  Vec resid = b;

  std::vector<int> idx;
  auto passive_indices = [&]() {
    idx.clear();
    for (int i = 0; i < k; ++i)
      if (passive[i]) idx.push_back(i);
  };
  auto solve_passive = [&]() {
    Mat Ap(A.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) Ap.col(j) = A.col(idx[j]);
    return Ap.colPivHouseholderQr().solve(b).eval();
  };

  while (out.iterations++ < max_iter) {
    const Vec w = A.transpose() * resid;
    int best = -1;
    double best_w = tol * scale;
    for (int i = 0; i < k; ++i)
      if (!passive[i] && !banned[i] && w[i] > best_w) {
        best_w = w[i];
        best = i;
      }
    if (best < 0) break;
    passive[best] = 1;

    int guard = 0;
    while (true) {
      passive_indices();
      if (idx.empty()) break;
      const Vec z = solve_passive();
      double zmin = z[0];
      for (std::size_t j = 1; j < idx.size(); ++j)
        zmin = std::min(zmin, z[j]);
      if (zmin > 0.0) {
        for (std::size_t j = 0; j < idx.size(); ++j) x[idx[j]] = z[j];
        break;
      }
      if (++guard > static_cast<int>(idx.size()) + 2) {
        // Degenerate entering column; ban it for the rest of the solve.
        passive[best] = 0;
        banned[best] = 1;
        x[best] = 0.0;
        break;
      }
      double alpha = 1.0;
      for (std::size_t j = 0; j < idx.size(); ++j)
        if (z[j] <= 0.0) {
          const double denom = x[idx[j]] - z[j];
          if (denom > 0.0) alpha = std::min(alpha, x[idx[j]] / denom);
        }
      for (std::size_t j = 0; j < idx.size(); ++j)
        x[idx[j]] += alpha * (z[j] - x[idx[j]]);
      bool removed_best = false;
      for (std::size_t j = 0; j < idx.size(); ++j)
        if (x[idx[j]] <= 1e-14 * scale || z[j] <= 0.0) {
          if (x[idx[j]] <= 1e-14 * scale) {
            x[idx[j]] = 0.0;
            passive[idx[j]] = 0;
            if (idx[j] == best) removed_best = true;
          }
        }
      if (removed_best) break;
    }
    resid = b - A * x;
  }

  out.x = x;
  out.residual = (b - A * x).norm();
  return out;
}

}  // namespace sodi
