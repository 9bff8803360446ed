#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tsf/linalg.hpp"

namespace tsf {

/// Symmetric sigma-point set: 2n+1 points with w0 = lambda/(lambda+n).
/// The weighted mean and covariance reproduce (mean, cov) exactly.
struct SigmaSet {
  std::vector<VectorXd> points;
  VectorXd weights;
};

inline SigmaSet sigma_points(const VectorXd& mean, const MatrixXd& cov, double lambda) {
  const int n = static_cast<int>(mean.size());
  const MatrixXd l = safe_cholesky(cov);
  const double scale = std::sqrt(static_cast<double>(n) + lambda);
  SigmaSet set;
  set.points.resize(2 * n + 1);
  set.weights.resize(2 * n + 1);
  set.points[0] = mean;
  set.weights(0) = lambda / (lambda + n);
  for (int i = 0; i < n; ++i) {
    set.points[1 + i] = mean + scale * l.col(i);
    set.points[1 + n + i] = mean - scale * l.col(i);
    set.weights(1 + i) = 0.5 / (lambda + n);
    set.weights(1 + n + i) = 0.5 / (lambda + n);
  }
  return set;
}

}  // namespace tsf
