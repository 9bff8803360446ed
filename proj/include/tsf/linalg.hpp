#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <utility>
#include <vector>

#include "tsf/errors.hpp"

namespace tsf {

using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using Matrix5d = Eigen::Matrix<double, 5, 5>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Cross-product matrix: skew(a) * b = a x b.
inline Matrix3d skew(const Vector3d& a) {
  Matrix3d s;
  // clang-format off
  s <<     0.0, -a.z(),  a.y(),
         a.z(),    0.0, -a.x(),
        -a.y(),  a.x(),    0.0;
  // clang-format on
  return s;
}

/// Inverse of skew(); assumes the argument is antisymmetric.
inline Vector3d unskew(const Matrix3d& s) {
  return Vector3d(s(2, 1), s(0, 2), s(1, 0));
}

/// Rodrigues' rotation formula, exp([w]_x).
inline Matrix3d so3_exp(const Vector3d& w) {
  const double t2 = w.squaredNorm();
  const Matrix3d wx = skew(w);
  double a, b;
  if (t2 < 1e-16) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    const double s2 = std::sin(0.5 * t);
    b = 2.0 * s2 * s2 / t2;
  }
  return Matrix3d::Identity() + a * wx + b * wx * wx;
}

/// Principal logarithm of a rotation matrix; angle in [0, pi).
/// Throws CutLocus when the angle is within tol of pi.
inline Vector3d so3_log(const Matrix3d& R, double tol = 1e-9) {
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta >= M_PI - tol) {
    throw CutLocus("so3_log: rotation angle within tolerance of pi");
  }
  if (theta < 1e-10) {
    // log(R) ~ (R - R^T)/2 for small angles
    return unskew(0.5 * (R - R.transpose()));
  }
  return unskew((theta / (2.0 * std::sin(theta))) * (R - R.transpose()));
}

inline MatrixXd symmetrize(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

/// Lower Cholesky factor with a single jitter retry (eps = 1e-12 trace/n).
/// An exactly zero matrix factors to zero. Throws CholeskyFail otherwise.
inline MatrixXd safe_cholesky(const MatrixXd& p) {
  if (p.isZero(0.0)) return MatrixXd::Zero(p.rows(), p.cols());
  Eigen::LLT<MatrixXd> llt(p);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double eps = 1e-12 * p.trace() / static_cast<double>(p.rows());
  Eigen::LLT<MatrixXd> retry(p + eps * MatrixXd::Identity(p.rows(), p.cols()));
  if (retry.info() == Eigen::Success) return retry.matrixL();
  throw CholeskyFail("safe_cholesky: matrix not positive-definite after jitter");
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [a, b].
/// Newton iteration on Legendre polynomials; n up to a few hundred.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a,
                                                                          double b) {
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    x[i] = xm - xl * x[i];
    w[i] *= xl;
  }
  return {x, w};
}

}  // namespace tsf
