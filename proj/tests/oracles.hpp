// Test-only reference implementations: slow quadrature and matrix-function
// routes kept independent of the closed forms they check.
#pragma once

#include <Eigen/Dense>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "tsf/lie_core.hpp"
#include "tsf/linalg.hpp"

namespace tsf::oracle {

/// Jbar(adbar) = int_0^1 exp(-s adbar) ds by Gauss-Legendre quadrature.
inline MatrixXd gl_jbar(const MatrixXd& adbar_mat, int nodes = 64) {
  const auto [x, w] = gauss_legendre(nodes, 0.0, 1.0);
  MatrixXd sum = MatrixXd::Zero(adbar_mat.rows(), adbar_mat.cols());
  for (int i = 0; i < nodes; ++i) {
    sum += w[i] * MatrixXd(-x[i] * adbar_mat).exp();
  }
  return sum;
}

/// Wbar(adbar) = (int_0^1 exp(s adbar) ds)^{-1} by quadrature and LU.
inline MatrixXd gl_wbar(const MatrixXd& adbar_mat, int nodes = 64) {
  return gl_jbar(-adbar_mat, nodes).inverse();
}

/// Nested double quadrature of N(delta, u).
inline Matrix3d gl_n_matrix(const Vector3d& delta, const Vector3d& u, int nodes = 64) {
  const Matrix3d a = skew(delta);
  const auto [tx, tw] = gauss_legendre(nodes, 0.0, 1.0);
  Matrix3d n = Matrix3d::Zero();
  for (int i = 0; i < nodes; ++i) {
    const auto [sx, sw] = gauss_legendre(nodes, 0.0, tx[i]);
    Vector3d inner = Vector3d::Zero();
    for (int j = 0; j < nodes; ++j) {
      inner += sw[j] * (Matrix3d(MatrixXd(-sx[j] * a).exp()) * u);
    }
    n += tw[i] * Matrix3d(MatrixXd(tx[i] * a).exp()) * skew(inner);
  }
  return n;
}

/// BCH through the matrix exponential and principal matrix logarithm.
inline VectorXd matlog_bch(const LieAlgebraBasis& basis, const VectorXd& xi1,
                           const VectorXd& xi2) {
  const MatrixXd g = MatrixXd(basis.matrize(xi1)).exp() * MatrixXd(basis.matrize(xi2)).exp();
  return basis.vectorize(g.log(), 1e-6);
}

/// int_0^1 exp(-sA) ds and int_0^1 s exp(-sA) ds by quadrature.
inline MatrixXd gl_int_exp(const MatrixXd& a, int nodes = 64) {
  const auto [x, w] = gauss_legendre(nodes, 0.0, 1.0);
  MatrixXd sum = MatrixXd::Zero(a.rows(), a.cols());
  for (int i = 0; i < nodes; ++i) sum += w[i] * MatrixXd(-x[i] * a).exp();
  return sum;
}
inline MatrixXd gl_int_s_exp(const MatrixXd& a, int nodes = 64) {
  const auto [x, w] = gauss_legendre(nodes, 0.0, 1.0);
  MatrixXd sum = MatrixXd::Zero(a.rows(), a.cols());
  for (int i = 0; i < nodes; ++i) sum += w[i] * x[i] * MatrixXd(-x[i] * a).exp();
  return sum;
}

inline std::mt19937& test_rng() {
  static std::mt19937 rng(0x5eed);
  return rng;
}

inline VectorXd randn(int n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = d(test_rng());
  return v;
}

/// Tangent draw whose rotational head has norm inside (lo, hi).
inline VectorXd randn_rot_bounded(int n, double lo, double hi, double tail_scale = 1.0) {
  std::uniform_real_distribution<double> ur(lo, hi);
  VectorXd v = randn(n, tail_scale);
  Vector3d head = randn(3).head<3>();
  head = ur(test_rng()) * head.normalized();
  v.head(3) = head;
  return v;
}

}  // namespace tsf::oracle
