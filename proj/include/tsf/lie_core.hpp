#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "tsf/errors.hpp"
#include "tsf/linalg.hpp"

namespace tsf {

// ---------------------------------------------------------------------------
// Lie algebra bases and the vectorize / matrize pair
// ---------------------------------------------------------------------------

/// Basis of a matrix Lie algebra: n generators E_1..E_n of size d x d.
/// The Gram matrix of Frobenius inner products is cached for projections.
class LieAlgebraBasis {
 public:
  LieAlgebraBasis(int n, int d, std::vector<MatrixXd> generators)
      : n_(n), d_(d), gens_(std::move(generators)) {
    MatrixXd gram(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        gram(i, j) = (gens_[i].array() * gens_[j].array()).sum();
    gram_solver_.compute(gram);
  }

  int dim() const { return n_; }
  int mat_dim() const { return d_; }
  const MatrixXd& generator(int i) const { return gens_[i]; }

  /// Linear combination sum_i xi_i E_i.
  MatrixXd matrize(const VectorXd& xi) const {
    MatrixXd x = MatrixXd::Zero(d_, d_);
    for (int i = 0; i < n_; ++i) x += xi(i) * gens_[i];
    return x;
  }

  /// Coordinates of x in the basis. Throws NotInAlgebra when the projection
  /// residual exceeds tol (e.g. a non-skew block snuck in).
  VectorXd vectorize(const MatrixXd& x, double tol = 1e-9) const {
    VectorXd b(n_);
    for (int i = 0; i < n_; ++i) b(i) = (gens_[i].array() * x.array()).sum();
    VectorXd xi = gram_solver_.solve(b);
    const double residual = (x - matrize(xi)).cwiseAbs().maxCoeff();
    if (residual > tol) {
      throw NotInAlgebra("vectorize: projection residual " + std::to_string(residual));
    }
    return xi;
  }

  /// Matrix of the vectorized adjoint, column j = V([M(xi), E_j]).
  MatrixXd adbar(const VectorXd& xi) const {
    const MatrixXd x = matrize(xi);
    MatrixXd ad(n_, n_);
    for (int j = 0; j < n_; ++j) {
      ad.col(j) = vectorize(x * gens_[j] - gens_[j] * x, 1e-7);
    }
    return ad;
  }

 private:
  int n_, d_;
  std::vector<MatrixXd> gens_;
  Eigen::LDLT<MatrixXd> gram_solver_;
};

inline MatrixXd mat_exp(const MatrixXd& x) { return x.exp(); }
inline MatrixXd mat_log(const MatrixXd& g) { return g.log(); }

// ---------------------------------------------------------------------------
// Exponential-map Jacobians, series form
// ---------------------------------------------------------------------------

/// Jbar = sum_k (-adbar)^k / (k+1)!, truncated when a term drops below 1e-16.
inline MatrixXd jbar_series(const MatrixXd& adbar_mat) {
  const int n = static_cast<int>(adbar_mat.rows());
  MatrixXd sum = MatrixXd::Identity(n, n);
  MatrixXd term = MatrixXd::Identity(n, n);
  for (int k = 1; k < 80; ++k) {
    term = term * (-adbar_mat) / static_cast<double>(k + 1);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-16) break;
  }
  return sum;
}

/// Wbar = (int_0^1 exp(s adbar) ds)^{-1} = jbar(-adbar)^{-1}.
inline MatrixXd wbar_series(const MatrixXd& adbar_mat) {
  const MatrixXd j = jbar_series(-adbar_mat);
  Eigen::FullPivLU<MatrixXd> lu(j);
  lu.setThreshold(1e-9);
  if (!lu.isInvertible()) {
    throw Singular("wbar_series: defining integral is singular");
  }
  return lu.inverse();
}

// ---------------------------------------------------------------------------
// Closed forms on so(3) and the quaternion algebra s
// ---------------------------------------------------------------------------

/// Jbar_so3(w) = int_0^1 exp(-s [w]_x) ds.
inline Matrix3d jbar_so3(const Vector3d& w) {
  const double t2 = w.squaredNorm();
  const Matrix3d wx = skew(w);
  double b, c;
  if (t2 < 1e-8) {
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double t = std::sqrt(t2);
    b = (1.0 - std::cos(t)) / t2;
    c = (t - std::sin(t)) / (t2 * t);
  }
  return Matrix3d::Identity() - b * wx + c * wx * wx;
}

/// Appendix form of Jbar_so3 built from the pseudo-inverse of [w]_x.
/// Singular at w = 0; callers below the series switch use jbar_so3.
inline Matrix3d jbar_so3_explicit(const Vector3d& w) {
  const double t2 = w.squaredNorm();
  const Matrix3d wx = skew(w);
  return w * w.transpose() / t2 -
         (Matrix3d::Identity() - so3_exp(-w)) * wx / t2;
}

/// Wbar_so3(w) = (int_0^1 exp(s [w]_x) ds)^{-1} = I - [w]_x/2 + tau(t) [w]_x^2.
inline Matrix3d wbar_so3(const Vector3d& w) {
  const double t2 = w.squaredNorm();
  double tau;
  if (t2 < 1e-8) {
    tau = 1.0 / 12.0 + t2 / 720.0;
  } else {
    const double t = std::sqrt(t2);
    tau = (1.0 - 0.5 * t / std::tan(0.5 * t)) / t2;
  }
  const Matrix3d wx = skew(w);
  return Matrix3d::Identity() - 0.5 * wx + tau * wx * wx;
}

/// kappa(xi) = |xi| cot |xi|, the radial coefficient of Wbar on s.
inline double kappa_radial(double t) {
  if (t < 1e-4) return 1.0 - t * t / 3.0 - t * t * t * t / 45.0;
  return t / std::tan(t);
}

/// Wbar on the quaternion algebra s (adbar_xi = -2 [xi]_x):
/// Wbar_s(xi) = P + kappa (I - P) + [xi]_x with P the radial projector.
inline Matrix3d wbar_s(const Vector3d& xi) {
  const double t2 = xi.squaredNorm();
  double rho;  // (1 - kappa)/t^2
  if (t2 < 1e-8) {
    rho = 1.0 / 3.0 + t2 / 45.0;
  } else {
    rho = (1.0 - kappa_radial(std::sqrt(t2))) / t2;
  }
  const Matrix3d xx = skew(xi);
  return Matrix3d::Identity() + xx + rho * xx * xx;
}

inline Matrix3d jbar_s(const Vector3d& xi) { return jbar_so3(-2.0 * xi); }

// ---------------------------------------------------------------------------
// Vectorized adjoints
// ---------------------------------------------------------------------------

inline Matrix3d adbar_s(const Vector3d& xi) { return -2.0 * skew(xi); }
inline Matrix3d adbar_so3(const Vector3d& w) { return skew(w); }

inline Matrix6d adbar_se3(const Vector6d& xi) {
  Matrix6d ad = Matrix6d::Zero();
  const Matrix3d wx = skew(xi.head<3>());
  ad.topLeftCorner<3, 3>() = wx;
  ad.bottomRightCorner<3, 3>() = wx;
  ad.bottomLeftCorner<3, 3>() = skew(xi.tail<3>());
  return ad;
}

inline Eigen::Matrix<double, 9, 9> adbar_se23(const Eigen::Matrix<double, 9, 1>& xi) {
  Eigen::Matrix<double, 9, 9> ad = Eigen::Matrix<double, 9, 9>::Zero();
  const Matrix3d dx = skew(xi.segment<3>(0));
  ad.block<3, 3>(0, 0) = dx;
  ad.block<3, 3>(3, 3) = dx;
  ad.block<3, 3>(6, 6) = dx;
  ad.block<3, 3>(3, 0) = skew(xi.segment<3>(3));
  ad.block<3, 3>(6, 0) = skew(xi.segment<3>(6));
  return ad;
}

// ---------------------------------------------------------------------------
// The N matrix (appendix closed form with a series fallback near delta = 0)
// ---------------------------------------------------------------------------

namespace detail {
/// Degree-4 Taylor of N in delta: N = sum_{j+k<=4} c_jk A^j [A^k u]_x,
/// c_jk = (-1)^k / (j! (k+1)! (j+k+2)).
inline Matrix3d n_matrix_series(const Vector3d& delta, const Vector3d& u) {
  const Matrix3d a = skew(delta);
  Matrix3d apow[5];
  apow[0] = Matrix3d::Identity();
  for (int j = 1; j <= 4; ++j) apow[j] = apow[j - 1] * a;
  static const double kFact[] = {1.0, 1.0, 2.0, 6.0, 24.0, 120.0};
  Matrix3d n = Matrix3d::Zero();
  for (int j = 0; j <= 4; ++j) {
    for (int k = 0; j + k <= 4; ++k) {
      const double c = ((k % 2) ? -1.0 : 1.0) / (kFact[j] * kFact[k + 1] * (j + k + 2));
      n += c * apow[j] * skew(apow[k] * u);
    }
  }
  return n;
}
}  // namespace detail

/// N(delta, u) = int_0^1 e^{t[d]x} [ int_0^t e^{-s[d]x} u ds ]_x dt.
/// Uses the explicit commutator form away from delta = 0 and a degree-4
/// series below |delta| = 1e-4 where the 1/|d|^2 terms lose precision.
inline Matrix3d n_matrix(const Vector3d& delta, const Vector3d& u) {
  const double t2 = delta.squaredNorm();
  if (t2 < 1e-8) return detail::n_matrix_series(delta, u);
  const Matrix3d dx = skew(delta);
  const Matrix3d e = so3_exp(delta);
  const Matrix3d jm = jbar_so3(-delta);
  const Matrix3d b = skew(delta.cross(u));
  const Matrix3d c = Matrix3d::Identity() - (Matrix3d::Identity() - dx) * e;
  return (b * jm - jm * b) / t2 - (delta.dot(u) / (t2 * t2)) * c * dx;
}

/// Wbar on se(3), block form in coordinates (omega, v).
inline Matrix6d wbar_se3(const Vector6d& xi) {
  const Vector3d w = xi.head<3>();
  const Vector3d v = xi.tail<3>();
  const Matrix3d ws = wbar_so3(w);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = ws;
  out.bottomRightCorner<3, 3>() = ws;
  out.bottomLeftCorner<3, 3>() = -ws * n_matrix(w, v) * ws;
  return out;
}

/// Wbar on se(2,3), block form in coordinates (delta, u, w).
inline Eigen::Matrix<double, 9, 9> wbar_se23(const Eigen::Matrix<double, 9, 1>& xi) {
  const Vector3d d = xi.segment<3>(0);
  const Matrix3d ws = wbar_so3(d);
  Eigen::Matrix<double, 9, 9> out = Eigen::Matrix<double, 9, 9>::Zero();
  out.block<3, 3>(0, 0) = ws;
  out.block<3, 3>(3, 3) = ws;
  out.block<3, 3>(6, 6) = ws;
  out.block<3, 3>(3, 0) = -ws * n_matrix(d, xi.segment<3>(3)) * ws;
  out.block<3, 3>(6, 0) = -ws * n_matrix(d, xi.segment<3>(6)) * ws;
  return out;
}

// ---------------------------------------------------------------------------
// Directional derivatives of the closed forms (for the Ito drift correction)
// ---------------------------------------------------------------------------

/// d/de so3_exp(delta + e dd) at e = 0.
inline Matrix3d so3_exp_dir(const Vector3d& delta, const Vector3d& dd) {
  const double t2 = delta.squaredNorm();
  const Matrix3d ax = skew(delta), dx = skew(dd);
  double a, b, da, db;  // Rodrigues coefficients and d/dtheta
  if (t2 < 1e-8) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
    da = -std::sqrt(t2) / 3.0;
    db = -std::sqrt(t2) / 12.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
    da = (t * std::cos(t) - std::sin(t)) / t2;
    db = (t * std::sin(t) - 2.0 * (1.0 - std::cos(t))) / (t2 * t);
  }
  const double dt = (t2 < 1e-30) ? 0.0 : delta.dot(dd) / std::sqrt(t2);
  return (da * dt) * ax + a * dx + (db * dt) * ax * ax + b * (dx * ax + ax * dx);
}

/// d/de jbar_so3(delta + e dd) at e = 0.
inline Matrix3d jbar_so3_dir(const Vector3d& delta, const Vector3d& dd) {
  const double t2 = delta.squaredNorm();
  const Matrix3d ax = skew(delta), dx = skew(dd);
  double b, c, db, dc;
  if (t2 < 1e-8) {
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
    db = -std::sqrt(t2) / 12.0;
    dc = -std::sqrt(t2) / 60.0;
  } else {
    const double t = std::sqrt(t2);
    b = (1.0 - std::cos(t)) / t2;
    c = (t - std::sin(t)) / (t2 * t);
    db = (t * std::sin(t) - 2.0 * (1.0 - std::cos(t))) / (t2 * t);
    dc = ((1.0 - std::cos(t)) * t - 3.0 * (t - std::sin(t))) / (t2 * t2);
  }
  const double dt = (t2 < 1e-30) ? 0.0 : delta.dot(dd) / std::sqrt(t2);
  return -(db * dt) * ax - b * dx + (dc * dt) * ax * ax + c * (dx * ax + ax * dx);
}

/// d/de wbar_so3(delta + e dd) at e = 0.
inline Matrix3d wbar_so3_dir(const Vector3d& delta, const Vector3d& dd) {
  const double t2 = delta.squaredNorm();
  const Matrix3d ax = skew(delta), dx = skew(dd);
  double tau, dtau;
  if (t2 < 1e-8) {
    tau = 1.0 / 12.0 + t2 / 720.0;
    dtau = std::sqrt(t2) / 360.0;
  } else {
    const double t = std::sqrt(t2);
    const double h = 0.5 * t;
    const double cot = 1.0 / std::tan(h);
    tau = (1.0 - h * cot) / t2;
    const double dnum = -0.5 * cot + h * 0.5 * (1.0 + cot * cot);  // -d/dt (h cot h)
    dtau = (dnum * t2 - 2.0 * t * (1.0 - h * cot)) / (t2 * t2);
  }
  const double dt = (t2 < 1e-30) ? 0.0 : delta.dot(dd) / std::sqrt(t2);
  return -0.5 * dx + (dtau * dt) * ax * ax + tau * (dx * ax + ax * dx);
}

/// Directional derivative of n_matrix in (delta, u).
inline Matrix3d n_matrix_dir(const Vector3d& delta, const Vector3d& u, const Vector3d& dd,
                             const Vector3d& du) {
  const double t2 = delta.squaredNorm();
  if (t2 < 1e-8) {
    // termwise derivative of the degree-4 series
    const Matrix3d a = skew(delta), dax = skew(dd);
    Matrix3d apow[5], dapow[5];
    apow[0] = Matrix3d::Identity();
    dapow[0] = Matrix3d::Zero();
    for (int j = 1; j <= 4; ++j) {
      apow[j] = apow[j - 1] * a;
      dapow[j] = dapow[j - 1] * a + apow[j - 1] * dax;
    }
    static const double kFact[] = {1.0, 1.0, 2.0, 6.0, 24.0, 120.0};
    Matrix3d dn = Matrix3d::Zero();
    for (int j = 0; j <= 4; ++j) {
      for (int k = 0; j + k <= 4; ++k) {
        const double c = ((k % 2) ? -1.0 : 1.0) / (kFact[j] * kFact[k + 1] * (j + k + 2));
        dn += c * (dapow[j] * skew(apow[k] * u) +
                   apow[j] * skew(dapow[k] * u + apow[k] * du));
      }
    }
    return dn;
  }
  const Matrix3d ax = skew(delta), dax = skew(dd);
  const Matrix3d e = so3_exp(delta);
  const Matrix3d de = so3_exp_dir(delta, dd);
  const Matrix3d jm = jbar_so3(-delta);
  const Matrix3d djm = -jbar_so3_dir(-delta, dd);  // chain rule through -delta
  const double dt2 = 2.0 * delta.dot(dd);

  const Matrix3d b = skew(delta.cross(u));
  const Matrix3d dbm = skew(dd.cross(u) + delta.cross(du));
  const Matrix3d comm = b * jm - jm * b;
  const Matrix3d dcomm = dbm * jm + b * djm - djm * b - jm * dbm;

  const Matrix3d c = Matrix3d::Identity() - (Matrix3d::Identity() - ax) * e;
  const Matrix3d dcm = dax * e - (Matrix3d::Identity() - ax) * de;

  const double ip = delta.dot(u);
  const double dip = dd.dot(u) + delta.dot(du);

  Matrix3d dn = dcomm / t2 - (dt2 / (t2 * t2)) * comm;
  dn -= (dip / (t2 * t2) - 2.0 * ip * dt2 / (t2 * t2 * t2)) * c * ax;
  dn -= (ip / (t2 * t2)) * (dcm * ax + c * dax);
  return dn;
}

// ---------------------------------------------------------------------------
// BCH
// ---------------------------------------------------------------------------

/// Closed-form BCH on the quaternion algebra s: M_s(c) = BCH(M_s(a), M_s(b)).
/// This is the composition law of half-angle rotation vectors.
inline Vector3d bch_s(const Vector3d& a, const Vector3d& b, double tol = 1e-9) {
  const double na = a.norm(), nb = b.norm();
  const double sa = std::sin(na), ca = std::cos(na);
  const double sb = std::sin(nb), cb = std::cos(nb);
  const Vector3d ua = (na < 1e-300) ? Vector3d::Zero() : Vector3d(a / na);
  const Vector3d ub = (nb < 1e-300) ? Vector3d::Zero() : Vector3d(b / nb);
  // Shuster product of (sin|a| ua, cos|a|) and (sin|b| ub, cos|b|)
  const double s = ca * cb - sa * sb * ua.dot(ub);
  const Vector3d v = ca * sb * ub + cb * sa * ua - sa * sb * ua.cross(ub);
  const double nv = v.norm();
  const double theta = std::atan2(nv, s);
  if (theta >= M_PI - tol) {
    throw CutLocus("bch_s: composed angle within tolerance of pi");
  }
  if (nv < 1e-300) return Vector3d::Zero();
  return theta * v / nv;
}

/// Closed-form BCH on so(3): [c]_x = BCH([a]_x, [b]_x), via half angles.
/// The isomorphism a -> M_s(-a/2) between so(3) and s reverses composition
/// order under the Shuster product, hence the swapped arguments.
inline Vector3d bch_so3(const Vector3d& a, const Vector3d& b, double tol = 1e-9) {
  return 2.0 * bch_s(0.5 * b, 0.5 * a, tol);
}

// ---------------------------------------------------------------------------
// Group-affinity
// ---------------------------------------------------------------------------

/// Max-abs residual of the group-affine identity
/// f(g1 g2) - f(g1) g2 - g1 f(g2) + g1 f(I) g2 for embedded-matrix fields.
inline double group_affine_defect(const std::function<MatrixXd(const MatrixXd&)>& f,
                                  const MatrixXd& g1, const MatrixXd& g2) {
  const MatrixXd id = MatrixXd::Identity(g1.rows(), g1.cols());
  const MatrixXd r = f(g1 * g2) - f(g1) * g2 - g1 * f(g2) + g1 * f(id) * g2;
  return r.cwiseAbs().maxCoeff();
}

/// Field characterized by a derivation D and algebra elements Y1, Y2:
/// f(e^X) = e^X J(X) D X + e^X Y1 + Y2 e^X. Such fields are exactly the
/// group-affine ones, and their tangent dynamics are generated by D + ad_{Y2}.
struct CharacterizedField {
  MatrixXd dbar;  // derivation in vectorized form, n x n
  VectorXd y1;
  VectorXd y2;
};

/// Checks the derivation law on all basis pairs; max residual returned.
inline double derivation_defect(const LieAlgebraBasis& basis, const MatrixXd& dbar) {
  const int n = basis.dim();
  double worst = 0.0;
  std::vector<MatrixXd> adb(n);
  for (int i = 0; i < n; ++i) adb[i] = basis.adbar(VectorXd::Unit(n, i));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const VectorXd ej = VectorXd::Unit(n, j);
      const VectorXd lhs = dbar * (adb[i] * ej);
      const VectorXd rhs = basis.adbar(dbar.col(i)) * ej + adb[i] * (dbar * ej);
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

/// Evaluates the characterized field at a group element (embedded matrix).
/// Throws NotADerivation if cf.dbar fails the derivation law beyond 1e-9.
inline MatrixXd characterized_field_eval(const LieAlgebraBasis& basis,
                                         const CharacterizedField& cf, const MatrixXd& g) {
  if (derivation_defect(basis, cf.dbar) > 1e-9) {
    throw NotADerivation("characterized_field: dbar fails the derivation law");
  }
  const VectorXd xi = basis.vectorize(mat_log(g), 1e-6);
  const MatrixXd jb = jbar_series(basis.adbar(xi));
  return g * basis.matrize(jb * cf.dbar * xi) + g * basis.matrize(cf.y1) +
         basis.matrize(cf.y2) * g;
}

/// Generator of the linear tangent dynamics, Dbar + adbar(Y2).
inline MatrixXd tangent_linear_generator(const LieAlgebraBasis& basis,
                                         const CharacterizedField& cf) {
  if (derivation_defect(basis, cf.dbar) > 1e-9) {
    throw NotADerivation("tangent_linear_generator: dbar fails the derivation law");
  }
  return cf.dbar + basis.adbar(cf.y2);
}

// ---------------------------------------------------------------------------
// Integral identities (appendix)
// ---------------------------------------------------------------------------

namespace detail {
inline MatrixXd pinv_checked(const MatrixXd& a, const char* who) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a);
  const MatrixXd ap = cod.pseudoInverse();
  if ((a * ap - ap * a).cwiseAbs().maxCoeff() > 1e-9) {
    throw NotNormalCommuting(std::string(who) +
                             ": matrix does not commute with its pseudo-inverse");
  }
  return ap;
}
}  // namespace detail

/// int_0^1 e^{-sA} ds = proj_ker(A) + (I - e^{-A}) A^#, valid when [A, A^#] = 0.
inline MatrixXd int_exp(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const MatrixXd ap = detail::pinv_checked(a, "int_exp");
  const MatrixXd proj = MatrixXd::Identity(n, n) - ap * a;
  return proj + (MatrixXd::Identity(n, n) - mat_exp(-a)) * ap;
}

/// int_0^1 s e^{-sA} ds = proj_ker(A)/2 + (I - (I + A) e^{-A}) (A^#)^2.
inline MatrixXd int_s_exp(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const MatrixXd ap = detail::pinv_checked(a, "int_s_exp");
  const MatrixXd proj = MatrixXd::Identity(n, n) - ap * a;
  return 0.5 * proj + (MatrixXd::Identity(n, n) - (MatrixXd::Identity(n, n) + a) * mat_exp(-a)) *
                          ap * ap;
}

}  // namespace tsf
