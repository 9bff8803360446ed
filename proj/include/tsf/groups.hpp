#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "tsf/errors.hpp"
#include "tsf/lie_core.hpp"
#include "tsf/linalg.hpp"

namespace tsf {

// ---------------------------------------------------------------------------
// Unit quaternions, Shuster convention: R(q (x) q') = R(q) R(q')
// ---------------------------------------------------------------------------

/// M_s(v), the algebra generator of the SO(4) representation of S^3.
inline Matrix4d m_s(const Vector3d& v) {
  Matrix4d m = Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = -skew(v);
  m.topRightCorner<3, 1>() = v;
  m.bottomLeftCorner<1, 3>() = -v.transpose();
  return m;
}

/// Unit quaternion stored as (vector part, scalar part).
struct Quaternion {
  Vector3d v{0.0, 0.0, 0.0};
  double s{1.0};

  static Quaternion identity() { return {}; }

  void normalize() {
    const double n = std::sqrt(v.squaredNorm() + s * s);
    v /= n;
    s /= n;
  }

  Quaternion inverse() const { return {-v, s}; }

  /// 4x4 left-multiplication matrix [q (x)] = s I4 + M_s(v).
  Matrix4d as_matrix() const { return s * Matrix4d::Identity() + m_s(v); }

  Eigen::Vector4d coeffs() const { return {v.x(), v.y(), v.z(), s}; }
};

/// Shuster quaternion product; result renormalized.
inline Quaternion quat_mul(const Quaternion& q, const Quaternion& p) {
  Quaternion out;
  out.v = q.s * p.v + p.s * q.v - q.v.cross(p.v);
  out.s = q.s * p.s - q.v.dot(p.v);
  out.normalize();
  return out;
}

/// R(q) = I - 2 s [v]_x + 2 [v]_x^2. Maps q and -q to the same rotation.
inline Matrix3d quat_to_rot(const Quaternion& q) {
  const Matrix3d vx = skew(q.v);
  return Matrix3d::Identity() - 2.0 * q.s * vx + 2.0 * vx * vx;
}

/// One modified Gram-Schmidt pass when the orthogonality residual drifts.
inline void reorthonormalize(Matrix3d& r, double residual_tol = 1e-9) {
  if ((r * r.transpose() - Matrix3d::Identity()).cwiseAbs().maxCoeff() <= residual_tol) return;
  Vector3d c0 = r.col(0).normalized();
  Vector3d c1 = (r.col(1) - c0.dot(r.col(1)) * c0).normalized();
  Vector3d c2 = c0.cross(c1);
  r.col(0) = c0;
  r.col(1) = c1;
  r.col(2) = c2;
}

// ---------------------------------------------------------------------------
// Lie algebra bases (vectorize/matrize conventions fixed here)
// ---------------------------------------------------------------------------

inline const LieAlgebraBasis& s_basis() {
  static const LieAlgebraBasis basis = [] {
    std::vector<MatrixXd> gens;
    for (int i = 0; i < 3; ++i) gens.push_back(m_s(Vector3d::Unit(i)));
    return LieAlgebraBasis(3, 4, std::move(gens));
  }();
  return basis;
}

inline const LieAlgebraBasis& so3_basis() {
  static const LieAlgebraBasis basis = [] {
    std::vector<MatrixXd> gens;
    for (int i = 0; i < 3; ++i) gens.push_back(skew(Vector3d::Unit(i)));
    return LieAlgebraBasis(3, 3, std::move(gens));
  }();
  return basis;
}

inline MatrixXd se3_algebra_matrix(const Vector6d& xi) {
  Matrix4d m = Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.head<3>());
  m.topRightCorner<3, 1>() = xi.tail<3>();
  return m;
}

inline const LieAlgebraBasis& se3_basis() {
  static const LieAlgebraBasis basis = [] {
    std::vector<MatrixXd> gens;
    for (int i = 0; i < 6; ++i) gens.push_back(se3_algebra_matrix(Vector6d::Unit(i)));
    return LieAlgebraBasis(6, 4, std::move(gens));
  }();
  return basis;
}

inline MatrixXd se23_algebra_matrix(const Eigen::Matrix<double, 9, 1>& xi) {
  Matrix5d m = Matrix5d::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.segment<3>(0));
  m.block<3, 1>(0, 3) = xi.segment<3>(3);
  m.block<3, 1>(0, 4) = xi.segment<3>(6);
  return m;
}

inline const LieAlgebraBasis& se23_basis() {
  static const LieAlgebraBasis basis = [] {
    std::vector<MatrixXd> gens;
    for (int i = 0; i < 9; ++i)
      gens.push_back(se23_algebra_matrix(Eigen::Matrix<double, 9, 1>::Unit(i)));
    return LieAlgebraBasis(9, 5, std::move(gens));
  }();
  return basis;
}

// ---------------------------------------------------------------------------
// S^3 as a subgroup of SO(4)
// ---------------------------------------------------------------------------

struct S3Group {
  using Element = Quaternion;
  using Tangent = Vector3d;
  using Cov = Matrix3d;

  int dim() const { return 3; }
  int rot_dim() const { return 3; }

  Element identity() const { return Quaternion::identity(); }
  Element compose(const Element& a, const Element& b) const { return quat_mul(a, b); }
  Element inverse(const Element& a) const { return a.inverse(); }

  /// exp(M_s(xi)) acting on the identity quaternion.
  Element exp(const Tangent& xi) const {
    const double t = xi.norm();
    Quaternion q;
    if (t < 1e-300) return q;
    q.v = std::sin(t) * xi / t;
    q.s = std::cos(t);
    return q;
  }

  Tangent log(const Element& q, double tol = 1e-9) const {
    const double nv = q.v.norm();
    const double theta = std::atan2(nv, q.s);
    if (theta >= M_PI - tol) throw CutLocus("S3 log: angle within tolerance of pi");
    if (nv < 1e-300) return Tangent::Zero();
    return theta * q.v / nv;
  }

  Matrix3d adbar(const Tangent& xi) const { return adbar_s(xi); }
  Matrix3d jbar(const Tangent& xi) const { return jbar_s(xi); }
  Matrix3d wbar(const Tangent& xi) const { return wbar_s(xi); }
  Matrix3d jbar_inv(const Tangent& xi) const { return wbar_s(-xi); }
  Tangent bch(const Tangent& a, const Tangent& b) const { return bch_s(a, b); }

  MatrixXd embed(const Element& q) const { return q.as_matrix(); }
  const LieAlgebraBasis& basis() const { return s_basis(); }
};

// ---------------------------------------------------------------------------
// SO(3)
// ---------------------------------------------------------------------------

struct SO3Group {
  using Element = Matrix3d;
  using Tangent = Vector3d;
  using Cov = Matrix3d;

  int dim() const { return 3; }
  int rot_dim() const { return 3; }

  Element identity() const { return Matrix3d::Identity(); }
  Element compose(const Element& a, const Element& b) const {
    Matrix3d r = a * b;
    reorthonormalize(r);
    return r;
  }
  Element inverse(const Element& a) const { return a.transpose(); }
  Element exp(const Tangent& xi) const { return so3_exp(xi); }
  Tangent log(const Element& g) const { return so3_log(g); }

  Matrix3d adbar(const Tangent& xi) const { return adbar_so3(xi); }
  Matrix3d jbar(const Tangent& xi) const { return jbar_so3(xi); }
  Matrix3d wbar(const Tangent& xi) const { return wbar_so3(xi); }
  Matrix3d jbar_inv(const Tangent& xi) const { return wbar_so3(-xi); }
  Tangent bch(const Tangent& a, const Tangent& b) const { return bch_so3(a, b); }

  MatrixXd embed(const Element& g) const { return g; }
  const LieAlgebraBasis& basis() const { return so3_basis(); }
};

// ---------------------------------------------------------------------------
// SE(3), elements as 4x4 homogeneous matrices, coordinates (omega, v)
// ---------------------------------------------------------------------------

struct SE3Group {
  using Element = Matrix4d;
  using Tangent = Vector6d;
  using Cov = Matrix6d;

  int dim() const { return 6; }
  int rot_dim() const { return 3; }

  Element identity() const { return Matrix4d::Identity(); }
  Element compose(const Element& a, const Element& b) const {
    Matrix4d g = a * b;
    Matrix3d r = g.topLeftCorner<3, 3>();
    reorthonormalize(r);
    g.topLeftCorner<3, 3>() = r;
    g.row(3) << 0, 0, 0, 1;
    return g;
  }
  Element inverse(const Element& a) const {
    Matrix4d g = Matrix4d::Identity();
    const Matrix3d rt = a.topLeftCorner<3, 3>().transpose();
    g.topLeftCorner<3, 3>() = rt;
    g.topRightCorner<3, 1>() = -rt * a.topRightCorner<3, 1>();
    return g;
  }

  Element exp(const Tangent& xi) const {
    Matrix4d g = Matrix4d::Identity();
    const Vector3d w = xi.head<3>();
    g.topLeftCorner<3, 3>() = so3_exp(w);
    g.topRightCorner<3, 1>() = jbar_so3(-w) * xi.tail<3>();
    return g;
  }

  Tangent log(const Element& g) const {
    Tangent xi;
    const Vector3d w = so3_log(g.topLeftCorner<3, 3>());
    xi.head<3>() = w;
    xi.tail<3>() = wbar_so3(w) * g.topRightCorner<3, 1>();
    return xi;
  }

  Matrix6d adbar(const Tangent& xi) const { return adbar_se3(xi); }
  Matrix6d jbar(const Tangent& xi) const { return jbar_series(adbar_se3(xi)); }
  Matrix6d wbar(const Tangent& xi) const { return wbar_se3(xi); }
  Matrix6d jbar_inv(const Tangent& xi) const { return wbar_se3(-xi); }
  Tangent bch(const Tangent& a, const Tangent& b) const {
    return log(Element(exp(a) * exp(b)));
  }

  MatrixXd embed(const Element& g) const { return g; }
  const LieAlgebraBasis& basis() const { return se3_basis(); }
};

// ---------------------------------------------------------------------------
// SE(2,3), elements as 5x5 matrices with columns (v, r), coords (delta, u, w)
// ---------------------------------------------------------------------------

struct SE23Group {
  using Element = Matrix5d;
  using Tangent = Eigen::Matrix<double, 9, 1>;
  using Cov = Eigen::Matrix<double, 9, 9>;

  int dim() const { return 9; }
  int rot_dim() const { return 3; }

  Element identity() const { return Matrix5d::Identity(); }
  Element compose(const Element& a, const Element& b) const {
    Matrix5d g = a * b;
    Matrix3d r = g.topLeftCorner<3, 3>();
    reorthonormalize(r);
    g.topLeftCorner<3, 3>() = r;
    g.row(3) << 0, 0, 0, 1, 0;
    g.row(4) << 0, 0, 0, 0, 1;
    return g;
  }
  Element inverse(const Element& a) const {
    Matrix5d g = Matrix5d::Identity();
    const Matrix3d rt = a.topLeftCorner<3, 3>().transpose();
    g.topLeftCorner<3, 3>() = rt;
    g.block<3, 1>(0, 3) = -rt * a.block<3, 1>(0, 3);
    g.block<3, 1>(0, 4) = -rt * a.block<3, 1>(0, 4);
    return g;
  }

  Element exp(const Tangent& xi) const {
    Matrix5d g = Matrix5d::Identity();
    const Vector3d d = xi.segment<3>(0);
    const Matrix3d jm = jbar_so3(-d);
    g.topLeftCorner<3, 3>() = so3_exp(d);
    g.block<3, 1>(0, 3) = jm * xi.segment<3>(3);
    g.block<3, 1>(0, 4) = jm * xi.segment<3>(6);
    return g;
  }

  Tangent log(const Element& g) const {
    Tangent xi;
    const Vector3d d = so3_log(g.topLeftCorner<3, 3>());
    const Matrix3d w = wbar_so3(d);
    xi.segment<3>(0) = d;
    xi.segment<3>(3) = w * g.block<3, 1>(0, 3);
    xi.segment<3>(6) = w * g.block<3, 1>(0, 4);
    return xi;
  }

  Cov adbar(const Tangent& xi) const { return adbar_se23(xi); }
  Cov jbar(const Tangent& xi) const { return jbar_series(adbar_se23(xi)); }
  Cov wbar(const Tangent& xi) const { return wbar_se23(xi); }
  Cov jbar_inv(const Tangent& xi) const { return wbar_se23(-xi); }
  Tangent bch(const Tangent& a, const Tangent& b) const {
    return log(Element(exp(a) * exp(b)));
  }

  MatrixXd embed(const Element& g) const { return g; }
  const LieAlgebraBasis& basis() const { return se23_basis(); }
};

// ---------------------------------------------------------------------------
// SO(3) x R^3 under the direct-product, SE(3), and time-parameterized laws
// ---------------------------------------------------------------------------

enum class BiasLaw { kDirectProduct, kSemiDirect, kTimeParam };

/// Attitude-plus-bias state. The law tag travels with the element so that
/// elements built under one law cannot be silently combined under another.
struct RotBias {
  Matrix3d R = Matrix3d::Identity();
  Vector3d beta = Vector3d::Zero();
  BiasLaw law = BiasLaw::kSemiDirect;
};

struct BiasGroup {
  using Element = RotBias;
  using Tangent = Vector6d;
  using Cov = Matrix6d;

  BiasLaw law = BiasLaw::kSemiDirect;
  double t_param = 0.0;  // only meaningful for kTimeParam

  explicit BiasGroup(BiasLaw l = BiasLaw::kSemiDirect, double t = 0.0) : law(l), t_param(t) {}

  int dim() const { return 6; }
  int rot_dim() const { return 3; }

  Element identity() const { return {Matrix3d::Identity(), Vector3d::Zero(), law}; }

  void check_tag(const Element& a) const {
    if (a.law != law) throw TagMismatch("BiasGroup: element built under a different law");
  }

  Element compose(const Element& a, const Element& b) const {
    check_tag(a);
    check_tag(b);
    Element out;
    out.law = law;
    Matrix3d r = a.R * b.R;
    reorthonormalize(r);
    out.R = r;
    switch (law) {
      case BiasLaw::kDirectProduct:
        out.beta = a.beta + b.beta;
        break;
      case BiasLaw::kSemiDirect:
        out.beta = a.beta + a.R * b.beta;
        break;
      case BiasLaw::kTimeParam: {
        if (t_param == 0.0) {
          out.beta = a.beta + a.R * b.beta;
        } else {
          out.beta = bch_so3(t_param * (a.R * b.beta), t_param * a.beta) / t_param;
        }
        break;
      }
    }
    return out;
  }

  Element inverse(const Element& a) const {
    check_tag(a);
    Element out;
    out.law = law;
    out.R = a.R.transpose();
    out.beta = (law == BiasLaw::kDirectProduct) ? Vector3d(-a.beta)
                                                : Vector3d(-a.R.transpose() * a.beta);
    return out;
  }

  Element exp(const Tangent& xi) const {
    require_exp_law();
    Element out;
    out.law = law;
    out.R = so3_exp(xi.head<3>());
    out.beta = (law == BiasLaw::kDirectProduct) ? Vector3d(xi.tail<3>())
                                                : Vector3d(jbar_so3(-xi.head<3>()) * xi.tail<3>());
    return out;
  }

  Tangent log(const Element& a) const {
    check_tag(a);
    require_exp_law();
    Tangent xi;
    const Vector3d d = so3_log(a.R);
    xi.head<3>() = d;
    xi.tail<3>() = (law == BiasLaw::kDirectProduct) ? a.beta : Vector3d(wbar_so3(d) * a.beta);
    return xi;
  }

  Matrix6d adbar(const Tangent& xi) const {
    if (law == BiasLaw::kDirectProduct) {
      Matrix6d ad = Matrix6d::Zero();
      ad.topLeftCorner<3, 3>() = skew(xi.head<3>());
      return ad;
    }
    return adbar_se3(xi);
  }

  Matrix6d jbar(const Tangent& xi) const {
    if (law == BiasLaw::kDirectProduct) {
      Matrix6d j = Matrix6d::Identity();
      j.topLeftCorner<3, 3>() = jbar_so3(xi.head<3>());
      return j;
    }
    return jbar_series(adbar_se3(xi));
  }

  Matrix6d wbar(const Tangent& xi) const {
    if (law == BiasLaw::kDirectProduct) {
      Matrix6d w = Matrix6d::Identity();
      w.topLeftCorner<3, 3>() = wbar_so3(xi.head<3>());
      return w;
    }
    return wbar_se3(xi);
  }

  Matrix6d jbar_inv(const Tangent& xi) const { return wbar(-xi); }

  Tangent bch(const Tangent& a, const Tangent& b) const {
    return log(compose(exp(a), exp(b)));
  }

  const LieAlgebraBasis& basis() const {
    require_exp_law();
    if (law == BiasLaw::kSemiDirect) return se3_basis();
    return dp_basis();
  }

  /// 7x7 block-diagonal embedding of the direct-product law; matrix
  /// multiplication realizes the DP composition.
  static Eigen::Matrix<double, 7, 7> dp_embed(const Element& a) {
    Eigen::Matrix<double, 7, 7> m = Eigen::Matrix<double, 7, 7>::Identity();
    m.topLeftCorner<3, 3>() = a.R;
    m.block<3, 1>(3, 6) = a.beta;
    return m;
  }

  static const LieAlgebraBasis& dp_basis() {
    static const LieAlgebraBasis basis = [] {
      std::vector<MatrixXd> gens;
      for (int i = 0; i < 3; ++i) {
        MatrixXd g = MatrixXd::Zero(7, 7);
        g.topLeftCorner<3, 3>() = skew(Vector3d::Unit(i));
        gens.push_back(g);
      }
      for (int i = 0; i < 3; ++i) {
        MatrixXd g = MatrixXd::Zero(7, 7);
        g(3 + i, 6) = 1.0;
        gens.push_back(g);
      }
      return LieAlgebraBasis(6, 7, std::move(gens));
    }();
    return basis;
  }

 private:
  void require_exp_law() const {
    if (law == BiasLaw::kTimeParam) {
      throw TsfError("BiasGroup: the time-parameterized law carries no exponential chart here");
    }
  }
};

}  // namespace tsf
