#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "tsf/errors.hpp"
#include "tsf/groups.hpp"
#include "tsf/lie_core.hpp"
#include "tsf/linalg.hpp"
#include "tsf/sigma.hpp"

namespace tsf {

/// One tangent-space SDE dxi = f(xi) dt + G(xi) dw (Stratonovich), with
/// noise spectral density q. diffusion_dir (dG in a coordinate direction)
/// and ito_correction are optional analytic overrides; absent, the drift
/// correction falls back to central finite differences.
struct SdeModel {
  int n = 0;
  int m = 0;
  int rot_dim = 3;  // xi.head(rot_dim) is the rotational block, cut locus at pi
  std::function<VectorXd(const VectorXd&)> drift;
  std::function<MatrixXd(const VectorXd&)> diffusion;
  MatrixXd q;
  std::function<MatrixXd(const VectorXd&, int)> diffusion_dir;
  std::function<VectorXd(const VectorXd&)> ito_correction;
};

struct Moments {
  VectorXd mean;
  MatrixXd cov;
};

// ---------------------------------------------------------------------------
// Ito drift correction
// ---------------------------------------------------------------------------

/// Stratonovich -> Ito drift: f~_i = f_i + (1/2) sum_j (dG_j Q G^T)_{ij},
/// where dG_j is the derivative of G along coordinate j.
inline VectorXd ito_drift(const SdeModel& model, const VectorXd& xi) {
  VectorXd f = model.drift(xi);
  if (model.ito_correction) return f + model.ito_correction(xi);
  const MatrixXd g = model.diffusion(xi);
  const MatrixXd qgt = model.q * g.transpose();  // m x n
  const double h = 1e-6 * std::max(1.0, xi.norm());
  for (int j = 0; j < model.n; ++j) {
    MatrixXd dj;
    if (model.diffusion_dir) {
      dj = model.diffusion_dir(xi, j);
    } else {
      VectorXd xp = xi, xm = xi;
      xp(j) += h;
      xm(j) -= h;
      dj = (model.diffusion(xp) - model.diffusion(xm)) / (2.0 * h);
    }
    f += 0.5 * dj * qgt.col(j);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Model factories
// ---------------------------------------------------------------------------

/// Attitude TSSDE on the quaternion algebra under dynamic model replacement:
/// dxi = -[w_m]_x xi dt + (1/2) Wbar_s(xi) d(eta).
inline SdeModel model_su2(const Vector3d& omega_m, const Matrix3d& q_eta) {
  SdeModel model;
  model.n = 3;
  model.m = 3;
  model.q = q_eta;
  const Matrix3d a = -skew(omega_m);
  model.drift = [a](const VectorXd& xi) -> VectorXd { return a * xi; };
  model.diffusion = [](const VectorXd& xi) -> MatrixXd {
    return 0.5 * wbar_s(Vector3d(xi));
  };
  model.diffusion_dir = [](const VectorXd& xi, int j) -> MatrixXd {
    // Wbar_s(xi) = Wbar_so3(-2 xi)
    return -1.0 * wbar_so3_dir(Vector3d(-2.0 * xi), Vector3d::Unit(j));
  };
  return model;
}

/// Same SDE with the unit diffusion convention G = Wbar_s, the form whose
/// isotropic Fokker-Planck equation is the round-metric heat equation.
inline SdeModel model_su2_round(const Vector3d& omega_m, const Matrix3d& q_eta) {
  SdeModel model = model_su2(omega_m, q_eta);
  model.diffusion = [](const VectorXd& xi) -> MatrixXd { return wbar_s(Vector3d(xi)); };
  model.diffusion_dir = [](const VectorXd& xi, int j) -> MatrixXd {
    return -2.0 * wbar_so3_dir(Vector3d(-2.0 * xi), Vector3d::Unit(j));
  };
  return model;
}

namespace detail {
/// d Wbar_se3 for a joint direction (dd in the rotation slot, dv in the
/// translation slot), assembled from dWbar_so3 and dN.
inline Matrix6d wbar_se3_dir(const Vector3d& w, const Vector3d& v, const Vector3d& dd,
                             const Vector3d& dv) {
  const Matrix3d ws = wbar_so3(w);
  const Matrix3d dws = wbar_so3_dir(w, dd);
  const Matrix3d nm = n_matrix(w, v);
  const Matrix3d dnm = n_matrix_dir(w, v, dd, dv);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = dws;
  out.bottomRightCorner<3, 3>() = dws;
  out.bottomLeftCorner<3, 3>() = -(dws * nm * ws + ws * dnm * ws + ws * nm * dws);
  return out;
}
}  // namespace detail

/// Pose TSSDE on se(3): dxi = adbar(w_m, v_m) xi dt + Wbar_se3(xi) d(eta, zeta).
inline SdeModel model_se3(const Vector3d& omega_m, const Vector3d& v_m, const Matrix3d& q_eta,
                          const Matrix3d& q_zeta) {
  SdeModel model;
  model.n = 6;
  model.m = 6;
  model.q = Matrix6d::Zero();
  model.q.topLeftCorner<3, 3>() = q_eta;
  model.q.bottomRightCorner<3, 3>() = q_zeta;
  Vector6d c;
  c << omega_m, v_m;
  const Matrix6d a = adbar_se3(c);
  model.drift = [a](const VectorXd& xi) -> VectorXd { return a * xi; };
  model.diffusion = [](const VectorXd& xi) -> MatrixXd { return wbar_se3(Vector6d(xi)); };
  model.diffusion_dir = [](const VectorXd& xi, int j) -> MatrixXd {
    const Vector6d e = Vector6d::Unit(j);
    return detail::wbar_se3_dir(xi.head<3>(), xi.tail<3>(), e.head<3>(), e.tail<3>());
  };
  return model;
}

/// IMU TSSDE on se(2,3). Gravity cancels out of the tangent dynamics; the
/// noise enters as -Wbar_se23(xi) (eta, zeta, 0).
inline SdeModel model_se23(const Vector3d& omega_m, const Vector3d& a_m, const Matrix3d& q_eta,
                           const Matrix3d& q_zeta) {
  using Vector9d = Eigen::Matrix<double, 9, 1>;
  using Matrix9d = Eigen::Matrix<double, 9, 9>;
  SdeModel model;
  model.n = 9;
  model.m = 6;
  model.q = Matrix6d::Zero();
  model.q.topLeftCorner<3, 3>() = q_eta;
  model.q.bottomRightCorner<3, 3>() = q_zeta;
  Matrix9d f = Matrix9d::Zero();
  const Matrix3d wx = skew(omega_m);
  f.block<3, 3>(0, 0) = wx;
  f.block<3, 3>(3, 3) = wx;
  f.block<3, 3>(6, 6) = wx;
  f.block<3, 3>(3, 0) = skew(a_m);
  f.block<3, 3>(6, 3) = Matrix3d::Identity();
  model.drift = [f](const VectorXd& xi) -> VectorXd { return f * xi; };
  model.diffusion = [](const VectorXd& xi) -> MatrixXd {
    return -wbar_se23(Vector9d(xi)).leftCols<6>();
  };
  model.diffusion_dir = [](const VectorXd& xi, int j) -> MatrixXd {
    const Vector3d d = xi.segment<3>(0);
    const Vector9d e = Vector9d::Unit(j);
    const Vector3d dd = e.segment<3>(0);
    const Matrix3d ws = wbar_so3(d);
    const Matrix3d dws = wbar_so3_dir(d, dd);
    Eigen::Matrix<double, 9, 6> out = Eigen::Matrix<double, 9, 6>::Zero();
    out.block<3, 3>(0, 0) = dws;
    out.block<3, 3>(3, 3) = dws;
    for (int blk = 0; blk < 2; ++blk) {
      const Vector3d u = xi.segment<3>(3 + 3 * blk);
      const Vector3d du = e.segment<3>(3 + 3 * blk);
      const Matrix3d nm = n_matrix(d, u);
      const Matrix3d dnm = n_matrix_dir(d, u, dd, du);
      out.block<3, 3>(3 + 3 * blk, 0) = dws * nm * ws + ws * dnm * ws + ws * nm * dws;
    }
    return -out;
  };
  return model;
}

/// beta-tilde of the gyro-bias error state: exp([d]_x)(beta0 + Jbar_so3(d) u).
inline Vector3d beta_fluctuation(const Vector3d& delta, const Vector3d& u,
                                 const Vector3d& beta0) {
  return so3_exp(delta) * (beta0 + jbar_so3(delta) * u);
}

/// Gyro-bias TSSDE under the SE(3) law on SO(3) x R^3. The diffusion depends
/// on the current bias MAP beta0, which must be refreshed every interval.
inline SdeModel model_gyrobias_se3(const Vector3d& omega_m, const Vector3d& beta0,
                                   const Matrix3d& q_eta, const Matrix3d& q_zeta) {
  SdeModel model;
  model.n = 6;
  model.m = 6;
  model.q = Matrix6d::Zero();
  model.q.topLeftCorner<3, 3>() = q_eta;
  model.q.bottomRightCorner<3, 3>() = q_zeta;
  Vector6d c;
  c << omega_m - beta0, -skew(omega_m) * beta0;
  const Matrix3d wx = skew(omega_m);

  model.drift = [c, beta0, wx](const VectorXd& xi) -> VectorXd {
    const Vector3d d = xi.head<3>(), u = xi.tail<3>();
    const Vector3d dev = beta0 - beta_fluctuation(d, u, beta0);
    Vector6d corr;
    corr << dev, wx * dev;
    return -adbar_se3(Vector6d(xi)) * c + wbar_se3(Vector6d(xi)) * corr;
  };

  auto kmat = [beta0](const Vector3d& d, const Vector3d& u) -> Matrix6d {
    Matrix6d k = Matrix6d::Zero();
    k.topLeftCorner<3, 3>() = -Matrix3d::Identity();
    k.bottomLeftCorner<3, 3>() = -skew(beta_fluctuation(d, u, beta0));
    k.bottomRightCorner<3, 3>() = Matrix3d::Identity();
    return k;
  };
  model.diffusion = [kmat](const VectorXd& xi) -> MatrixXd {
    const Vector3d d = xi.head<3>(), u = xi.tail<3>();
    return wbar_se3(Vector6d(xi)) * kmat(d, u);
  };

  // Analytic correction; shared subexpressions evaluated once per xi.
  const Matrix6d qfull = model.q;
  model.ito_correction = [beta0, qfull](const VectorXd& xi) -> VectorXd {
    const Vector3d d = xi.head<3>(), u = xi.tail<3>();
    const Matrix3d e = so3_exp(d);
    const Matrix3d jb = jbar_so3(d);
    const Vector3d bt = e * (beta0 + jb * u);
    const Matrix3d w = wbar_so3(d);
    const Matrix3d nm = n_matrix(d, u);
    Matrix6d wb = Matrix6d::Zero();
    wb.topLeftCorner<3, 3>() = w;
    wb.bottomRightCorner<3, 3>() = w;
    wb.bottomLeftCorner<3, 3>() = -w * nm * w;
    Matrix6d k = Matrix6d::Zero();
    k.topLeftCorner<3, 3>() = -Matrix3d::Identity();
    k.bottomLeftCorner<3, 3>() = -skew(bt);
    k.bottomRightCorner<3, 3>() = Matrix3d::Identity();
    const Matrix6d g = wb * k;
    const Matrix6d qgt = qfull * g.transpose();
    Vector6d corr = Vector6d::Zero();
    for (int j = 0; j < 6; ++j) {
      const bool rot = j < 3;
      const Vector3d dd = rot ? Vector3d(Vector3d::Unit(j)) : Vector3d(Vector3d::Zero());
      const Vector3d du = rot ? Vector3d(Vector3d::Zero()) : Vector3d(Vector3d::Unit(j - 3));
      const Matrix3d dw = rot ? Matrix3d(wbar_so3_dir(d, dd)) : Matrix3d(Matrix3d::Zero());
      const Matrix3d dnm = n_matrix_dir(d, u, dd, du);
      Matrix6d dwb = Matrix6d::Zero();
      dwb.topLeftCorner<3, 3>() = dw;
      dwb.bottomRightCorner<3, 3>() = dw;
      dwb.bottomLeftCorner<3, 3>() = -(dw * nm * w + w * dnm * w + w * nm * dw);
      const Vector3d dbt = rot ? Vector3d(so3_exp_dir(d, dd) * (beta0 + jb * u) +
                                          e * (jbar_so3_dir(d, dd) * u))
                               : Vector3d(e * (jb * du));
      Matrix6d dk = Matrix6d::Zero();
      dk.bottomLeftCorner<3, 3>() = -skew(dbt);
      const Matrix6d dg = dwb * k + wb * dk;
      corr += dg * qgt.col(j);
    }
    return 0.5 * corr;
  };
  return model;
}

/// Gyro-bias TSSDE under the direct-product law:
/// dd = [w_m - b0]_x d - Wbar_so3(d) u - Wbar_so3(d) eta, du = zeta.
inline SdeModel model_gyrobias_dp(const Vector3d& omega_m, const Vector3d& beta0,
                                  const Matrix3d& q_eta, const Matrix3d& q_zeta) {
  SdeModel model;
  model.n = 6;
  model.m = 6;
  model.q = Matrix6d::Zero();
  model.q.topLeftCorner<3, 3>() = q_eta;
  model.q.bottomRightCorner<3, 3>() = q_zeta;
  const Matrix3d a = skew(omega_m - beta0);
  model.drift = [a](const VectorXd& xi) -> VectorXd {
    const Vector3d d = xi.head<3>(), u = xi.tail<3>();
    Vector6d f;
    f << a * d - wbar_so3(d) * u, Vector3d::Zero();
    return f;
  };
  model.diffusion = [](const VectorXd& xi) -> MatrixXd {
    Matrix6d g = Matrix6d::Zero();
    g.topLeftCorner<3, 3>() = -wbar_so3(xi.head<3>());
    g.bottomRightCorner<3, 3>() = Matrix3d::Identity();
    return g;
  };
  model.diffusion_dir = [](const VectorXd& xi, int j) -> MatrixXd {
    Matrix6d dg = Matrix6d::Zero();
    if (j < 3) {
      dg.topLeftCorner<3, 3>() = -wbar_so3_dir(xi.head<3>(), Vector3d::Unit(j));
    }
    return dg;
  };
  return model;
}

// ---------------------------------------------------------------------------
// Continuous-time unscented transform with state-dependent diffusion
// ---------------------------------------------------------------------------

namespace detail {
struct MomentDerivative {
  VectorXd dm;
  MatrixXd dp;
};

inline MomentDerivative ctut_derivative(const Moments& m, const SdeModel& model, double lambda) {
  const SigmaSet set = sigma_points(m.mean, symmetrize(m.cov), lambda);
  const int n = model.n;
  const size_t np = set.points.size();
  for (const VectorXd& p : set.points) {
    if (p.head(model.rot_dim).norm() >= M_PI) {
      throw StepReject("ctut: sigma point rotational norm reached pi");
    }
  }
  std::vector<VectorXd> ft(np);
  VectorXd fbar = VectorXd::Zero(n);
  MatrixXd gqg = MatrixXd::Zero(n, n);
  for (size_t i = 0; i < np; ++i) {
    ft[i] = ito_drift(model, set.points[i]);
    fbar += set.weights(static_cast<int>(i)) * ft[i];
    const MatrixXd g = model.diffusion(set.points[i]);
    gqg += set.weights(static_cast<int>(i)) * g * model.q * g.transpose();
  }
  MatrixXd cross = MatrixXd::Zero(n, n);
  for (size_t i = 0; i < np; ++i) {
    cross += set.weights(static_cast<int>(i)) * (set.points[i] - m.mean) *
             (ft[i] - fbar).transpose();
  }
  return {fbar, cross + cross.transpose() + gqg};
}
}  // namespace detail

/// Integrates the UT-closed moment ODEs dm/dt = E[f~], dP/dt = Cov(x, f~) +
/// Cov(f~, x) + E[G Q G^T] with fixed-step RK4, regenerating sigma points
/// from (m, P) at every stage.
inline Moments ctut_propagate(const Moments& m0, const SdeModel& model, double t_span, double dt,
                              double lambda = 0.0) {
  const int nsteps = std::max(1, static_cast<int>(std::llround(t_span / dt)));
  const double h = t_span / nsteps;
  Moments m = m0;
  m.cov = symmetrize(m.cov);
  for (int s = 0; s < nsteps; ++s) {
    const auto k1 = detail::ctut_derivative(m, model, lambda);
    const Moments m2{m.mean + 0.5 * h * k1.dm, symmetrize(m.cov + 0.5 * h * k1.dp)};
    const auto k2 = detail::ctut_derivative(m2, model, lambda);
    const Moments m3{m.mean + 0.5 * h * k2.dm, symmetrize(m.cov + 0.5 * h * k2.dp)};
    const auto k3 = detail::ctut_derivative(m3, model, lambda);
    const Moments m4{m.mean + h * k3.dm, symmetrize(m.cov + h * k3.dp)};
    const auto k4 = detail::ctut_derivative(m4, model, lambda);
    m.mean += (h / 6.0) * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
    m.cov = symmetrize(m.cov + (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp));
  }
  return m;
}

// ---------------------------------------------------------------------------
// MAP propagation (closed forms, rates held constant over the interval)
// ---------------------------------------------------------------------------

inline Quaternion propagate_map(const Quaternion& q0, const Vector3d& omega, double t) {
  S3Group s3;
  return quat_mul(s3.exp(0.5 * t * omega), q0);
}

inline Matrix3d propagate_map(const Matrix3d& r0, const Vector3d& omega, double t) {
  return so3_exp(t * omega) * r0;
}

inline Matrix4d propagate_map(const Matrix4d& a0, const Vector3d& omega, const Vector3d& v,
                              double t) {
  SE3Group se3;
  Vector6d xi;
  xi << t * omega, t * v;
  return se3.compose(se3.exp(xi), a0);
}

/// SE(2,3) MAP with constant gravity; velocity and position columns are
/// quadrature-free via the integral identities.
inline Matrix5d propagate_map_se23(const Matrix5d& a0, const Vector3d& omega, const Vector3d& a_m,
                                   const Vector3d& gravity, double t) {
  const Matrix3d e = so3_exp(t * omega);
  const Matrix3d r0 = a0.topLeftCorner<3, 3>();
  const Vector3d v0 = a0.block<3, 1>(0, 3);
  const Vector3d p0 = a0.block<3, 1>(0, 4);
  const Vector3d rg = r0 * gravity;
  const Vector3d v_t = e * v0 + t * (jbar_so3(Vector3d(-t * omega)) * a_m) + t * (e * rg);
  const MatrixXd ise = int_s_exp(MatrixXd(-t * skew(omega)));
  const Vector3d p_t = e * p0 + t * (e * v0) + t * t * (ise * a_m) + 0.5 * t * t * (e * rg);
  Matrix5d out = Matrix5d::Identity();
  out.topLeftCorner<3, 3>() = e * r0;
  out.block<3, 1>(0, 3) = v_t;
  out.block<3, 1>(0, 4) = p_t;
  return out;
}

/// Gyro-bias MAP flow: R <- exp(t [w_m - beta]) R, beta unchanged.
inline RotBias propagate_map(const RotBias& mu, const Vector3d& omega_m, double t) {
  RotBias out = mu;
  out.R = so3_exp(t * (omega_m - mu.beta)) * mu.R;
  reorthonormalize(out.R);
  return out;
}

// ---------------------------------------------------------------------------
// Short-time linear moment ODEs on su(2) (unit diffusion convention)
// ---------------------------------------------------------------------------

/// Integrates d(mean)/dt = -([w]_x + q^2/6 I) mean and
/// dP/dt = -([w]_x + q^2/12 I) P - P (.)^T - q^2/12 (P - tr(P) I) + q^2 I
/// with RK4. Fast linear alternative to the CTUT while q^2 t << 1.
inline Moments su2_shorttime_moments(const Moments& m0, const Vector3d& omega_m, double q_eta,
                                     double t_span, double dt = 1e-3) {
  const double q2 = q_eta * q_eta;
  const Matrix3d wx = skew(omega_m);
  const Matrix3d am = -(wx + (q2 / 6.0) * Matrix3d::Identity());
  auto dp = [&](const Matrix3d& p) -> Matrix3d {
    const Matrix3d b = wx + (q2 / 12.0) * Matrix3d::Identity();
    return -b * p - p * b.transpose() - (q2 / 12.0) * (p - p.trace() * Matrix3d::Identity()) +
           q2 * Matrix3d::Identity();
  };
  const int nsteps = std::max(1, static_cast<int>(std::llround(t_span / dt)));
  const double h = t_span / nsteps;
  Vector3d mean = m0.mean;
  Matrix3d p = m0.cov;
  for (int s = 0; s < nsteps; ++s) {
    const Vector3d k1m = am * mean;
    const Matrix3d k1p = dp(p);
    const Vector3d k2m = am * (mean + 0.5 * h * k1m);
    const Matrix3d k2p = dp(p + 0.5 * h * k1p);
    const Vector3d k3m = am * (mean + 0.5 * h * k2m);
    const Matrix3d k3p = dp(p + 0.5 * h * k2p);
    const Vector3d k4m = am * (mean + h * k3m);
    const Matrix3d k4p = dp(p + h * k3p);
    mean += (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    p += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  }
  Moments out;
  out.mean = mean;
  out.cov = symmetrize(p);
  return out;
}

}  // namespace tsf
