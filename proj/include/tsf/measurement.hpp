#pragma once

#include <Eigen/Dense>
#include <functional>

#include "tsf/cg.hpp"
#include "tsf/errors.hpp"
#include "tsf/groups.hpp"
#include "tsf/linalg.hpp"
#include "tsf/sigma.hpp"

namespace tsf {

/// Measurement z = h(g) + w with w ~ N(0, R).
template <typename G>
struct MeasurementModel {
  int d = 0;
  std::function<VectorXd(const typename G::Element&)> h;
  MatrixXd r;
};

struct UpdateOptions {
  double lambda = 0.0;
  bool joseph_form = false;
};

/// UT Bayesian update of a CG prior. Sigma points live in the tangent space
/// at mu; the returned OffsetGaussian keeps mu unchanged, the caller whitens.
template <typename G>
OffsetGaussian<G> ut_update(const G& group, const ConcentratedGaussian<G>& cg, const VectorXd& z,
                            const MeasurementModel<G>& mm, const UpdateOptions& opt = {}) {
  const int n = group.dim();
  const SigmaSet set = sigma_points(VectorXd::Zero(n), cg.sigma, opt.lambda);
  const size_t np = set.points.size();

  std::vector<VectorXd> nu(np);
  VectorXd zhat = VectorXd::Zero(mm.d);
  for (size_t i = 0; i < np; ++i) {
    nu[i] = mm.h(group.compose(group.exp(set.points[i]), cg.mu));
    zhat += set.weights(static_cast<int>(i)) * nu[i];
  }
  MatrixXd pzz = mm.r;
  MatrixXd pxz = MatrixXd::Zero(n, mm.d);
  for (size_t i = 0; i < np; ++i) {
    const VectorXd dz = nu[i] - zhat;
    pzz += set.weights(static_cast<int>(i)) * dz * dz.transpose();
    pxz += set.weights(static_cast<int>(i)) * set.points[i] * dz.transpose();
  }
  Eigen::FullPivLU<MatrixXd> lu(pzz);
  if (!lu.isInvertible()) {
    throw SingularInnovation("ut_update: innovation covariance not invertible");
  }
  const MatrixXd gain = pxz * lu.inverse();

  OffsetGaussian<G> out;
  out.mu = cg.mu;
  out.xi_hat = gain * (z - zhat);
  if (opt.joseph_form) {
    out.sigma = symmetrize(cg.sigma - gain * pxz.transpose() - pxz * gain.transpose() +
                           gain * pzz * gain.transpose());
  } else {
    out.sigma = symmetrize(cg.sigma - gain * pzz * gain.transpose());
  }
  return out;
}

/// Triaxial magnetometer: body-frame field R * B from the attitude block.
inline Vector3d magnetometer_h(const Quaternion& q, const Vector3d& b) {
  return quat_to_rot(q) * b;
}
inline Vector3d magnetometer_h(const Matrix3d& r, const Vector3d& b) { return r * b; }
inline Vector3d magnetometer_h(const RotBias& g, const Vector3d& b) { return g.R * b; }

}  // namespace tsf
