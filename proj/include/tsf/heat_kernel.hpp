#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tsf/groups.hpp"
#include "tsf/lie_core.hpp"
#include "tsf/linalg.hpp"

namespace tsf {

/// Winding cutoff: smallest N whose first bounded term drops below 1e-14.
inline int heat_kernel_cutoff(double t) {
  for (int n = 1; n < 200; ++n) {
    const double x = M_PI * (2.0 * n - 1.0);
    const double bound = std::exp(-x * x / (2.0 * t)) * (M_PI * (2.0 * n + 1.0)) /
                         std::pow(t, 1.5);
    if (bound < 1e-14) return n;
  }
  return 200;
}

namespace detail {
/// Winding sum S(r) = sum_{|n|<=N} (r + 2 pi n) exp(-(r + 2 pi n)^2 / 2t).
inline double heat_kernel_winding_sum(double t, double r, int nmax) {
  double s = r * std::exp(-r * r / (2.0 * t));
  for (int n = 1; n <= nmax; ++n) {
    const double a = r + 2.0 * M_PI * n;
    const double b = r - 2.0 * M_PI * n;
    s += a * std::exp(-a * a / (2.0 * t)) + b * std::exp(-b * b / (2.0 * t));
  }
  return s;
}
}  // namespace detail

/// Fundamental solution of the isotropic tangent-space FPE on S^3 (round
/// metric, unit spectral density absorbed into t). Radial in |xi|.
inline double heat_kernel_radial(double t, double r, int nmax = -1) {
  if (nmax < 1) nmax = heat_kernel_cutoff(t);
  const double front = std::exp(0.5 * t) / std::pow(2.0 * M_PI * t, 1.5);
  r = std::min(r, M_PI - 1e-5);
  if (r < 1e-6) {
    // removable singularity: n = 0 term -> 1, pairs -> 2 e^{-a^2/2t}(1 - a^2/t)
    double s = 1.0;
    for (int n = 1; n <= nmax; ++n) {
      const double a2 = 4.0 * M_PI * M_PI * n * n;
      s += 2.0 * std::exp(-a2 / (2.0 * t)) * (1.0 - a2 / t);
    }
    return front * s;
  }
  return front * (std::sin(r) / (r * r)) * detail::heat_kernel_winding_sum(t, r, nmax);
}

inline double heat_kernel(double t, const Vector3d& xi, int nmax = -1) {
  return heat_kernel_radial(t, xi.norm(), nmax);
}

// ---------------------------------------------------------------------------
// Product quadrature grid on the ball B_pi(0)
// ---------------------------------------------------------------------------

/// Product grid: Gauss-Legendre radial shells x (Gauss-Legendre cos(theta)
/// x uniform phi) directions. Weights carry the r^2 volume Jacobian.
struct BallGrid {
  std::vector<Vector3d> nodes;
  std::vector<double> weights;
  std::vector<double> radii;

  double integrate(const VectorXd& p) const {
    double s = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) s += weights[i] * p(static_cast<Eigen::Index>(i));
    return s;
  }
};

inline BallGrid make_ball_grid(int n_radial = 48, int n_cos = 10, int n_phi = 11) {
  BallGrid grid;
  const auto [rx, rw] = gauss_legendre(n_radial, 0.0, M_PI);
  const auto [cx, cw] = gauss_legendre(n_cos, -1.0, 1.0);
  const double wphi = 2.0 * M_PI / n_phi;
  for (int i = 0; i < n_radial; ++i) {
    for (int j = 0; j < n_cos; ++j) {
      const double st = std::sqrt(std::max(0.0, 1.0 - cx[j] * cx[j]));
      for (int k = 0; k < n_phi; ++k) {
        const double phi = wphi * (k + 0.5);
        grid.nodes.emplace_back(rx[i] * st * std::cos(phi), rx[i] * st * std::sin(phi),
                                rx[i] * cx[j]);
        grid.weights.push_back(rw[i] * rx[i] * rx[i] * cw[j] * wphi);
        grid.radii.push_back(rx[i]);
      }
    }
  }
  return grid;
}

/// Heat kernel sampled on the grid (a density centred at the origin).
inline VectorXd kernel_on_grid(const BallGrid& grid, double t) {
  const int nmax = heat_kernel_cutoff(t);
  VectorXd k(grid.nodes.size());
  for (size_t i = 0; i < grid.nodes.size(); ++i) {
    k(static_cast<Eigen::Index>(i)) = heat_kernel_radial(t, grid.radii[i], nmax);
  }
  return k;
}

namespace detail {
/// Quaternions of all grid nodes and their inverses, precomputed once.
inline void grid_quaternions(const BallGrid& grid, std::vector<Quaternion>& q,
                             std::vector<Quaternion>& qinv) {
  S3Group s3;
  q.resize(grid.nodes.size());
  qinv.resize(grid.nodes.size());
  for (size_t i = 0; i < grid.nodes.size(); ++i) {
    q[i] = s3.exp(grid.nodes[i]);
    qinv[i] = q[i].inverse();
  }
}

/// |z(xi_i, delta_j)| = angle of exp(xi_i) exp(-delta_j).
inline double pair_angle(const Quaternion& qi, const Quaternion& qj_inv) {
  const Quaternion p = quat_mul(qi, qj_inv);
  return std::atan2(p.v.norm(), p.s);
}
}  // namespace detail

/// Propagates a grid density through the heat flow by group convolution,
/// p(t, xi) = int K(t, z(xi, d)) p0(d) dd with z = BCH(M(xi), -M(d)).
/// The discrete kernel is column-normalized, which conserves mass exactly
/// and keeps the t -> 0 limit the identity on the grid.
inline VectorXd convolve_propagate_serial(const BallGrid& grid, const VectorXd& p0, double t) {
  const int nmax = heat_kernel_cutoff(t);
  const size_t n = grid.nodes.size();
  std::vector<Quaternion> q, qinv;
  detail::grid_quaternions(grid, q, qinv);
  VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (size_t j = 0; j < n; ++j) {
    double colsum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      colsum += grid.weights[i] * heat_kernel_radial(t, detail::pair_angle(q[i], qinv[j]), nmax);
    }
    const double scale = grid.weights[j] * p0(static_cast<Eigen::Index>(j)) / colsum;
    for (size_t i = 0; i < n; ++i) {
      out(static_cast<Eigen::Index>(i)) +=
          scale * heat_kernel_radial(t, detail::pair_angle(q[i], qinv[j]), nmax);
    }
  }
  return out;
}

/// OpenMP variant of convolve_propagate_serial. Each output node owns its
/// accumulation, so results match the serial reference bit for bit.
inline VectorXd convolve_propagate(const BallGrid& grid, const VectorXd& p0, double t) {
  const int nmax = heat_kernel_cutoff(t);
  const size_t n = grid.nodes.size();
  std::vector<Quaternion> q, qinv;
  detail::grid_quaternions(grid, q, qinv);
  VectorXd colsum = VectorXd::Zero(static_cast<Eigen::Index>(n));
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < static_cast<long long>(n); ++j) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
      s += grid.weights[i] *
           heat_kernel_radial(t, detail::pair_angle(q[i], qinv[static_cast<size_t>(j)]), nmax);
    }
    colsum(j) = s;
  }
  VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(n));
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    double s = 0.0;
    for (size_t j = 0; j < n; ++j) {
      s += grid.weights[j] * p0(static_cast<Eigen::Index>(j)) / colsum(static_cast<Eigen::Index>(j)) *
           heat_kernel_radial(t, detail::pair_angle(q[static_cast<size_t>(i)], qinv[j]), nmax);
    }
    out(i) = s;
  }
  return out;
}

}  // namespace tsf
