#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tsf/errors.hpp"
#include "tsf/linalg.hpp"
#include "tsf/propagation.hpp"
#include "tsf/rng.hpp"

namespace tsf {

/// Empirical moments with delete-one jackknife standard errors.
struct McResult {
  VectorXd mean;
  MatrixXd cov;
  VectorXd mean_se;
  MatrixXd cov_se;
  int paths_used = 0;
  int escaped = 0;
};

namespace detail {

/// Heun (stochastic trapezoidal) integration of one Stratonovich path.
/// Returns false if the rotational sub-norm reaches pi.
inline bool integrate_heun_path(const SdeModel& model, const MatrixXd& l0, const MatrixXd& lq,
                                const VectorXd& mean0, double t_span, double dt,
                                std::uint64_t seed, std::uint64_t path, VectorXd& x_out) {
  RngStream rng(seed, path, RngChannel::kPath);
  VectorXd z(model.n);
  rng.fill_normal(z);
  VectorXd x = mean0 + l0 * z;
  const int nsteps = std::max(1, static_cast<int>(std::llround(t_span / dt)));
  const double h = t_span / nsteps;
  const double sqrt_h = std::sqrt(h);
  VectorXd zw(model.m);
  for (int s = 0; s < nsteps; ++s) {
    if (x.head(model.rot_dim).norm() >= M_PI) return false;
    rng.fill_normal(zw);
    const VectorXd dw = sqrt_h * (lq * zw);
    const VectorXd f0 = model.drift(x);
    const MatrixXd g0 = model.diffusion(x);
    const VectorXd xp = x + h * f0 + g0 * dw;
    x = x + 0.5 * h * (f0 + model.drift(xp)) + 0.5 * ((g0 + model.diffusion(xp)) * dw);
  }
  if (x.head(model.rot_dim).norm() >= M_PI) return false;
  x_out = x;
  return true;
}

inline McResult reduce_paths(const std::vector<VectorXd>& ends, const std::vector<char>& ok,
                             int n) {
  McResult res;
  res.escaped = 0;
  std::vector<const VectorXd*> kept;
  kept.reserve(ends.size());
  for (size_t i = 0; i < ends.size(); ++i) {
    if (ok[i]) {
      kept.push_back(&ends[i]);
    } else {
      ++res.escaped;
    }
  }
  const int npaths = static_cast<int>(kept.size());
  res.paths_used = npaths;
  if (npaths == 0) throw PathEscape("mc_oracle: every path reached the cut locus");

  VectorXd s1 = VectorXd::Zero(n);
  MatrixXd s2 = MatrixXd::Zero(n, n);
  for (const VectorXd* x : kept) {
    s1 += *x;
    s2 += (*x) * x->transpose();
  }
  res.mean = s1 / npaths;
  res.cov = symmetrize(s2 / npaths - res.mean * res.mean.transpose());

  // delete-one jackknife over the kept paths
  VectorXd jm_sum = VectorXd::Zero(n), jm_sq = VectorXd::Zero(n);
  MatrixXd jc_sum = MatrixXd::Zero(n, n), jc_sq = MatrixXd::Zero(n, n);
  for (const VectorXd* x : kept) {
    const VectorXd mi = (s1 - *x) / (npaths - 1);
    const MatrixXd ci = (s2 - (*x) * x->transpose()) / (npaths - 1) - mi * mi.transpose();
    jm_sum += mi;
    jm_sq += mi.cwiseProduct(mi);
    jc_sum += ci;
    jc_sq += ci.cwiseProduct(ci);
  }
  const double fac = static_cast<double>(npaths - 1) / npaths;
  res.mean_se =
      (fac * (jm_sq - jm_sum.cwiseProduct(jm_sum) / npaths).cwiseMax(0.0)).cwiseSqrt();
  res.cov_se = (fac * (jc_sq - jc_sum.cwiseProduct(jc_sum) / npaths).cwiseMax(0.0)).cwiseSqrt();
  return res;
}

}  // namespace detail

/// Serial reference Monte-Carlo oracle for a TSSDE: Heun integration of the
/// Stratonovich form, empirical moments with jackknife standard errors.
/// Escaped paths (rotational norm at pi) are excluded and counted.
inline McResult mc_oracle_serial(const SdeModel& model, const Moments& m0, double t_span,
                                 double dt, int paths, std::uint64_t seed) {
  const MatrixXd l0 = safe_cholesky(m0.cov);
  const MatrixXd lq = safe_cholesky(model.q);
  std::vector<VectorXd> ends(paths);
  std::vector<char> ok(paths, 0);
  for (int p = 0; p < paths; ++p) {
    ok[p] = detail::integrate_heun_path(model, l0, lq, m0.mean, t_span, dt, seed,
                                        static_cast<std::uint64_t>(p), ends[p]);
  }
  return detail::reduce_paths(ends, ok, model.n);
}

/// OpenMP variant. Paths derive their streams from (seed, path_index) and the
/// reduction runs serially in path order, so the result matches the serial
/// reference exactly for any thread count.
inline McResult mc_oracle(const SdeModel& model, const Moments& m0, double t_span, double dt,
                          int paths, std::uint64_t seed) {
  const MatrixXd l0 = safe_cholesky(m0.cov);
  const MatrixXd lq = safe_cholesky(model.q);
  std::vector<VectorXd> ends(paths);
  std::vector<char> ok(paths, 0);
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < paths; ++p) {
    ok[p] = detail::integrate_heun_path(model, l0, lq, m0.mean, t_span, dt, seed,
                                        static_cast<std::uint64_t>(p), ends[p]);
  }
  return detail::reduce_paths(ends, ok, model.n);
}

}  // namespace tsf
