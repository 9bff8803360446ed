#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tsf/cg.hpp"
#include "tsf/config.hpp"
#include "tsf/csv.hpp"
#include "tsf/errors.hpp"
#include "tsf/groups.hpp"
#include "tsf/measurement.hpp"
#include "tsf/propagation.hpp"
#include "tsf/rng.hpp"

namespace tsf {

// ---------------------------------------------------------------------------
// Scenario geometry
// ---------------------------------------------------------------------------

inline constexpr double kOrbitRate = 2.0 * M_PI / 5550.0;        // rad/s, 92.5 min period
inline constexpr double kOrbitInclinationDeg = 35.0;
inline constexpr double kDipoleStrengthUt = 25.54;
inline constexpr double kDipoleTiltDeg = 168.6;
inline constexpr double kDipoleRateDegS = 4.178e-3;

struct OrbitState {
  Vector3d r_unit;
  Quaternion attitude;  // inertial-to-body
  Vector3d omega_body;
};

inline Quaternion true_initial_attitude() {
  Quaternion q;
  q.v = Vector3d(-0.6744, -0.2126, -0.2126);
  q.s = 0.6744;
  q.normalize();
  return q;
}

/// Circular orbit crossing the ascending node at t = 0; constant body rate
/// along the negative orbit normal.
inline OrbitState orbit_state(double t) {
  OrbitState st;
  const double inc = kOrbitInclinationDeg * M_PI / 180.0;
  const double u = kOrbitRate * t;
  st.r_unit = Vector3d(std::cos(inc) * std::sin(u), -std::cos(u), std::sin(inc) * std::sin(u));
  st.omega_body = Vector3d(0.0, -kOrbitRate, 0.0);
  st.attitude = propagate_map(true_initial_attitude(), st.omega_body, t);
  return st;
}

/// Tilted-dipole field along the orbit, inertial frame, microtesla.
inline Vector3d dipole_field(double t) {
  const double theta_e = kDipoleTiltDeg * M_PI / 180.0;
  const double alpha_e = kDipoleRateDegS * M_PI / 180.0;
  const Vector3d m(std::sin(theta_e) * std::sin(alpha_e * t),
                   std::sin(theta_e) * std::cos(alpha_e * t), std::cos(theta_e));
  const Vector3d r = orbit_state(t).r_unit;
  return kDipoleStrengthUt * (3.0 * m.dot(r) * r - m);
}

// ---------------------------------------------------------------------------
// Gyro simulation (trapezoidal discretization of the rate-bias SDE pair)
// ---------------------------------------------------------------------------

struct GyroPath {
  std::vector<Vector3d> omega_m;  // measured rate over interval k
  std::vector<Vector3d> beta;     // true bias at the grid times, size steps+1
};

/// beta_{k+1} = beta_k + sigma_zeta sqrt(dt) w1,
/// omega_mk = omega_k + (beta_k + beta_{k+1})/2 + sqrt(se^2/dt + sz^2 dt/12) w2.
inline GyroPath simulate_gyro(const std::vector<Vector3d>& omega_true,
                              const ScenarioConfig& cfg, RngStream& rng) {
  const double dt = 1.0 / cfg.gyro_rate_hz;
  const size_t steps = omega_true.size();
  GyroPath path;
  path.omega_m.resize(steps);
  path.beta.resize(steps + 1);
  path.beta[0] = cfg.true_initial_bias_rad_s();
  const double walk = cfg.sigma_zeta * std::sqrt(dt);
  const double white = std::sqrt(cfg.sigma_eta * cfg.sigma_eta / dt +
                                 cfg.sigma_zeta * cfg.sigma_zeta * dt / 12.0);
  for (size_t k = 0; k < steps; ++k) {
    Vector3d w1, w2;
    rng.fill_normal(w1);
    rng.fill_normal(w2);
    path.beta[k + 1] = path.beta[k] + walk * w1;
    path.omega_m[k] = omega_true[k] + 0.5 * (path.beta[k] + path.beta[k + 1]) + white * w2;
  }
  return path;
}

// ---------------------------------------------------------------------------
// Single filter run
// ---------------------------------------------------------------------------

namespace detail {
inline RunRecord make_record(const BiasGroup& group, const ConcentratedGaussian<BiasGroup>& cg,
                             const Matrix3d& r_true, const Vector3d& beta_true, double t,
                             int run_id) {
  RunRecord rec;
  rec.t = t;
  rec.run_id = run_id;
  RotBias g_true{r_true, beta_true, group.law};
  rec.chi2 = chi2(group, cg, g_true);
  const Vector3d e = so3_log(Matrix3d(r_true * cg.mu.R.transpose()));
  rec.err_roll = e.x();
  rec.err_pitch = e.y();
  rec.err_yaw = e.z();
  rec.sig3_roll = 3.0 * std::sqrt(cg.sigma(0, 0));
  rec.sig3_pitch = 3.0 * std::sqrt(cg.sigma(1, 1));
  rec.sig3_yaw = 3.0 * std::sqrt(cg.sigma(2, 2));
  rec.bias_err = (cg.mu.beta - beta_true).norm();
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(Matrix3d(cg.sigma.block<3, 3>(3, 3)));
  rec.bias_sig3 = 3.0 * std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  return rec;
}
}  // namespace detail

/// One recursive TSF run: update -> whiten at magnetometer ticks, then
/// CTUT propagation + MAP flow + whiten at gyro cadence. The bias MAP is
/// refreshed into the TSSDE at every propagation interval.
inline std::vector<RunRecord> run_filter(const ScenarioConfig& cfg, int run_id) {
  const BiasGroup group(cfg.filter_law);
  const BiasGroup se3_law(BiasLaw::kSemiDirect);
  const double dt = 1.0 / cfg.gyro_rate_hz;
  const int steps = static_cast<int>(std::llround(cfg.sim_length_s * cfg.gyro_rate_hz));
  const int mag_every = static_cast<int>(std::llround(cfg.gyro_rate_hz / cfg.mag_rate_hz));
  const int record_every =
      std::max(1, static_cast<int>(std::llround(cfg.gyro_rate_hz / cfg.record_rate_hz)));

  // truth and measurements
  std::vector<Vector3d> omega_true(steps);
  for (int k = 0; k < steps; ++k) omega_true[k] = Vector3d(0.0, -kOrbitRate, 0.0);
  RngStream gyro_rng(cfg.master_seed, run_id, RngChannel::kGyro);
  const GyroPath gyro = simulate_gyro(omega_true, cfg, gyro_rng);
  RngStream mag_rng(cfg.master_seed, run_id, RngChannel::kMag);

  // initial estimate: attitude sampled from a CG about truth, bias fixed
  RngStream init_rng(cfg.master_seed, run_id, RngChannel::kInit);
  Vector3d xi0;
  init_rng.fill_normal(xi0);
  const Matrix3d r_true0 = quat_to_rot(orbit_state(0.0).attitude);
  RotBias mu0{so3_exp(cfg.init_att_sigma_rad * xi0) * r_true0, cfg.init_bias_est_rad_s,
              BiasLaw::kSemiDirect};

  // initial covariance is stated in SE(3)-law coordinates
  Matrix6d sigma0 = Matrix6d::Zero();
  sigma0.topLeftCorner<3, 3>() = cfg.init_att_cov();
  sigma0.bottomRightCorner<3, 3>() = cfg.init_bias_cov();
  ConcentratedGaussian<BiasGroup> cg{mu0, sigma0};
  if (cfg.filter_law != BiasLaw::kSemiDirect) {
    cg = transport_law(se3_law, group, cg, cfg.ut_lambda);
  }

  WhitenOptions wopt;
  wopt.tol = cfg.whiten_tol;
  wopt.max_iter = cfg.whiten_max_iter;
  wopt.lambda = cfg.ut_lambda;

  std::vector<RunRecord> records;
  records.reserve(static_cast<size_t>(steps / record_every) + 2);

  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    const bool mag_tick = (k % mag_every) == 0;
    if (mag_tick) {
      const Vector3d b = dipole_field(t);
      const Matrix3d r_true = quat_to_rot(orbit_state(t).attitude);
      Vector3d noise;
      mag_rng.fill_normal(noise);
      const VectorXd z = r_true * b + cfg.mag_noise_sigma_ut * noise;
      MeasurementModel<BiasGroup> mm;
      mm.d = 3;
      mm.h = [&b](const RotBias& g) -> VectorXd { return g.R * b; };
      mm.r = cfg.mag_noise_sigma_ut * cfg.mag_noise_sigma_ut * Matrix3d::Identity();
      UpdateOptions uopt;
      uopt.lambda = cfg.ut_lambda;
      const OffsetGaussian<BiasGroup> og = ut_update(group, cg, z, mm, uopt);
      cg = whiten(group, og, wopt);
    }
    if ((k % record_every) == 0) {
      const Matrix3d r_true = quat_to_rot(orbit_state(t).attitude);
      records.push_back(detail::make_record(group, cg, r_true, gyro.beta[static_cast<size_t>(k)],
                                            t, run_id));
    }
    if (k == steps) break;

    // propagate over [t, t + dt) with the rate measured on this interval
    const Vector3d omega_m = gyro.omega_m[static_cast<size_t>(k)];
    const SdeModel model =
        (cfg.filter_law == BiasLaw::kSemiDirect)
            ? model_gyrobias_se3(omega_m, cg.mu.beta, cfg.q_eta(), cfg.q_zeta())
            : model_gyrobias_dp(omega_m, cg.mu.beta, cfg.q_eta(), cfg.q_zeta());
    Moments m0{VectorXd::Zero(6), cg.sigma};
    const Moments m1 = ctut_propagate(m0, model, dt, dt, cfg.ut_lambda);
    const RotBias mu1 = propagate_map(cg.mu, omega_m, dt);
    cg = whiten(group, OffsetGaussian<BiasGroup>{mu1, m1.mean, m1.cov}, wopt);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Monte-Carlo driver
// ---------------------------------------------------------------------------

struct MonteCarloResult {
  std::vector<std::vector<RunRecord>> runs;  // empty vector for an aborted run
  std::vector<AggregateRow> aggregate;
  std::vector<int> aborted_runs;
};

namespace detail {
inline std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<RunRecord>>& runs) {
  size_t nt = 0;
  for (const auto& r : runs) nt = std::max(nt, r.size());
  std::vector<AggregateRow> agg(nt);
  for (size_t i = 0; i < nt; ++i) {
    double n = 0, c1 = 0, c2 = 0, er = 0, ep = 0, ey = 0, sr = 0, sp = 0, sy = 0, be = 0, bs = 0;
    for (const auto& run : runs) {
      if (i >= run.size()) continue;
      const RunRecord& r = run[i];
      n += 1.0;
      c1 += r.chi2;
      c2 += r.chi2 * r.chi2;
      er += r.err_roll * r.err_roll;
      ep += r.err_pitch * r.err_pitch;
      ey += r.err_yaw * r.err_yaw;
      sr += r.sig3_roll * r.sig3_roll;
      sp += r.sig3_pitch * r.sig3_pitch;
      sy += r.sig3_yaw * r.sig3_yaw;
      be += r.bias_err * r.bias_err;
      bs += r.bias_sig3 * r.bias_sig3;
    }
    AggregateRow& a = agg[i];
    for (const auto& run : runs) {
      if (i < run.size()) {
        a.t = run[i].t;
        break;
      }
    }
    if (n > 0) {
      a.mean_chi2 = c1 / n;
      a.rms_chi2 = std::sqrt(c2 / n);
      a.rms_err_roll = std::sqrt(er / n);
      a.rms_err_pitch = std::sqrt(ep / n);
      a.rms_err_yaw = std::sqrt(ey / n);
      a.rms_sig3_roll = std::sqrt(sr / n);
      a.rms_sig3_pitch = std::sqrt(sp / n);
      a.rms_sig3_yaw = std::sqrt(sy / n);
      a.rms_bias_err = std::sqrt(be / n);
      a.rms_bias_sig3 = std::sqrt(bs / n);
    }
  }
  return agg;
}

inline MonteCarloResult finish_monte_carlo(std::vector<std::vector<RunRecord>> runs) {
  MonteCarloResult res;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].empty()) res.aborted_runs.push_back(static_cast<int>(i));
  }
  res.aggregate = aggregate_runs(runs);
  res.runs = std::move(runs);
  return res;
}
}  // namespace detail

/// Serial reference Monte Carlo.
inline MonteCarloResult monte_carlo_serial(const ScenarioConfig& cfg) {
  std::vector<std::vector<RunRecord>> runs(cfg.mc_runs);
  for (int i = 0; i < cfg.mc_runs; ++i) {
    try {
      runs[static_cast<size_t>(i)] = run_filter(cfg, i);
    } catch (const TsfError&) {
      runs[static_cast<size_t>(i)].clear();
    }
  }
  return detail::finish_monte_carlo(std::move(runs));
}

/// OpenMP Monte Carlo. Runs are independent streams keyed by run id and the
/// aggregation reduces in run order, so the result is identical to the
/// serial reference for any thread count.
inline MonteCarloResult monte_carlo(const ScenarioConfig& cfg) {
  std::vector<std::vector<RunRecord>> runs(cfg.mc_runs);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.mc_runs; ++i) {
    try {
      runs[static_cast<size_t>(i)] = run_filter(cfg, i);
    } catch (const TsfError&) {
      runs[static_cast<size_t>(i)].clear();
    }
  }
  return detail::finish_monte_carlo(std::move(runs));
}

/// +-1 sigma band around the expected consistency value of 1, using the
/// chi-squared variance 2/(n mc_runs).
inline std::pair<double, double> expected_chi2_band(int state_dim, int mc_runs) {
  const double half = std::sqrt(2.0 / (static_cast<double>(state_dim) * mc_runs));
  return {1.0 - half, 1.0 + half};
}

}  // namespace tsf
