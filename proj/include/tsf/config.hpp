#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tsf/errors.hpp"
#include "tsf/groups.hpp"

namespace tsf {

/// Experiment parameters. Defaults reproduce the full-scale scenario
/// (4 h, 200 runs); desk_scale() is the CI-sized variant.
struct ScenarioConfig {
  double sim_length_s = 14400.0;
  double gyro_rate_hz = 10.0;
  double mag_rate_hz = 1.0;
  double sigma_eta = 3.1623e-7;    // sqrt spectral density, rad/s^(1/2)
  double sigma_zeta = 3.1623e-10;  // rad/s^(3/2)
  Eigen::Vector3d true_initial_bias_deg_hr{20.0, 20.0, 20.0};
  double mag_noise_sigma_ut = 0.05;  // 50 nT, field carried in microtesla
  double init_att_sigma_rad = 10.0 * M_PI / 180.0;
  double init_bias_sigma_rad_s = 20.0 * M_PI / 648000.0;  // 20 deg/hr
  Eigen::Vector3d init_bias_est_rad_s{0.0, 0.0, 0.0};
  double whiten_tol = 1e-15;
  int whiten_max_iter = 50;
  double ut_lambda = 0.0;
  int mc_runs = 200;
  std::uint64_t master_seed = 1;
  BiasLaw filter_law = BiasLaw::kSemiDirect;
  double record_rate_hz = 1.0;

  static ScenarioConfig desk_scale() {
    ScenarioConfig cfg;
    cfg.sim_length_s = 3600.0;
    cfg.mc_runs = 50;
    return cfg;
  }

  Eigen::Matrix3d q_eta() const {
    return sigma_eta * sigma_eta * Eigen::Matrix3d::Identity();
  }
  Eigen::Matrix3d q_zeta() const {
    return sigma_zeta * sigma_zeta * Eigen::Matrix3d::Identity();
  }
  Eigen::Vector3d true_initial_bias_rad_s() const {
    return true_initial_bias_deg_hr * (M_PI / 180.0 / 3600.0);
  }
  Eigen::Matrix3d init_att_cov() const {
    return init_att_sigma_rad * init_att_sigma_rad * Eigen::Matrix3d::Identity();
  }
  Eigen::Matrix3d init_bias_cov() const {
    return init_bias_sigma_rad_s * init_bias_sigma_rad_s * Eigen::Matrix3d::Identity();
  }
  const char* filter_name() const {
    return filter_law == BiasLaw::kSemiDirect ? "tsf-se3" : "tsf-dp";
  }
};

inline BiasLaw parse_law(const std::string& s) {
  if (s == "se3" || s == "SE3") return BiasLaw::kSemiDirect;
  if (s == "dp" || s == "DP") return BiasLaw::kDirectProduct;
  throw TsfError("unknown filter law '" + s + "' (expected se3 or dp)");
}

/// Flat key = value file, '#' comments, SI units throughout.
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TsfError("cannot open config file " + path);
  ScenarioConfig cfg = ScenarioConfig::desk_scale();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw TsfError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::istringstream vs(value);
    if (key == "sim_length_s") vs >> cfg.sim_length_s;
    else if (key == "gyro_rate_hz") vs >> cfg.gyro_rate_hz;
    else if (key == "mag_rate_hz") vs >> cfg.mag_rate_hz;
    else if (key == "sigma_eta") vs >> cfg.sigma_eta;
    else if (key == "sigma_zeta") vs >> cfg.sigma_zeta;
    else if (key == "true_initial_bias_deg_hr")
      vs >> cfg.true_initial_bias_deg_hr.x() >> cfg.true_initial_bias_deg_hr.y() >>
          cfg.true_initial_bias_deg_hr.z();
    else if (key == "mag_noise_sigma_ut") vs >> cfg.mag_noise_sigma_ut;
    else if (key == "init_att_sigma_rad") vs >> cfg.init_att_sigma_rad;
    else if (key == "init_bias_sigma_rad_s") vs >> cfg.init_bias_sigma_rad_s;
    else if (key == "init_bias_est_rad_s")
      vs >> cfg.init_bias_est_rad_s.x() >> cfg.init_bias_est_rad_s.y() >>
          cfg.init_bias_est_rad_s.z();
    else if (key == "whiten_tol") vs >> cfg.whiten_tol;
    else if (key == "whiten_max_iter") vs >> cfg.whiten_max_iter;
    else if (key == "ut_lambda") vs >> cfg.ut_lambda;
    else if (key == "mc_runs") vs >> cfg.mc_runs;
    else if (key == "master_seed") vs >> cfg.master_seed;
    else if (key == "record_rate_hz") vs >> cfg.record_rate_hz;
    else if (key == "filter_law") cfg.filter_law = parse_law(value);
    else throw TsfError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (vs.fail()) {
      throw TsfError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace tsf
