#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsf/errors.hpp"

namespace tsf {

/// One per-timestep filter record.
struct RunRecord {
  double t = 0.0;
  int run_id = 0;
  double chi2 = 0.0;
  double err_roll = 0.0, err_pitch = 0.0, err_yaw = 0.0;
  double sig3_roll = 0.0, sig3_pitch = 0.0, sig3_yaw = 0.0;
  double bias_err = 0.0;
  double bias_sig3 = 0.0;
};

/// RMS curves over Monte-Carlo runs at one record time.
struct AggregateRow {
  double t = 0.0;
  double rms_chi2 = 0.0;
  double mean_chi2 = 0.0;
  double rms_err_roll = 0.0, rms_err_pitch = 0.0, rms_err_yaw = 0.0;
  double rms_sig3_roll = 0.0, rms_sig3_pitch = 0.0, rms_sig3_yaw = 0.0;
  double rms_bias_err = 0.0;
  double rms_bias_sig3 = 0.0;
};

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline const char* runs_csv_header() {
  return "filter_name,run_id,t_s,chi2,err_roll_rad,err_pitch_rad,err_yaw_rad,"
         "sig3_roll,sig3_pitch,sig3_yaw,bias_err_rads,bias_sig3";
}

inline const char* aggregate_csv_header() {
  return "filter_name,t_s,rms_chi2,rms_err_roll,rms_err_pitch,rms_err_yaw,"
         "rms_sig3_roll,rms_sig3_pitch,rms_sig3_yaw,rms_bias_err,rms_bias_sig3,mean_chi2";
}

inline void write_runs_csv(const std::string& path, const std::string& filter_name,
                           const std::vector<std::vector<RunRecord>>& runs) {
  std::ofstream out(path);
  if (!out) throw TsfError("cannot write " + path);
  out << runs_csv_header() << "\n";
  for (const auto& run : runs) {
    for (const RunRecord& r : run) {
      out << filter_name << ',' << r.run_id << ',' << detail::fmt17(r.t) << ','
          << detail::fmt17(r.chi2) << ',' << detail::fmt17(r.err_roll) << ','
          << detail::fmt17(r.err_pitch) << ',' << detail::fmt17(r.err_yaw) << ','
          << detail::fmt17(r.sig3_roll) << ',' << detail::fmt17(r.sig3_pitch) << ','
          << detail::fmt17(r.sig3_yaw) << ',' << detail::fmt17(r.bias_err) << ','
          << detail::fmt17(r.bias_sig3) << "\n";
    }
  }
}

inline std::vector<std::vector<RunRecord>> read_runs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TsfError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != runs_csv_header()) {
    throw TsfError(path + ": unexpected runs.csv header");
  }
  std::vector<std::vector<RunRecord>> runs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::getline(ls, field, ',');  // filter_name
    RunRecord r;
    auto next = [&ls, &field]() {
      if (!std::getline(ls, field, ',')) throw TsfError("runs.csv: short row");
      return std::stod(field);
    };
    r.run_id = static_cast<int>(next());
    r.t = next();
    r.chi2 = next();
    r.err_roll = next();
    r.err_pitch = next();
    r.err_yaw = next();
    r.sig3_roll = next();
    r.sig3_pitch = next();
    r.sig3_yaw = next();
    r.bias_err = next();
    r.bias_sig3 = next();
    if (runs.empty() || runs.back().back().run_id != r.run_id) runs.emplace_back();
    runs.back().push_back(r);
  }
  return runs;
}

inline void write_aggregate_csv(const std::string& path, const std::string& filter_name,
                                const std::vector<AggregateRow>& rows) {
  std::ofstream out(path);
  if (!out) throw TsfError("cannot write " + path);
  out << aggregate_csv_header() << "\n";
  for (const AggregateRow& r : rows) {
    out << filter_name << ',' << detail::fmt17(r.t) << ',' << detail::fmt17(r.rms_chi2) << ','
        << detail::fmt17(r.rms_err_roll) << ',' << detail::fmt17(r.rms_err_pitch) << ','
        << detail::fmt17(r.rms_err_yaw) << ',' << detail::fmt17(r.rms_sig3_roll) << ','
        << detail::fmt17(r.rms_sig3_pitch) << ',' << detail::fmt17(r.rms_sig3_yaw) << ','
        << detail::fmt17(r.rms_bias_err) << ',' << detail::fmt17(r.rms_bias_sig3) << ','
        << detail::fmt17(r.mean_chi2) << "\n";
  }
}

/// Optional dump of the heat kernel on a radial grid, (r, K) pairs.
inline void write_heat_kernel_csv(const std::string& path, const std::vector<double>& r,
                                  const std::vector<double>& k) {
  std::ofstream out(path);
  if (!out) throw TsfError("cannot write " + path);
  out << "xi_norm,density\n";
  for (size_t i = 0; i < r.size(); ++i) {
    out << detail::fmt17(r[i]) << ',' << detail::fmt17(k[i]) << "\n";
  }
}

}  // namespace tsf
