// Copyright 2026 The cranempc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/run_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace cranempc {

namespace {

using nlohmann::ordered_json;

void append_number(std::string* out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  *out += buf;
}

ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

// Solver wall time is deliberately not serialized: the physics columns are
// byte-reproducible under an iteration cap, timing is not. Timing statistics
// live in metrics.json.
std::string run_log_to_csv(const RunLog& log) {
  std::string out;
  out.reserve(log.rows.size() * 360 + 512);
  out +=
      "t,q1,q2,q3,q4,q5,q6,q7,qd1,qd2,qd3,qd4,qd5,qd6,qd7,u1,u2,u3,u4,u5,"
      "tau,tau_dot,flow,sd1,sd2,sd3,substep_min_sd,iterations,objective,"
      "pen_joint_limits,pen_accel_limits,pen_flow,pen_collision,pen_tau_rate\n";
  for (const LogRow& row : log.rows) {
    append_number(&out, row.t);
    for (int i = 0; i < 7; ++i) {
      out += ',';
      append_number(&out, row.q[i]);
    }
    for (int i = 0; i < 7; ++i) {
      out += ',';
      append_number(&out, row.qd[i]);
    }
    for (int i = 0; i < 5; ++i) {
      out += ',';
      append_number(&out, row.u[i]);
    }
    for (double v : {row.tau, row.tau_dot, row.flow, row.sd[0], row.sd[1], row.sd[2],
                     row.substep_min_sd}) {
      out += ',';
      append_number(&out, v);
    }
    out += ',';
    out += std::to_string(row.solver_iterations);
    for (double v : {row.objective, row.penalties.joint_limits, row.penalties.accel_limits,
                     row.penalties.flow, row.penalties.collision, row.penalties.tau_rate}) {
      out += ',';
      append_number(&out, v);
    }
    out += '\n';
  }
  if (log.solver_failed) {
    out += "# run truncated: " + log.failure_message + "\n";
  }
  return out;
}

void write_run_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open csv for writing: " + path);
  out << run_log_to_csv(log);
}

nlohmann::ordered_json metrics_to_json(const Metrics& m, const RunLog& log,
                                       const ScenarioSpec& scenario) {
  ordered_json j;
  j["scenario"] = scenario.name;
  j["steps"] = m.steps;
  j["duration_s"] = log.duration;
  j["control_period_s"] = log.control_period;
  j["plant_dt_s"] = log.plant_dt;
  j["settle_time_s"] = finite_or_null(m.settle_time);
  j["min_continuous_sd_m"] = m.min_continuous_sd;
  j["max_flow_m3s"] = m.max_flow;
  j["pump_flow_max_m3s"] = scenario.crane.pump_flow_max;
  j["tracking_rmse"] = m.tracking_rmse;
  j["final_goal_error"] = m.final_goal_error;
  j["final_qd_a_norm"] = m.final_qd_a_norm;
  j["tau_dot_mean_last_second"] = m.tau_dot_mean_last_second;
  j["mean_solve_ms"] = m.mean_solve_ms;
  j["max_solve_ms"] = m.max_solve_ms;
  j["p95_solve_ms"] = m.p95_solve_ms;
  j["pendulum_period_s"] = finite_or_null(m.pendulum_period_s);
  j["goal_reached"] = m.goal_reached;
  j["collided"] = m.collided;
  j["expect_collision"] = scenario.expect_collision;
  j["solver_failed"] = m.solver_failed;
  if (m.solver_failed) j["failure_message"] = log.failure_message;
  return j;
}

void write_metrics_json(const Metrics& m, const RunLog& log,
                        const ScenarioSpec& scenario, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open metrics file for writing: " + path);
  out << metrics_to_json(m, log, scenario).dump(2) << "\n";
}

Report build_report(const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) throw std::invalid_argument("report needs at least one run directory");

  struct Entry {
    std::string dir;
    ordered_json metrics;
  };
  std::vector<Entry> entries;
  for (const std::string& dir : run_dirs) {
    const std::string path = dir + "/metrics.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing metrics file: " + path);
    ordered_json m;
    try {
      in >> m;
    } catch (const std::exception& e) {
      throw std::runtime_error("cannot parse " + path + ": " + e.what());
    }
    entries.push_back({dir, std::move(m)});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.metrics.value("scenario", "") < b.metrics.value("scenario", "");
  });

  // Pair *_on/*_off scenario stems.
  const auto stem_of = [](const std::string& name) -> std::pair<std::string, int> {
    if (name.size() > 3 && name.ends_with("_on")) return {name.substr(0, name.size() - 3), 1};
    if (name.size() > 4 && name.ends_with("_off")) return {name.substr(0, name.size() - 4), 0};
    return {"", -1};
  };
  std::map<std::string, std::array<const Entry*, 2>> pairs;
  for (const Entry& e : entries) {
    const auto [stem, which] = stem_of(e.metrics.value("scenario", ""));
    if (which >= 0) pairs[stem][size_t(which)] = &e;
  }

  Report report;
  ordered_json runs = ordered_json::array();
  std::string csv =
      "run_dir,scenario,goal_reached,collided,min_continuous_sd_m,settle_time_s,"
      "tracking_rmse,max_flow_m3s,p95_solve_ms,pair_stem,delta_min_sd_on_minus_off\n";
  const auto csv_field = [](const ordered_json& m, const char* key) -> std::string {
    if (!m.contains(key) || m.at(key).is_null()) return "";
    const auto& v = m.at(key);
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v.get<double>());
    return buf;
  };
  for (const Entry& e : entries) {
    const std::string name = e.metrics.value("scenario", "");
    ordered_json row;
    row["run_dir"] = e.dir;
    row["metrics"] = e.metrics;
    const auto [stem, which] = stem_of(name);
    std::string pair_stem, delta;
    if (which == 1 && pairs.count(stem) && pairs[stem][0] && pairs[stem][1]) {
      const double on_sd = pairs[stem][1]->metrics.value("min_continuous_sd_m", 0.0);
      const double off_sd = pairs[stem][0]->metrics.value("min_continuous_sd_m", 0.0);
      pair_stem = stem;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.12g", on_sd - off_sd);
      delta = buf;
      row["pair_stem"] = stem;
      row["delta_min_sd_on_minus_off"] = on_sd - off_sd;
    }
    runs.push_back(row);
    csv += e.dir + "," + name + "," + csv_field(e.metrics, "goal_reached") + "," +
           csv_field(e.metrics, "collided") + "," +
           csv_field(e.metrics, "min_continuous_sd_m") + "," +
           csv_field(e.metrics, "settle_time_s") + "," +
           csv_field(e.metrics, "tracking_rmse") + "," +
           csv_field(e.metrics, "max_flow_m3s") + "," +
           csv_field(e.metrics, "p95_solve_ms") + "," + pair_stem + "," + delta + "\n";
  }

  ordered_json pair_rows = ordered_json::array();
  for (const auto& [stem, pair] : pairs) {
    if (!pair[0] || !pair[1]) continue;
    const double on_sd = pair[1]->metrics.value("min_continuous_sd_m", 0.0);
    const double off_sd = pair[0]->metrics.value("min_continuous_sd_m", 0.0);
    pair_rows.push_back({{"stem", stem},
                         {"on_dir", pair[1]->dir},
                         {"off_dir", pair[0]->dir},
                         {"on_min_sd", on_sd},
                         {"off_min_sd", off_sd},
                         {"delta_min_sd_on_minus_off", on_sd - off_sd}});
  }
  report.json["runs"] = runs;
  report.json["pairs"] = pair_rows;
  report.csv = csv;
  return report;
}

void write_report(const Report& report, const std::string& csv_path,
                  const std::string& json_path) {
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open report csv for writing: " + csv_path);
    out << report.csv;
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open report json for writing: " + json_path);
    out << report.json.dump(2) << "\n";
  }
}

}  // namespace cranempc
