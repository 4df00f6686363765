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

#include "cranempc/cranempc.h"

#include <cstring>
#include <string>

#include "core/run_io.hpp"
#include "core/scenario_io.hpp"
#include "core/sim.hpp"

namespace {

thread_local std::string t_last_error = "ok";

void set_error(const std::string& message) { t_last_error = message; }

cranempc_status fail(cranempc_status status, const std::string& message) {
  set_error(message);
  return status;
}

template <typename Fn>
cranempc_status guarded(const Fn& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    return fail(CRANEMPC_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(CRANEMPC_ERR_INTERNAL, e.what());
  }
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

struct cranempc_scenario {
  cranempc::ScenarioSpec spec;
};

struct cranempc_run {
  cranempc::ScenarioSpec spec;
  cranempc::RunLog log;
  cranempc::Metrics metrics;
};

extern "C" {

const char* cranempc_version(void) { return "0.1.0"; }

const char* cranempc_status_name(cranempc_status status) {
  switch (status) {
    case CRANEMPC_OK: return "ok";
    case CRANEMPC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CRANEMPC_ERR_VALIDATION: return "validation failed";
    case CRANEMPC_ERR_SOLVER: return "solver failure";
    case CRANEMPC_ERR_IO: return "io error";
    case CRANEMPC_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* cranempc_last_error(void) { return t_last_error.c_str(); }

static cranempc_status load_common(cranempc::ScenarioLoadResult result,
                                   cranempc_scenario** out) {
  if (!result.ok()) {
    return fail(CRANEMPC_ERR_VALIDATION, join_lines(result.diagnostics));
  }
  *out = new cranempc_scenario{std::move(*result.scenario)};
  return CRANEMPC_OK;
}

cranempc_status cranempc_scenario_load(const char* path, cranempc_scenario** out) {
  if (!path || !out) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { return load_common(cranempc::load_scenario_file(path), out); });
}

cranempc_status cranempc_scenario_load_string(const char* text, cranempc_scenario** out) {
  if (!text || !out) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { return load_common(cranempc::load_scenario_string(text), out); });
}

cranempc_status cranempc_scenario_validate_file(const char* path, char* buf, size_t cap,
                                                size_t* diag_len) {
  if (!path) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null path");
  return guarded([&]() -> cranempc_status {
    const cranempc::ScenarioLoadResult result = cranempc::load_scenario_file(path);
    const std::string diagnostics = join_lines(result.diagnostics);
    if (diag_len) *diag_len = diagnostics.size();
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, diagnostics.size());
      std::memcpy(buf, diagnostics.data(), n);
      buf[n] = '\0';
    }
    if (!result.ok()) return fail(CRANEMPC_ERR_VALIDATION, diagnostics);
    return CRANEMPC_OK;
  });
}

const char* cranempc_scenario_name(const cranempc_scenario* scenario) {
  return scenario ? scenario->spec.name.c_str() : "";
}

double cranempc_scenario_duration(const cranempc_scenario* scenario) {
  return scenario ? scenario->spec.duration : 0.0;
}

int cranempc_scenario_expects_collision(const cranempc_scenario* scenario) {
  return scenario && scenario->spec.expect_collision ? 1 : 0;
}

void cranempc_scenario_free(cranempc_scenario* scenario) { delete scenario; }

void cranempc_run_options_init(cranempc_run_options* options) {
  if (!options) return;
  options->iteration_cap = 0;
  options->seed = 0;
}

cranempc_status cranempc_run_scenario(const cranempc_scenario* scenario,
                                      const cranempc_run_options* options,
                                      cranempc_run** out) {
  if (!scenario || !out) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&]() -> cranempc_status {
    cranempc::ScenarioSpec spec = scenario->spec;
    if (options && options->iteration_cap > 0)
      spec.mpc.iteration_cap = options->iteration_cap;
    cranempc::RunLog log = cranempc::run_closed_loop(spec);
    if (log.rows.empty()) {
      return fail(CRANEMPC_ERR_SOLVER,
                  log.failure_message.empty() ? "run produced no log rows"
                                              : log.failure_message);
    }
    const cranempc::Metrics m = cranempc::metrics(log, spec);
    *out = new cranempc_run{std::move(spec), std::move(log), m};
    if ((*out)->log.solver_failed)
      return fail(CRANEMPC_ERR_SOLVER, (*out)->log.failure_message);
    return CRANEMPC_OK;
  });
}

cranempc_status cranempc_run_metrics(const cranempc_run* run, cranempc_metrics* out) {
  if (!run || !out) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null argument");
  const cranempc::Metrics& m = run->metrics;
  out->settle_time_s = m.settle_time;
  out->min_continuous_sd_m = m.min_continuous_sd;
  out->max_flow_m3s = m.max_flow;
  out->tracking_rmse = m.tracking_rmse;
  out->final_goal_error = m.final_goal_error;
  out->final_qd_a_norm = m.final_qd_a_norm;
  out->tau_dot_mean_last_second = m.tau_dot_mean_last_second;
  out->mean_solve_ms = m.mean_solve_ms;
  out->max_solve_ms = m.max_solve_ms;
  out->p95_solve_ms = m.p95_solve_ms;
  out->pendulum_period_s = m.pendulum_period_s;
  out->goal_reached = m.goal_reached ? 1 : 0;
  out->collided = m.collided ? 1 : 0;
  out->solver_failed = m.solver_failed ? 1 : 0;
  out->steps = m.steps;
  return CRANEMPC_OK;
}

cranempc_status cranempc_run_write_csv(const cranempc_run* run, const char* path) {
  if (!run || !path) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> cranempc_status {
    try {
      cranempc::write_run_csv(run->log, path);
    } catch (const std::runtime_error& e) {
      return fail(CRANEMPC_ERR_IO, e.what());
    }
    return CRANEMPC_OK;
  });
}

cranempc_status cranempc_run_write_metrics_json(const cranempc_run* run,
                                                const char* path) {
  if (!run || !path) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> cranempc_status {
    try {
      cranempc::write_metrics_json(run->metrics, run->log, run->spec, path);
    } catch (const std::runtime_error& e) {
      return fail(CRANEMPC_ERR_IO, e.what());
    }
    return CRANEMPC_OK;
  });
}

void cranempc_run_free(cranempc_run* run) { delete run; }

cranempc_status cranempc_report(const char* const* run_dirs, size_t count,
                                const char* out_csv_path, const char* out_json_path) {
  if (!run_dirs || count == 0)
    return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "at least one run directory is required");
  return guarded([&]() -> cranempc_status {
    std::vector<std::string> dirs;
    dirs.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (!run_dirs[i]) return fail(CRANEMPC_ERR_INVALID_ARGUMENT, "null run directory");
      dirs.emplace_back(run_dirs[i]);
    }
    try {
      const cranempc::Report report = cranempc::build_report(dirs);
      cranempc::write_report(report, out_csv_path ? out_csv_path : "",
                             out_json_path ? out_json_path : "");
    } catch (const std::runtime_error& e) {
      return fail(CRANEMPC_ERR_IO, e.what());
    }
    return CRANEMPC_OK;
  });
}

}  // extern "C"
