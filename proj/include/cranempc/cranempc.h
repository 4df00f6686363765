/* Copyright 2026 The cranempc authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the cranempc shared library: scenario loading and validation,
 * closed-loop execution of the collision-free sway-damping MPC, run outputs
 * (CSV log, metrics JSON) and report aggregation. Handles are opaque; every
 * function returns a status code and a thread-local message describes the
 * most recent failure.
 */

#ifndef CRANEMPC_CRANEMPC_H_
#define CRANEMPC_CRANEMPC_H_

#include <stddef.h>

#if defined(_WIN32)
#define CRANEMPC_API __declspec(dllexport)
#else
#define CRANEMPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cranempc_status {
  CRANEMPC_OK = 0,
  CRANEMPC_ERR_INVALID_ARGUMENT = 1,
  CRANEMPC_ERR_VALIDATION = 2, /* scenario failed to parse or validate */
  CRANEMPC_ERR_SOLVER = 3,     /* run truncated by a solver failure */
  CRANEMPC_ERR_IO = 4,
  CRANEMPC_ERR_INTERNAL = 5
} cranempc_status;

typedef struct cranempc_scenario cranempc_scenario;
typedef struct cranempc_run cranempc_run;

CRANEMPC_API const char* cranempc_version(void);
CRANEMPC_API const char* cranempc_status_name(cranempc_status status);

/* Message describing the most recent failure on this thread; never NULL. */
CRANEMPC_API const char* cranempc_last_error(void);

/* --- Scenarios ---------------------------------------------------------- */

CRANEMPC_API cranempc_status cranempc_scenario_load(const char* path,
                                                    cranempc_scenario** out);
CRANEMPC_API cranempc_status cranempc_scenario_load_string(const char* text,
                                                           cranempc_scenario** out);

/* Writes parse/validation diagnostics (one per line) into buf. On success
 * with a valid scenario, writes an empty string. diag_len receives the
 * required length excluding the terminator; the buffer is always
 * NUL-terminated when cap > 0. Returns CRANEMPC_OK when the scenario is
 * valid, CRANEMPC_ERR_VALIDATION otherwise. */
CRANEMPC_API cranempc_status cranempc_scenario_validate_file(const char* path,
                                                             char* buf, size_t cap,
                                                             size_t* diag_len);

CRANEMPC_API const char* cranempc_scenario_name(const cranempc_scenario* scenario);
CRANEMPC_API double cranempc_scenario_duration(const cranempc_scenario* scenario);
CRANEMPC_API int cranempc_scenario_expects_collision(const cranempc_scenario* scenario);
CRANEMPC_API void cranempc_scenario_free(cranempc_scenario* scenario);

/* --- Runs --------------------------------------------------------------- */

typedef struct cranempc_run_options {
  /* > 0 replaces the solver wall-clock budget with a fixed iteration count,
   * making runs bit-reproducible across machines. */
  int iteration_cap;
  unsigned int seed; /* recorded for provenance; the pipeline is deterministic */
} cranempc_run_options;

CRANEMPC_API void cranempc_run_options_init(cranempc_run_options* options);

/* Executes the closed loop. Returns CRANEMPC_OK when the run completed
 * (with or without collision) and CRANEMPC_ERR_SOLVER when it was truncated
 * by a solver failure; in both cases *out holds the (possibly partial) run
 * for inspection and serialization. */
CRANEMPC_API cranempc_status cranempc_run_scenario(const cranempc_scenario* scenario,
                                                   const cranempc_run_options* options,
                                                   cranempc_run** out);

typedef struct cranempc_metrics {
  double settle_time_s; /* INFINITY when the pendulum never settles */
  double min_continuous_sd_m;
  double max_flow_m3s;
  double tracking_rmse;
  double final_goal_error;
  double final_qd_a_norm;
  double tau_dot_mean_last_second;
  double mean_solve_ms;
  double max_solve_ms;
  double p95_solve_ms;
  double pendulum_period_s;
  int goal_reached;
  int collided;
  int solver_failed;
  int steps;
} cranempc_metrics;

CRANEMPC_API cranempc_status cranempc_run_metrics(const cranempc_run* run,
                                                  cranempc_metrics* out);
CRANEMPC_API cranempc_status cranempc_run_write_csv(const cranempc_run* run,
                                                    const char* path);
CRANEMPC_API cranempc_status cranempc_run_write_metrics_json(const cranempc_run* run,
                                                             const char* path);
CRANEMPC_API void cranempc_run_free(cranempc_run* run);

/* --- Reports ------------------------------------------------------------ */

/* Aggregates metrics.json files from the given run directories into a
 * comparison table; *_on/*_off scenario pairs get min-sd delta columns.
 * Either output path may be NULL to skip that format. */
CRANEMPC_API cranempc_status cranempc_report(const char* const* run_dirs, size_t count,
                                             const char* out_csv_path,
                                             const char* out_json_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CRANEMPC_CRANEMPC_H_ */
