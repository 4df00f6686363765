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

#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core/collision.hpp"
#include "core/crane_model.hpp"
#include "core/edf_map.hpp"
#include "core/mpc.hpp"
#include "core/reference.hpp"
#include "core/types.hpp"

namespace cranempc {

// Closed-loop harness: fine-timestep plant with the MPC at the control rate,
// scheduled obstacle and disturbance events, and the experiment metrics.

struct ObstacleEvent {
  double time = 0.0;  // s; events at t <= 0 shape the initial map
  bool insert = true; // false removes the box
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Zero();
};

struct DisturbanceEvent {
  double time = 0.0;
  Vec2 impulse = Vec2::Zero();  // added to the passive joint rates, rad/s
};

struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double resolution = 0.1;
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();
  double truncation = 2.0;  // d_max
};

struct ScenarioSpec {
  std::string name;
  std::string description;

  CraneParams crane = default_crane_params();
  MpcConfig mpc;
  CollisionConfig collision;

  std::vector<Vec5> waypoints;
  Vec5 reference_velocity_limit = Vec5::Constant(0.3);
  Vec5 reference_accel_limit = Vec5::Constant(0.5);

  GridSpec grid;
  std::vector<ObstacleEvent> obstacles;
  std::vector<DisturbanceEvent> disturbances;

  Vec7 initial_q = Vec7::Zero();
  Vec7 initial_qd = Vec7::Zero();

  double duration = 10.0;       // s
  double plant_dt = 1e-3;       // s
  double control_period = 0.1;  // s, must be an integer multiple of plant_dt
  double goal_tolerance = 0.05; // joint units
  bool expect_collision = false;
  // Uncontrolled baseline (u = 0 hold); the paired sway experiments use it.
  bool mpc_enabled = true;

  std::vector<std::string> validate() const;
  void validate_or_throw() const;
};

struct LogRow {
  double t = 0.0;
  Vec7 q = Vec7::Zero();
  Vec7 qd = Vec7::Zero();
  Vec5 u = Vec5::Zero();
  double tau = 0.0;
  double tau_dot = 0.0;
  double flow = 0.0;
  double sd[kNumCollisionLinks] = {0.0, 0.0, 0.0};
  // Min continuous sd over the following control period.
  double substep_min_sd = std::numeric_limits<double>::infinity();
  double solve_ms = 0.0;
  int solver_iterations = 0;
  double objective = 0.0;
  PenaltyTotals penalties;
};

struct RunLog {
  std::string scenario_name;
  double control_period = 0.1;
  double plant_dt = 1e-3;
  double duration = 0.0;
  std::vector<LogRow> rows;
  std::vector<double> substep_min_sd;  // one entry per plant substep
  bool solver_failed = false;
  std::string failure_message;
};

// Axis-aligned bounds of the collision-sphere centers over the joint-limit
// corners plus deterministic interior samples. Scenario grids must contain
// this box (validated), since out-of-grid EDF queries are optimistic.
Eigen::AlignedBox3d sampled_workspace_bounds(const CraneParams& params,
                                             const CollisionConfig& collision);

// One RK4 plant step; the ground truth the controller is closed against.
CraneState step_plant(const CraneParams& params, const CraneState& state,
                      const Vec5& u, double dt);

// Instantaneous rate impulse on the passive joints.
CraneState apply_disturbance(const CraneState& state, const Vec2& impulse);

RunLog run_closed_loop(const ScenarioSpec& scenario);

// Undamped small-oscillation period of the passive pendulum, linearized at q.
double pendulum_period(const CraneParams& params, const Vec7& q);

struct Metrics {
  double settle_time = 0.0;            // s after the last disturbance; inf if never
  double min_continuous_sd = 0.0;      // m, over all substeps and links
  double max_flow = 0.0;               // m^3/s over control steps
  double tracking_rmse = 0.0;          // joint units
  double final_goal_error = 0.0;       // joint units vs the last waypoint
  double final_qd_a_norm = 0.0;
  double tau_dot_mean_last_second = 0.0;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  double p95_solve_ms = 0.0;
  double pendulum_period_s = 0.0;      // at the initial configuration
  bool goal_reached = false;
  bool collided = false;
  bool solver_failed = false;
  int steps = 0;
};

Metrics metrics(const RunLog& log, const ScenarioSpec& scenario);

}  // namespace cranempc
