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

#include "core/sim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace cranempc {

std::vector<std::string> ScenarioSpec::validate() const {
  std::vector<std::string> errors = crane.validate();
  for (auto& e : mpc.validate()) errors.push_back(e);

  if (name.empty()) errors.push_back("scenario name must not be empty");
  if (waypoints.empty()) errors.push_back("reference.waypoints must not be empty");
  if ((reference_velocity_limit.array() <= 0.0).any() ||
      (reference_accel_limit.array() <= 0.0).any())
    errors.push_back("reference limits must be positive");

  if (!(duration > 0.0)) errors.push_back("run.duration must be positive");
  if (!(plant_dt > 0.0) || plant_dt > 1e-2)
    errors.push_back("run.plant_dt must be in (0, 0.01]");
  if (!(control_period > 0.0)) {
    errors.push_back("run.control_period must be positive");
  } else {
    const double ratio = control_period / plant_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
      errors.push_back("run.control_period must be an integer multiple of run.plant_dt");
  }
  if (!(goal_tolerance > 0.0)) errors.push_back("run.goal_tolerance must be positive");

  if (!(grid.resolution > 0.0) || grid.dims.minCoeff() < 1)
    errors.push_back("environment.grid must have positive resolution and dims");
  if (!(grid.truncation > 0.0))
    errors.push_back("environment.grid.truncation must be positive");

  for (size_t i = 0; i < obstacles.size(); ++i) {
    const auto& ev = obstacles[i];
    if (ev.time > duration)
      errors.push_back("environment.obstacles[" + std::to_string(i) +
                       "]: event time exceeds run.duration");
    if ((ev.min_corner.array() > ev.max_corner.array()).any())
      errors.push_back("environment.obstacles[" + std::to_string(i) +
                       "]: min corner exceeds max corner");
  }
  for (size_t i = 0; i < disturbances.size(); ++i) {
    if (disturbances[i].time < 0.0 || disturbances[i].time > duration)
      errors.push_back("disturbances[" + std::to_string(i) +
                       "]: event time outside [0, duration]");
  }
  if (!initial_q.allFinite() || !initial_qd.allFinite())
    errors.push_back("initial state must be finite");

  // Workspace coverage: sampled check that collision-sphere centers stay
  // inside the grid. Out-of-grid queries are optimistic, so under-covering
  // grids are rejected here.
  if (errors.empty()) {
    const Eigen::AlignedBox3d bounds = sampled_workspace_bounds(crane, collision);
    const Vec3 lo = grid.origin;
    const Vec3 hi = grid.origin + grid.resolution * grid.dims.cast<double>();
    if ((bounds.min().array() < lo.array()).any() ||
        (bounds.max().array() > hi.array()).any()) {
      char buf[200];
      std::snprintf(buf, sizeof(buf),
                    "environment.grid does not cover the reachable workspace: "
                    "sphere centers span [%.2f, %.2f] x [%.2f, %.2f] x [%.2f, %.2f]",
                    bounds.min().x(), bounds.max().x(), bounds.min().y(),
                    bounds.max().y(), bounds.min().z(), bounds.max().z());
      errors.push_back(buf);
    }
  }
  return errors;
}

Eigen::AlignedBox3d sampled_workspace_bounds(const CraneParams& params,
                                             const CollisionConfig& collision) {
  Eigen::AlignedBox3d bounds;
  const auto visit = [&](const Vec7& q) {
    const SphereSet set = decompose_links(params, collision, q);
    for (const auto& link : set.links)
      for (const auto& s : link) bounds.extend(s.center);
  };
  // {min, mid, max} per actuated joint: reach extremes sit at interior
  // combinations (straight arm, centered slew), not only at limit corners.
  const auto level = [&](int j, int l) {
    return l == 0 ? params.q_min[j]
                  : (l == 2 ? params.q_max[j] : 0.5 * (params.q_min[j] + params.q_max[j]));
  };
  const int combos = 3 * 3 * 3 * 3 * 3;
  for (int combo = 0; combo < combos; ++combo) {
    Vec7 q;
    int rest = combo;
    for (int j = 0; j < kNumActuated; ++j) {
      q[j] = level(j, rest % 3);
      rest /= 3;
    }
    for (int l = 0; l < 3; ++l) {
      q[5] = l == 1 ? 0.0 : level(5, l);
      q[6] = l == 1 ? 0.0 : level(6, l);
      visit(q);
    }
  }
  for (int s = 0; s < 400; ++s) {
    Vec7 q;
    for (int j = 0; j < kNumJoints; ++j) {
      // Low-discrepancy deterministic samples within the limits.
      const double t = std::fmod(
          0.5 + double(s) * 0.6180339887498949 + double(j) * 0.3247179572447461, 1.0);
      q[j] = params.q_min[j] + t * (params.q_max[j] - params.q_min[j]);
    }
    visit(q);
  }
  return bounds;
}

void ScenarioSpec::validate_or_throw() const {
  auto errors = validate();
  if (!errors.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
}

CraneState step_plant(const CraneParams& params, const CraneState& state,
                      const Vec5& u, double dt) {
  if (!(dt > 0.0) || dt > 1e-2)
    throw std::invalid_argument("plant dt must be in (0, 0.01]");
  return discretize_step(params, state, u, dt);
}

CraneState apply_disturbance(const CraneState& state, const Vec2& impulse) {
  if (!impulse.allFinite())
    throw std::invalid_argument("disturbance impulse must be finite");
  CraneState out = state;
  out.qd.tail<2>() += impulse;
  return out;
}

double pendulum_period(const CraneParams& params, const Vec7& q) {
  // Generalized stiffness of the passive block from finite differences of
  // the gravity torque, undamped frequencies from (K_P, D_P).
  const double h = 1e-6;
  Mat2 k_p;
  for (int i = 0; i < kNumPassive; ++i) {
    Vec7 qp = q, qm = q;
    qp[kNumActuated + i] += h;
    qm[kNumActuated + i] -= h;
    const Vec2 gp = inverse_dynamics(params, qp, Vec7::Zero(), Vec7::Zero(), true)
                        .segment<2>(kNumActuated);
    const Vec2 gm = inverse_dynamics(params, qm, Vec7::Zero(), Vec7::Zero(), true)
                        .segment<2>(kNumActuated);
    k_p.col(i) = (gp - gm) / (2.0 * h);
  }
  const Mat2 d_p = mass_matrix(params, q).passive();
  const Eigen::GeneralizedSelfAdjointEigenSolver<Mat2> eig(0.5 * (k_p + k_p.transpose()),
                                                           d_p);
  const double w_sq = eig.eigenvalues().minCoeff();
  if (!(w_sq > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.0 * M_PI / std::sqrt(w_sq);
}

RunLog run_closed_loop(const ScenarioSpec& scenario) {
  scenario.validate_or_throw();

  RunLog log;
  log.scenario_name = scenario.name;
  log.control_period = scenario.control_period;
  log.plant_dt = scenario.plant_dt;
  log.duration = scenario.duration;

  const ReferenceSpline spline = plan_reference(
      scenario.waypoints, scenario.reference_velocity_limit, scenario.reference_accel_limit);

  VoxelGrid grid(scenario.grid.origin, scenario.grid.resolution, scenario.grid.dims);
  VoxelEdf edf = VoxelEdf::compute(std::move(grid), scenario.grid.truncation);

  CraneState state;
  state.q = scenario.initial_q;
  state.qd = scenario.initial_qd;

  const int steps = int(std::round(scenario.duration / scenario.control_period));
  const int substeps = int(std::round(scenario.control_period / scenario.plant_dt));
  log.rows.reserve(size_t(steps));
  log.substep_min_sd.reserve(size_t(steps) * size_t(substeps));

  std::vector<ObstacleEvent> obstacles = scenario.obstacles;
  std::stable_sort(obstacles.begin(), obstacles.end(),
                   [](const ObstacleEvent& a, const ObstacleEvent& b) {
                     return a.time < b.time;
                   });
  std::vector<DisturbanceEvent> disturbances = scenario.disturbances;
  std::stable_sort(disturbances.begin(), disturbances.end(),
                   [](const DisturbanceEvent& a, const DisturbanceEvent& b) {
                     return a.time < b.time;
                   });
  size_t next_obstacle = 0;
  size_t next_disturbance = 0;

  double tau = 0.0;
  OcpSolution previous;
  bool have_previous = false;

  for (int step = 0; step < steps; ++step) {
    const double t = double(step) * scenario.control_period;

    // Sense: apply all events due by now, then snapshot the field. The EDF
    // stays untouched for the remainder of the cycle.
    while (next_obstacle < obstacles.size() &&
           obstacles[next_obstacle].time <= t + 1e-9) {
      const ObstacleEvent& ev = obstacles[next_obstacle++];
      edf.apply_box_obstacle(ev.min_corner, ev.max_corner, ev.insert);
    }
    while (next_disturbance < disturbances.size() &&
           disturbances[next_disturbance].time <= t + 1e-9) {
      state = apply_disturbance(state, disturbances[next_disturbance++].impulse);
    }

    OcpProblem problem;
    problem.params = &scenario.crane;
    problem.collision = &scenario.collision;
    problem.spline = &spline;
    problem.edf = &edf;
    problem.config = &scenario.mpc;
    problem.x_init = state;
    problem.tau_init = tau;

    OcpSolution warm;
    OcpSolution solution;
    if (scenario.mpc_enabled) {
      try {
        if (have_previous) {
          warm = shift_warm_start(previous, scenario.mpc);
          solution = solve_mpc(problem, &warm);
        } else {
          solution = solve_mpc(problem);
        }
      } catch (const std::exception& e) {
        log.solver_failed = true;
        log.failure_message = std::string("solver failure at t=") + std::to_string(t) +
                              ": " + e.what();
        return log;
      }
      previous = solution;
      have_previous = true;
    } else {
      solution.controls.assign(size_t(scenario.mpc.horizon), Vec5::Zero());
      solution.tau_dot.assign(size_t(scenario.mpc.horizon), 0.0);
    }

    LogRow row;
    row.t = t;
    row.q = state.q;
    row.qd = state.qd;
    row.u = solution.controls.front();
    row.tau = tau;
    row.tau_dot = solution.tau_dot.front();
    row.flow = pump_flow(scenario.crane, state.qd.head<5>());
    const auto sds =
        signed_distances(edf, decompose_links(scenario.crane, scenario.collision, state.q));
    for (int l = 0; l < kNumCollisionLinks; ++l)
      row.sd[l] = sds[size_t(l)].signed_distance;
    row.solve_ms = solution.wall_ms;
    row.solver_iterations = solution.iterations;
    row.objective = solution.objective;
    row.penalties = solution.penalties;

    // Actuate: hold u0 while the plant runs at the fine timestep, auditing
    // the continuous signed distance between the knots.
    double min_sd_period = std::numeric_limits<double>::infinity();
    for (int s = 0; s < substeps; ++s) {
      state = step_plant(scenario.crane, state, row.u, scenario.plant_dt);
      if (!state.all_finite()) {
        log.solver_failed = true;
        log.failure_message =
            "plant state diverged at t=" + std::to_string(t + (s + 1) * scenario.plant_dt);
        row.substep_min_sd = min_sd_period;
        log.rows.push_back(row);
        return log;
      }
      const double sd = min_signed_distance(
          edf, decompose_links(scenario.crane, scenario.collision, state.q));
      log.substep_min_sd.push_back(sd);
      min_sd_period = std::min(min_sd_period, sd);
    }
    row.substep_min_sd = min_sd_period;
    log.rows.push_back(row);

    // Commanded progress over the period actually executed.
    tau += solution.tau_dot.front() * scenario.control_period;
  }
  return log;
}

Metrics metrics(const RunLog& log, const ScenarioSpec& scenario) {
  if (log.rows.empty()) throw std::invalid_argument("run log is empty");
  Metrics m;
  m.steps = int(log.rows.size());
  m.solver_failed = log.solver_failed;
  m.pendulum_period_s = pendulum_period(scenario.crane, scenario.initial_q);

  const ReferenceSpline spline = plan_reference(
      scenario.waypoints, scenario.reference_velocity_limit, scenario.reference_accel_limit);

  // Extrema and tracking error over the control steps.
  double sq_sum = 0.0;
  std::vector<double> solve_times;
  solve_times.reserve(log.rows.size());
  m.min_continuous_sd = std::numeric_limits<double>::infinity();
  for (const LogRow& row : log.rows) {
    m.max_flow = std::max(m.max_flow, row.flow);
    for (double sd : row.sd)
      m.min_continuous_sd = std::min(m.min_continuous_sd, sd);
    m.min_continuous_sd = std::min(m.min_continuous_sd, row.substep_min_sd);
    const Vec5 err = row.q.head<5>() - spline.position(row.tau);
    sq_sum += err.squaredNorm();
    solve_times.push_back(row.solve_ms);
    m.mean_solve_ms += row.solve_ms;
  }
  for (double sd : log.substep_min_sd)
    m.min_continuous_sd = std::min(m.min_continuous_sd, sd);
  m.tracking_rmse = std::sqrt(sq_sum / double(log.rows.size()));
  m.mean_solve_ms /= double(log.rows.size());
  std::sort(solve_times.begin(), solve_times.end());
  m.max_solve_ms = solve_times.back();
  m.p95_solve_ms =
      solve_times[size_t(std::ceil(0.95 * double(solve_times.size())) - 1)];
  m.collided = m.min_continuous_sd < 0.0;

  const LogRow& last = log.rows.back();
  m.final_qd_a_norm = last.qd.head<5>().norm();
  m.final_goal_error = (last.q.head<5>() - scenario.waypoints.back()).norm();
  m.goal_reached = !log.solver_failed && m.final_goal_error <= scenario.goal_tolerance;

  double td_sum = 0.0;
  int td_count = 0;
  const double t_tail = last.t - 1.0 + 1e-9;
  for (const LogRow& row : log.rows)
    if (row.t >= t_tail) {
      td_sum += row.tau_dot;
      ++td_count;
    }
  m.tau_dot_mean_last_second = td_count > 0 ? td_sum / double(td_count) : 0.0;

  // Settle time: first instant after the last disturbance from which both
  // passive angles and rates stay inside the band for two seconds.
  double last_disturbance = 0.0;
  for (const auto& d : scenario.disturbances)
    last_disturbance = std::max(last_disturbance, d.time);
  const double band_q = 0.02, band_qd = 0.02, hold = 2.0;
  const auto quiet = [&](const LogRow& row) {
    return std::abs(row.q[5]) < band_q && std::abs(row.q[6]) < band_q &&
           std::abs(row.qd[5]) < band_qd && std::abs(row.qd[6]) < band_qd;
  };
  m.settle_time = std::numeric_limits<double>::infinity();
  const size_t n = log.rows.size();
  size_t i = 0;
  while (i < n && log.rows[i].t < last_disturbance) ++i;
  for (; i < n; ++i) {
    if (!quiet(log.rows[i])) continue;
    size_t j = i;
    while (j < n && quiet(log.rows[j])) ++j;
    const double quiet_until = (j < n ? log.rows[j].t : log.rows[n - 1].t + log.control_period);
    if (quiet_until - log.rows[i].t >= hold) {
      m.settle_time = log.rows[i].t - last_disturbance;
      break;
    }
    i = j;
  }
  return m;
}

}  // namespace cranempc
