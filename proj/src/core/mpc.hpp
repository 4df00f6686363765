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

#include <optional>
#include <vector>

#include "core/collision.hpp"
#include "core/crane_model.hpp"
#include "core/edf_map.hpp"
#include "core/reference.hpp"
#include "core/types.hpp"

namespace cranempc {

// Collision-free sway-damping MPC. The optimal control problem tracks the
// spline reference through the progress variable tau, damps the passive
// pendulum rates, and turns every inequality (joint and acceleration limits,
// pump flow, signed distances, tau-rate bounds) into a one-sided quadratic
// penalty with margin eps and weight mu = 10 / eps. The solver takes
// Gauss-Newton steps over the control and tau-rate sequences (single
// shooting, Riccati backward pass) with an Armijo line search, warm started
// by shifting the previous solution.

struct MpcConfig {
  int horizon = 40;    // N
  double ts = 0.1;     // s, 10 Hz

  double w_track = 1.0;
  double w_damp = 0.1;
  double w_vel = 0.01;
  double w_accl = 0.1;
  double w_prog = 0.2;

  double collision_margin = 0.2;    // m
  double limit_margin_frac = 0.05;  // of each joint/acceleration range
  double flow_margin_frac = 0.05;   // of pump_flow_max
  double tau_rate_margin = 0.05;
  double tau_rate_min = 0.0;
  double tau_rate_max = 1.5;

  bool collision_enabled = true;
  bool flow_enabled = true;

  // Wall-clock budget per solve. An iteration cap > 0 replaces the clock
  // entirely, making solves bit-reproducible.
  double budget_ms = 70.0;
  int iteration_cap = 0;
  int max_iterations = 100;
  double converge_tol = 1e-10;

  // The margin fixes the weight; the two are never configured independently.
  static double penalty_mu(double eps) { return 10.0 / eps; }

  std::vector<std::string> validate() const;
  void validate_or_throw() const;
};

struct PenaltyTotals {
  double joint_limits = 0.0;
  double accel_limits = 0.0;
  double flow = 0.0;
  double collision = 0.0;
  double tau_rate = 0.0;
  double sum() const {
    return joint_limits + accel_limits + flow + collision + tau_rate;
  }
};

struct OcpSolution {
  std::vector<CraneState> states;  // x_0 .. x_{N-1}, rollout-consistent
  std::vector<Vec5> controls;      // u_0 .. u_{N-1}
  std::vector<double> tau;         // tau_0 .. tau_{N-1}
  std::vector<double> tau_dot;     // taudot_0 .. taudot_{N-1}
  double objective = 0.0;
  PenaltyTotals penalties;
  int iterations = 0;
  double wall_ms = 0.0;
  bool converged = false;
};

// Everything one solve needs; non-owning.
struct OcpProblem {
  const CraneParams* params = nullptr;
  const CollisionConfig* collision = nullptr;
  const ReferenceSpline* spline = nullptr;
  const VoxelEdf* edf = nullptr;
  const MpcConfig* config = nullptr;
  CraneState x_init;
  double tau_init = 0.0;
};

// One-sided quadratic barrier: 0 for h >= eps, (mu/2)(h - eps)^2 below. C^1
// at the activation boundary.
double penalty(double h, double eps, double mu);

// The five-component stage cost (no penalties).
double stage_cost(const CraneState& x, const Vec5& u, double tau, double tau_dot,
                  const ReferenceSpline& spline, const MpcConfig& config);

// One RK4 step of the crane dynamics over ts.
CraneState discretize_step(const CraneParams& params, const CraneState& x,
                           const Vec5& u, double ts);

// Exact Jacobians of discretize_step (chain rule through the RK4 stages).
struct StepLinearization {
  Eigen::Matrix<double, kStateDim, kStateDim> a;
  Eigen::Matrix<double, kStateDim, kNumActuated> b;
};
StepLinearization linearize_step(const CraneParams& params, const CraneState& x,
                                 const Vec5& u, double ts);

struct ObjectiveEval {
  double value = 0.0;
  PenaltyTotals penalties;
  std::vector<Vec5> grad_u;         // filled when gradients requested
  std::vector<double> grad_tau_dot;
};

// Single-shooting objective: rollout from (x_init, tau_init), stage costs and
// penalties at every knot. Gradients via the adjoint recursion over the step
// linearizations; they match central finite differences of the value.
ObjectiveEval total_objective(const OcpProblem& problem, const std::vector<Vec5>& u_seq,
                              const std::vector<double>& tau_dot_seq,
                              bool with_gradients);

OcpSolution solve_mpc(const OcpProblem& problem,
                      const OcpSolution* warm_start = nullptr);

// Receding-horizon warm start: drop the first knot, duplicate the last.
OcpSolution shift_warm_start(const OcpSolution& previous, const MpcConfig& config);

}  // namespace cranempc
