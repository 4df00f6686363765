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

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace cranempc {

// Kinematics and dynamics of a 7-DOF forestry crane: five hydraulically
// actuated joints (slew, inner boom, outer boom, telescope, rotator) followed
// by two passive pendulum axes carrying the gripper. The chain is a single
// serial branch; link i is the body moved by joint i.

enum class JointType { kRevolute, kPrismatic };

struct JointDescriptor {
  JointType type = JointType::kRevolute;
  Vec3 axis = Vec3::UnitZ();       // unit vector, joint frame
  Transform parent_offset = Transform::Identity();
};

struct LinkInertia {
  double mass = 1.0;
  Vec3 com = Vec3::Zero();         // center of mass, link frame
  Mat3 inertia = Mat3::Identity(); // rotational inertia about the COM, link frame
};

struct CraneParams {
  std::array<JointDescriptor, kNumJoints> joints;
  std::array<LinkInertia, kNumJoints> links;
  Vec3 gravity{0.0, 0.0, -9.81};

  // Second-order velocity actuator model, per actuated joint.
  Vec5 actuator_omega = Vec5::Constant(6.0);   // rad/s
  Vec5 actuator_damping = Vec5::Constant(0.9); // dimensionless

  // Hydraulics: direction-dependent effective cylinder areas and the affine
  // lever gain mapping joint rate to cylinder rate, d_dot = gain * qd.
  Vec5 cylinder_area_pos = Vec5::Constant(0.01);  // m^2, extending
  Vec5 cylinder_area_neg = Vec5::Constant(0.006); // m^2, retracting
  Vec5 cylinder_gain = Vec5::Constant(0.4);       // m per joint unit
  double pump_flow_max = 0.010;                   // m^3/s

  Vec7 q_min = Vec7::Constant(-3.0);
  Vec7 q_max = Vec7::Constant(3.0);
  Vec5 qdd_a_min = Vec5::Constant(-1.0);
  Vec5 qdd_a_max = Vec5::Constant(1.0);
  Vec5 u_max = Vec5::Constant(0.5); // symmetric hard bound on velocity commands

  int telescope_index = 3; // actuated-joint index of the prismatic telescope

  // Viscous damping on the passive joints (N*m*s/rad). Zero recovers the
  // undamped pendulum equations exactly.
  double passive_damping = 0.02;

  // Invariant check; empty result means the parameter set is usable.
  std::vector<std::string> validate() const;
  void validate_or_throw() const;
};

// Plausible forwarder-scale default chain. The geometry is a fixture: the
// values are configurable and carry no claim beyond being a realistic scale.
CraneParams default_crane_params();

struct CraneState {
  Vec7 q = Vec7::Zero();      // joint positions (rad, telescope in m)
  Vec7 qd = Vec7::Zero();     // joint velocities
  Vec5 qdd_a = Vec5::Zero();  // actuated joint accelerations

  VecState pack() const;
  static CraneState unpack(const VecState& x);
  bool all_finite() const;
};

// Forward kinematics: world pose of every link frame. Pose i depends only on
// q_0..q_i.
std::array<Transform, kNumJoints> forward_kinematics(const CraneParams& params,
                                                     const Vec7& q);

// Position Jacobian (3x7) of a point rigidly attached to `link` at
// `local_point` in that link's frame.
Mat3x7 point_jacobian(const CraneParams& params, const Vec7& q, int link,
                      const Vec3& local_point);

struct MassMatrix {
  Mat7 full;                        // symmetric positive definite
  Mat2x5 coupling() const { return full.block<2, 5>(kNumActuated, 0); }
  Mat2 passive() const { return full.block<2, 2>(kNumActuated, kNumActuated); }
};

// Joint-space mass matrix via the composite-rigid-body algorithm.
MassMatrix mass_matrix(const CraneParams& params, const Vec7& q);

// Full inverse dynamics tau = D(q) qdd + C(q,qd) qd + g(q) via recursive
// Newton-Euler. Exposed so the mass matrix has an independent algebraic
// route for column extraction.
Vec7 inverse_dynamics(const CraneParams& params, const Vec7& q, const Vec7& qd,
                      const Vec7& qdd, bool include_gravity = true);

// Passive rows of C(q,qd) qd + g(q).
Vec2 bias_forces(const CraneParams& params, const Vec7& q, const Vec7& qd);

// Pendulum acceleration: qdd_P = -D_P^{-1} (D_M qdd_A + C_P qd + g_P), plus
// the optional viscous term on the passive joints. Throws std::domain_error
// when the passive inertia block is numerically singular.
Vec2 pendulum_accel(const CraneParams& params, const Vec7& q, const Vec7& qd,
                    const Vec5& qdd_a);

// Jacobians of pendulum_accel with respect to q and qd (central differences)
// and the exact coupling block with respect to qdd_A.
struct PendulumAccelJacobians {
  Mat2x7 dq;
  Mat2x7 dqd;
  Mat2x5 dqdd_a;
};
PendulumAccelJacobians pendulum_accel_jacobians(const CraneParams& params,
                                                const Vec7& q, const Vec7& qd,
                                                const Vec5& qdd_a);

// Third derivative of the actuated joints from the second-order velocity
// model: qddd = omega^2 (u - qd) - 2 d omega qdd.
Vec5 actuator_jerk(const CraneParams& params, const Vec5& qd_a,
                   const Vec5& qdd_a, const Vec5& u);

// Continuous-time right-hand side xdot = [qd, qdd, qddd_A].
VecState state_derivative(const CraneParams& params, const CraneState& x,
                          const Vec5& u);

// Total hydraulic pump flow Q = sum_l A_l(sign(d_dot_l)) |d_dot_l|.
double pump_flow(const CraneParams& params, const Vec5& qd_a);

// d(pump_flow)/d(qd_a) away from zero crossings (sign frozen at qd_a).
Vec5 pump_flow_gradient(const CraneParams& params, const Vec5& qd_a);

}  // namespace cranempc
