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

#include "core/crane_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace cranempc {

namespace {

Transform joint_motion(const JointDescriptor& joint, double q) {
  Transform t = Transform::Identity();
  if (joint.type == JointType::kRevolute) {
    t.linear() = Eigen::AngleAxisd(q, joint.axis).toRotationMatrix();
  } else {
    t.translation() = joint.axis * q;
  }
  return t;
}

// Parent-relative transform of link i at joint position q_i.
Transform link_transform(const CraneParams& params, int i, double q_i) {
  return params.joints[i].parent_offset * joint_motion(params.joints[i], q_i);
}

bool spd3(const Mat3& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  return eig.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

std::vector<std::string> CraneParams::validate() const {
  std::vector<std::string> errors;
  for (int i = 0; i < kNumJoints; ++i) {
    if (std::abs(joints[i].axis.norm() - 1.0) > 1e-9)
      errors.push_back("joint " + std::to_string(i + 1) + ": axis is not a unit vector");
    if (!links[i].com.allFinite() || !(links[i].mass > 0.0))
      errors.push_back("link " + std::to_string(i + 1) + ": mass must be positive");
    if (!spd3(links[i].inertia))
      errors.push_back("link " + std::to_string(i + 1) +
                       ": inertia tensor must be symmetric positive definite");
  }
  for (int i = kNumActuated; i < kNumJoints; ++i) {
    if (joints[i].type != JointType::kRevolute)
      errors.push_back("passive joint " + std::to_string(i + 1) + " must be revolute");
  }
  if (telescope_index < 0 || telescope_index >= kNumActuated ||
      joints[telescope_index].type != JointType::kPrismatic)
    errors.push_back("telescope_index must name a prismatic actuated joint");
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(q_min[i] < q_max[i]))
      errors.push_back("joint " + std::to_string(i + 1) + ": q_min must be below q_max");
  }
  for (int l = 0; l < kNumActuated; ++l) {
    if (!(qdd_a_min[l] < 0.0 && qdd_a_max[l] > 0.0))
      errors.push_back("actuated joint " + std::to_string(l + 1) +
                       ": acceleration limits must straddle zero");
    if (!(actuator_omega[l] > 0.0) || !(actuator_damping[l] > 0.0))
      errors.push_back("actuated joint " + std::to_string(l + 1) +
                       ": actuator omega and damping must be positive");
    if (!(cylinder_area_pos[l] > 0.0) || !(cylinder_area_neg[l] > 0.0) ||
        !(cylinder_gain[l] > 0.0))
      errors.push_back("actuated joint " + std::to_string(l + 1) +
                       ": cylinder areas and gain must be positive");
    if (!(u_max[l] > 0.0))
      errors.push_back("actuated joint " + std::to_string(l + 1) + ": u_max must be positive");
  }
  if (!(pump_flow_max > 0.0)) errors.push_back("pump_flow_max must be positive");
  if (passive_damping < 0.0) errors.push_back("passive_damping must be non-negative");
  if (!gravity.allFinite()) errors.push_back("gravity must be finite");
  return errors;
}

void CraneParams::validate_or_throw() const {
  auto errors = validate();
  if (!errors.empty()) {
    std::string msg = "invalid crane parameters:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
}

CraneParams default_crane_params() {
  CraneParams p;
  auto trans = [](double x, double y, double z) {
    Transform t = Transform::Identity();
    t.translation() = Vec3(x, y, z);
    return t;
  };

  // Slew column on the base.
  p.joints[0] = {JointType::kRevolute, Vec3::UnitZ(), trans(0.0, 0.0, 1.2)};
  p.links[0] = {600.0, Vec3(0.10, 0.0, -0.40),
                Vec3(60.0, 60.0, 40.0).asDiagonal().toDenseMatrix()};
  // Inner boom, 4.0 m along +x. Positive rotation about +y pitches the tip down.
  p.joints[1] = {JointType::kRevolute, Vec3::UnitY(), trans(0.5, 0.0, 0.4)};
  p.links[1] = {450.0, Vec3(2.0, 0.0, 0.0),
                Vec3(8.0, 620.0, 620.0).asDiagonal().toDenseMatrix()};
  // Outer boom, 3.0 m along +x.
  p.joints[2] = {JointType::kRevolute, Vec3::UnitY(), trans(4.0, 0.0, 0.0)};
  p.links[2] = {250.0, Vec3(1.5, 0.0, 0.0),
                Vec3(4.0, 190.0, 190.0).asDiagonal().toDenseMatrix()};
  // Telescope stage sliding along the arm axis, stroke 0..2.5 m. The stage
  // frame rides at the arm tip; the stage body trails behind it.
  p.joints[3] = {JointType::kPrismatic, Vec3::UnitX(), trans(3.0, 0.0, 0.0)};
  p.links[3] = {120.0, Vec3(-1.2, 0.0, 0.0),
                Vec3(2.0, 75.0, 75.0).asDiagonal().toDenseMatrix()};
  // Gripper rotator about the arm axis.
  p.joints[4] = {JointType::kRevolute, Vec3::UnitX(), Transform::Identity()};
  p.links[4] = {50.0, Vec3(0.0, 0.0, -0.08),
                Vec3(1.2, 1.2, 0.9).asDiagonal().toDenseMatrix()};
  // Passive pendulum: two orthogonal revolute axes at the arm tip, then the
  // gripper body hanging 0.6 m below.
  p.joints[5] = {JointType::kRevolute, Vec3::UnitX(), Transform::Identity()};
  p.links[5] = {25.0, Vec3(0.0, 0.0, -0.10),
                Vec3(0.6, 0.6, 0.35).asDiagonal().toDenseMatrix()};
  p.joints[6] = {JointType::kRevolute, Vec3::UnitY(), Transform::Identity()};
  p.links[6] = {180.0, Vec3(0.0, 0.0, -0.30),
                Vec3(6.0, 6.0, 1.1).asDiagonal().toDenseMatrix()};

  p.q_min << -3.0, -1.2, -0.2, 0.0, -2.5, -1.2, -1.2;
  p.q_max << 3.0, 0.4, 2.2, 2.5, 2.5, 1.2, 1.2;
  p.qdd_a_min << -0.8, -0.7, -0.9, -1.0, -2.5;
  p.qdd_a_max << 0.8, 0.7, 0.9, 1.0, 2.5;
  p.u_max << 0.4, 0.35, 0.45, 0.5, 1.2;

  p.actuator_omega = Vec5::Constant(6.0);
  p.actuator_damping = Vec5::Constant(0.9);

  p.cylinder_area_pos << 0.0060, 0.0133, 0.0100, 0.0080, 0.0020;
  p.cylinder_area_neg << 0.0060, 0.0086, 0.0065, 0.0052, 0.0020;
  p.cylinder_gain << 0.30, 0.45, 0.40, 1.00, 0.08;
  p.pump_flow_max = 0.010;

  p.telescope_index = 3;
  p.passive_damping = 0.02;
  return p;
}

VecState CraneState::pack() const {
  VecState x;
  x.segment<7>(0) = q;
  x.segment<7>(7) = qd;
  x.segment<5>(14) = qdd_a;
  return x;
}

CraneState CraneState::unpack(const VecState& x) {
  CraneState s;
  s.q = x.segment<7>(0);
  s.qd = x.segment<7>(7);
  s.qdd_a = x.segment<5>(14);
  return s;
}

bool CraneState::all_finite() const {
  return q.allFinite() && qd.allFinite() && qdd_a.allFinite();
}

std::array<Transform, kNumJoints> forward_kinematics(const CraneParams& params,
                                                     const Vec7& q) {
  std::array<Transform, kNumJoints> poses;
  Transform t = Transform::Identity();
  for (int i = 0; i < kNumJoints; ++i) {
    t = t * link_transform(params, i, q[i]);
    poses[i] = t;
  }
  return poses;
}

Mat3x7 point_jacobian(const CraneParams& params, const Vec7& q, int link,
                      const Vec3& local_point) {
  const auto poses = forward_kinematics(params, q);
  const Vec3 point = poses[link] * local_point;
  Mat3x7 jac = Mat3x7::Zero();
  for (int i = 0; i <= link; ++i) {
    const Vec3 axis_world = poses[i].linear() * params.joints[i].axis;
    if (params.joints[i].type == JointType::kRevolute) {
      const Vec3 origin = poses[i].translation();
      jac.col(i) = axis_world.cross(point - origin);
    } else {
      jac.col(i) = axis_world;
    }
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Recursive Newton-Euler in link coordinates. Gravity enters through the
// fictitious base acceleration a_0 = -g.

Vec7 inverse_dynamics(const CraneParams& params, const Vec7& q, const Vec7& qd,
                      const Vec7& qdd, bool include_gravity) {
  std::array<Mat3, kNumJoints> rot;   // parent->link rotation (columns: link axes in parent)
  std::array<Vec3, kNumJoints> trl;   // link origin in parent frame
  std::array<Vec3, kNumJoints> w, wd, a;
  std::array<Vec3, kNumJoints> force, moment;

  Vec3 w_p = Vec3::Zero();
  Vec3 wd_p = Vec3::Zero();
  Vec3 a_p = include_gravity ? Vec3(-params.gravity) : Vec3(Vec3::Zero());

  for (int i = 0; i < kNumJoints; ++i) {
    const Transform x = link_transform(params, i, q[i]);
    rot[i] = x.linear();
    trl[i] = x.translation();
    const Mat3 rt = rot[i].transpose();
    const Vec3& axis = params.joints[i].axis;
    const bool revolute = params.joints[i].type == JointType::kRevolute;

    const Vec3 w_in = rt * w_p;
    const Vec3 wd_in = rt * wd_p;
    const Vec3 a_in = rt * (a_p + wd_p.cross(trl[i]) + w_p.cross(w_p.cross(trl[i])));

    if (revolute) {
      w[i] = w_in + axis * qd[i];
      wd[i] = wd_in + axis * qdd[i] + w_in.cross(axis * qd[i]);
      a[i] = a_in;
    } else {
      w[i] = w_in;
      wd[i] = wd_in;
      a[i] = a_in + axis * qdd[i] + 2.0 * w_in.cross(axis * qd[i]);
    }
    w_p = w[i];
    wd_p = wd[i];
    a_p = a[i];
  }

  for (int i = kNumJoints - 1; i >= 0; --i) {
    const LinkInertia& body = params.links[i];
    const Vec3 a_com = a[i] + wd[i].cross(body.com) + w[i].cross(w[i].cross(body.com));
    Vec3 f = body.mass * a_com;
    Vec3 n = body.inertia * wd[i] + w[i].cross(body.inertia * w[i]) + body.com.cross(f);
    if (i + 1 < kNumJoints) {
      const Vec3 f_child = rot[i + 1] * force[i + 1];
      n += rot[i + 1] * moment[i + 1] + trl[i + 1].cross(f_child);
      f += f_child;
    }
    force[i] = f;
    moment[i] = n;
  }

  Vec7 tau;
  for (int i = 0; i < kNumJoints; ++i) {
    tau[i] = params.joints[i].type == JointType::kRevolute
                 ? params.joints[i].axis.dot(moment[i])
                 : params.joints[i].axis.dot(force[i]);
  }
  return tau;
}

// ---------------------------------------------------------------------------
// Composite-rigid-body algorithm. Composites are kept as (mass, com, inertia
// about the com); merging and frame changes stay numerically simple that way.

namespace {

struct Composite {
  double mass;
  Vec3 com;
  Mat3 inertia;  // about com
};

Composite to_parent(const Composite& c, const Mat3& rot, const Vec3& trl) {
  return {c.mass, rot * c.com + trl, rot * c.inertia * rot.transpose()};
}

Composite merge(const Composite& a, const Composite& b) {
  const double m = a.mass + b.mass;
  const Vec3 com = (a.mass * a.com + b.mass * b.com) / m;
  const Mat3 sa = skew(a.com - com);
  const Mat3 sb = skew(b.com - com);
  return {m, com, a.inertia - a.mass * sa * sa + b.inertia - b.mass * sb * sb};
}

struct SpatialForce {
  Vec3 moment;  // about the current frame origin
  Vec3 force;
};

}  // namespace

MassMatrix mass_matrix(const CraneParams& params, const Vec7& q) {
  std::array<Mat3, kNumJoints> rot;
  std::array<Vec3, kNumJoints> trl;
  for (int i = 0; i < kNumJoints; ++i) {
    const Transform x = link_transform(params, i, q[i]);
    rot[i] = x.linear();
    trl[i] = x.translation();
  }

  std::array<Composite, kNumJoints> comp;
  for (int i = 0; i < kNumJoints; ++i)
    comp[i] = {params.links[i].mass, params.links[i].com, params.links[i].inertia};
  for (int i = kNumJoints - 1; i >= 1; --i)
    comp[i - 1] = merge(comp[i - 1], to_parent(comp[i], rot[i], trl[i]));

  Mat7 d = Mat7::Zero();
  for (int i = 0; i < kNumJoints; ++i) {
    const Vec3& axis = params.joints[i].axis;
    const bool revolute = params.joints[i].type == JointType::kRevolute;
    const Composite& c = comp[i];

    // Spatial force produced by a unit acceleration of joint i on the
    // composite body rooted at link i, expressed at the link-i origin.
    SpatialForce f;
    if (revolute) {
      const Vec3 a_com = axis.cross(c.com);
      f.force = c.mass * a_com;
      f.moment = c.inertia * axis + c.com.cross(f.force);
      d(i, i) = axis.dot(f.moment);
    } else {
      f.force = c.mass * axis;
      f.moment = c.com.cross(f.force);
      d(i, i) = axis.dot(f.force);
    }

    for (int j = i - 1; j >= 0; --j) {
      const Vec3 fp = rot[j + 1] * f.force;
      f.moment = rot[j + 1] * f.moment + trl[j + 1].cross(fp);
      f.force = fp;
      const Vec3& axis_j = params.joints[j].axis;
      const double entry = params.joints[j].type == JointType::kRevolute
                               ? axis_j.dot(f.moment)
                               : axis_j.dot(f.force);
      d(i, j) = entry;
      d(j, i) = entry;
    }
  }
  return MassMatrix{d};
}

Vec2 bias_forces(const CraneParams& params, const Vec7& q, const Vec7& qd) {
  const Vec7 tau = inverse_dynamics(params, q, qd, Vec7::Zero(), true);
  return tau.segment<2>(kNumActuated);
}

Vec2 pendulum_accel(const CraneParams& params, const Vec7& q, const Vec7& qd,
                    const Vec5& qdd_a) {
  const MassMatrix d = mass_matrix(params, q);
  const Mat2 d_p = d.passive();
  Eigen::SelfAdjointEigenSolver<Mat2> eig(d_p);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e8)
    throw std::domain_error("pendulum inertia block is numerically singular; "
                            "check payload mass and inertia parameters");
  Vec2 rhs = d.coupling() * qdd_a + bias_forces(params, q, qd);
  rhs += params.passive_damping * qd.segment<2>(kNumActuated);
  return -d_p.ldlt().solve(rhs);
}

PendulumAccelJacobians pendulum_accel_jacobians(const CraneParams& params,
                                                const Vec7& q, const Vec7& qd,
                                                const Vec5& qdd_a) {
  PendulumAccelJacobians jac;
  const double h = 1e-6;
  Vec7 qp = q, qm = q;
  for (int i = 0; i < kNumJoints; ++i) {
    qp[i] = q[i] + h;
    qm[i] = q[i] - h;
    jac.dq.col(i) =
        (pendulum_accel(params, qp, qd, qdd_a) - pendulum_accel(params, qm, qd, qdd_a)) /
        (2.0 * h);
    qp[i] = q[i];
    qm[i] = q[i];
  }
  Vec7 vp = qd, vm = qd;
  for (int i = 0; i < kNumJoints; ++i) {
    vp[i] = qd[i] + h;
    vm[i] = qd[i] - h;
    jac.dqd.col(i) =
        (pendulum_accel(params, q, vp, qdd_a) - pendulum_accel(params, q, vm, qdd_a)) /
        (2.0 * h);
    vp[i] = qd[i];
    vm[i] = qd[i];
  }
  const MassMatrix d = mass_matrix(params, q);
  jac.dqdd_a = -d.passive().ldlt().solve(d.coupling());
  return jac;
}

Vec5 actuator_jerk(const CraneParams& params, const Vec5& qd_a,
                   const Vec5& qdd_a, const Vec5& u) {
  const Vec5& w = params.actuator_omega;
  const Vec5& dmp = params.actuator_damping;
  return w.cwiseProduct(w).cwiseProduct(u - qd_a) -
         2.0 * dmp.cwiseProduct(w).cwiseProduct(qdd_a);
}

VecState state_derivative(const CraneParams& params, const CraneState& x,
                          const Vec5& u) {
  VecState dx;
  dx.segment<7>(0) = x.qd;
  dx.segment<5>(7) = x.qdd_a;
  dx.segment<2>(12) = pendulum_accel(params, x.q, x.qd, x.qdd_a);
  dx.segment<5>(14) = actuator_jerk(params, x.qd.head<5>(), x.qdd_a, u);
  return dx;
}

double pump_flow(const CraneParams& params, const Vec5& qd_a) {
  double flow = 0.0;
  for (int l = 0; l < kNumActuated; ++l) {
    const double d_dot = params.cylinder_gain[l] * qd_a[l];
    const double area = d_dot >= 0.0 ? params.cylinder_area_pos[l]
                                     : params.cylinder_area_neg[l];
    flow += area * std::abs(d_dot);
  }
  return flow;
}

Vec5 pump_flow_gradient(const CraneParams& params, const Vec5& qd_a) {
  Vec5 grad;
  for (int l = 0; l < kNumActuated; ++l) {
    const double d_dot = params.cylinder_gain[l] * qd_a[l];
    const double area = d_dot >= 0.0 ? params.cylinder_area_pos[l]
                                     : params.cylinder_area_neg[l];
    const double sign = d_dot > 0.0 ? 1.0 : (d_dot < 0.0 ? -1.0 : 0.0);
    grad[l] = area * params.cylinder_gain[l] * sign;
  }
  return grad;
}

}  // namespace cranempc
