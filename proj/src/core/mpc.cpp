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

#include "core/mpc.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace cranempc {

namespace {

constexpr int kAugDim = kStateDim + 1;  // state plus tau
constexpr int kCtrlDim = kNumActuated + 1;  // controls plus tau rate

using VecAug = Eigen::Matrix<double, kAugDim, 1>;
using MatAug = Eigen::Matrix<double, kAugDim, kAugDim>;
using VecCtrl = Eigen::Matrix<double, kCtrlDim, 1>;
using MatCtrl = Eigen::Matrix<double, kCtrlDim, kCtrlDim>;
using MatCtrlAug = Eigen::Matrix<double, kCtrlDim, kAugDim>;
using MatAugCtrl = Eigen::Matrix<double, kAugDim, kCtrlDim>;

using Clock = std::chrono::steady_clock;

struct Deadline {
  bool enabled = false;
  Clock::time_point at;
  bool expired() const { return enabled && Clock::now() >= at; }
};

// State-plus-tau index map: q 0..6, qd 7..13, qdd_a 14..18, tau 19.
constexpr int kTauIdx = kStateDim;

struct TermEval {
  double value = 0.0;
  VecAug grad = VecAug::Zero();
  MatAug hess = MatAug::Zero();
};

struct CtrlTermEval {
  double value = 0.0;
  VecCtrl grad = VecCtrl::Zero();
  MatCtrl hess = MatCtrl::Zero();
};

// Accumulates value (and optionally Gauss-Newton derivatives) of one
// activated penalty with residual direction dh over the augmented state.
template <typename AddGrad>
void accumulate_penalty(double h, double eps, double* value, double* group_total,
                        const AddGrad& add) {
  if (h >= eps) return;
  const double mu = MpcConfig::penalty_mu(eps);
  const double p = 0.5 * mu * (h - eps) * (h - eps);
  *value += p;
  *group_total += p;
  add(mu, -(mu * (h - eps)));  // dp/dh = mu (h - eps) < 0, sign folded by caller
}

struct StateTermContext {
  const OcpProblem& problem;
  bool with_derivs;
};

TermEval eval_state_terms(const StateTermContext& ctx, const CraneState& x,
                          double tau, PenaltyTotals* totals) {
  const MpcConfig& cfg = *ctx.problem.config;
  const CraneParams& par = *ctx.problem.params;
  TermEval out;

  // Tracking.
  const Vec5 q_ref = ctx.problem.spline->position(tau);
  const Vec5 e = x.q.head<5>() - q_ref;
  out.value += cfg.w_track * e.squaredNorm();
  if (ctx.with_derivs) {
    const Vec5 v_ref = ctx.problem.spline->velocity(tau);
    out.grad.segment<5>(0) += 2.0 * cfg.w_track * e;
    out.grad[kTauIdx] += -2.0 * cfg.w_track * e.dot(v_ref);
    out.hess.block<5, 5>(0, 0) += 2.0 * cfg.w_track * Eigen::Matrix<double, 5, 5>::Identity();
    out.hess.block<5, 1>(0, kTauIdx) += -2.0 * cfg.w_track * v_ref;
    out.hess.block<1, 5>(kTauIdx, 0) += -2.0 * cfg.w_track * v_ref.transpose();
    out.hess(kTauIdx, kTauIdx) += 2.0 * cfg.w_track * v_ref.squaredNorm();
  }

  // Sway damping, velocity and acceleration smoothness.
  const Vec2 qd_p = x.qd.tail<2>();
  const Vec5 qd_a = x.qd.head<5>();
  out.value += cfg.w_damp * qd_p.squaredNorm();
  out.value += cfg.w_vel * qd_a.squaredNorm();
  out.value += cfg.w_accl * x.qdd_a.squaredNorm();
  if (ctx.with_derivs) {
    out.grad.segment<2>(12) += 2.0 * cfg.w_damp * qd_p;
    out.grad.segment<5>(7) += 2.0 * cfg.w_vel * qd_a;
    out.grad.segment<5>(14) += 2.0 * cfg.w_accl * x.qdd_a;
    for (int i = 0; i < 2; ++i) out.hess(12 + i, 12 + i) += 2.0 * cfg.w_damp;
    for (int i = 0; i < 5; ++i) out.hess(7 + i, 7 + i) += 2.0 * cfg.w_vel;
    for (int i = 0; i < 5; ++i) out.hess(14 + i, 14 + i) += 2.0 * cfg.w_accl;
  }

  // Joint limit penalties, both sides, margin proportional to the range.
  for (int i = 0; i < kNumJoints; ++i) {
    const double eps = cfg.limit_margin_frac * (par.q_max[i] - par.q_min[i]);
    const auto one_side = [&](double h, double sign) {
      accumulate_penalty(h, eps, &out.value, &totals->joint_limits,
                         [&](double mu, double dpdh_neg) {
                           if (!ctx.with_derivs) return;
                           out.grad[i] += -dpdh_neg * sign;
                           out.hess(i, i) += mu;
                         });
    };
    one_side(x.q[i] - par.q_min[i], 1.0);
    one_side(par.q_max[i] - x.q[i], -1.0);
  }

  // Acceleration limit penalties.
  for (int i = 0; i < kNumActuated; ++i) {
    const double eps = cfg.limit_margin_frac * (par.qdd_a_max[i] - par.qdd_a_min[i]);
    const int col = 14 + i;
    const auto one_side = [&](double h, double sign) {
      accumulate_penalty(h, eps, &out.value, &totals->accel_limits,
                         [&](double mu, double dpdh_neg) {
                           if (!ctx.with_derivs) return;
                           out.grad[col] += -dpdh_neg * sign;
                           out.hess(col, col) += mu;
                         });
    };
    one_side(x.qdd_a[i] - par.qdd_a_min[i], 1.0);
    one_side(par.qdd_a_max[i] - x.qdd_a[i], -1.0);
  }

  // Pump flow, evaluated from knot velocities. The residual is normalized by
  // the pump capacity so the margin (and thus mu = 10/eps) is dimensionless;
  // raw cubic-meter units would make the barrier negligible.
  if (cfg.flow_enabled) {
    const double eps = cfg.flow_margin_frac;
    const double h = (par.pump_flow_max - pump_flow(par, qd_a)) / par.pump_flow_max;
    accumulate_penalty(h, eps, &out.value, &totals->flow,
                       [&](double mu, double dpdh_neg) {
                         if (!ctx.with_derivs) return;
                         const Vec5 dh =
                             -pump_flow_gradient(par, qd_a) / par.pump_flow_max;
                         out.grad.segment<5>(7) += -dpdh_neg * dh;
                         out.hess.block<5, 5>(7, 7) += mu * dh * dh.transpose();
                       });
  }

  // Signed-distance penalties, one per collision link, linearized about the
  // minimizing sphere.
  if (cfg.collision_enabled) {
    const double eps = cfg.collision_margin;
    if (ctx.with_derivs) {
      const auto links = signed_distances_with_gradients(
          *ctx.problem.edf, par, *ctx.problem.collision, x.q);
      for (const auto& link : links) {
        accumulate_penalty(link.signed_distance, eps, &out.value, &totals->collision,
                           [&](double mu, double dpdh_neg) {
                             out.grad.segment<7>(0) += -dpdh_neg * link.gradient;
                             out.hess.block<7, 7>(0, 0) +=
                                 mu * link.gradient * link.gradient.transpose();
                           });
      }
    } else {
      const SphereSet set =
          decompose_links(par, *ctx.problem.collision, x.q);
      for (const auto& link : signed_distances(*ctx.problem.edf, set)) {
        accumulate_penalty(link.signed_distance, eps, &out.value, &totals->collision,
                           [](double, double) {});
      }
    }
  }
  return out;
}

CtrlTermEval eval_control_terms(const OcpProblem& problem, const Vec5& /*u*/,
                                double tau_dot, bool with_derivs,
                                PenaltyTotals* totals) {
  const MpcConfig& cfg = *problem.config;
  CtrlTermEval out;
  const double e = tau_dot - 1.0;
  out.value += cfg.w_prog * e * e;
  if (with_derivs) {
    out.grad[kNumActuated] += 2.0 * cfg.w_prog * e;
    out.hess(kNumActuated, kNumActuated) += 2.0 * cfg.w_prog;
  }
  // Only the upper tau-rate bound carries a barrier. The lower bound is the
  // hard clamp at zero alone: a margin there would prop tau_dot above the
  // margin and defeat the stopping behavior.
  accumulate_penalty(cfg.tau_rate_max - tau_dot, cfg.tau_rate_margin, &out.value,
                     &totals->tau_rate, [&](double mu, double dpdh_neg) {
                       if (!with_derivs) return;
                       out.grad[kNumActuated] += dpdh_neg;
                       out.hess(kNumActuated, kNumActuated) += mu;
                     });
  return out;
}

// Continuous-dynamics Jacobian d(xdot)/dx; most blocks are structural, the
// pendulum rows come from crane_model.
void continuous_jacobian(const CraneParams& params, const CraneState& x,
                         Eigen::Matrix<double, kStateDim, kStateDim>& jx) {
  jx.setZero();
  jx.block<7, 7>(0, 7).setIdentity();
  jx.block<5, 5>(7, 14).setIdentity();
  const PendulumAccelJacobians pj =
      pendulum_accel_jacobians(params, x.q, x.qd, x.qdd_a);
  jx.block<2, 7>(12, 0) = pj.dq;
  jx.block<2, 7>(12, 7) = pj.dqd;
  jx.block<2, 5>(12, 14) = pj.dqdd_a;
  for (int i = 0; i < kNumActuated; ++i) {
    const double w = params.actuator_omega[i];
    jx(14 + i, 7 + i) = -w * w;
    jx(14 + i, 14 + i) = -2.0 * params.actuator_damping[i] * w;
  }
}

struct Rollout {
  std::vector<CraneState> x;       // x_0 .. x_N
  std::vector<double> tau;         // tau_0 .. tau_N
  double objective = 0.0;
  PenaltyTotals penalties;
};

Rollout roll_out(const OcpProblem& problem, const std::vector<Vec5>& u_seq,
                 const std::vector<double>& tau_dot_seq) {
  const int n = problem.config->horizon;
  const double ts = problem.config->ts;
  Rollout r;
  r.x.resize(static_cast<size_t>(n) + 1);
  r.tau.resize(static_cast<size_t>(n) + 1);
  r.x[0] = problem.x_init;
  r.tau[0] = problem.tau_init;
  const StateTermContext ctx{problem, false};
  for (int k = 0; k < n; ++k) {
    r.objective += eval_control_terms(problem, u_seq[size_t(k)], tau_dot_seq[size_t(k)],
                                      false, &r.penalties)
                       .value;
    r.x[size_t(k) + 1] =
        discretize_step(*problem.params, r.x[size_t(k)], u_seq[size_t(k)], ts);
    r.tau[size_t(k) + 1] = r.tau[size_t(k)] + tau_dot_seq[size_t(k)] * ts;
    r.objective +=
        eval_state_terms(ctx, r.x[size_t(k) + 1], r.tau[size_t(k) + 1], &r.penalties)
            .value;
  }
  return r;
}

void clamp_controls(const OcpProblem& problem, std::vector<Vec5>& u_seq,
                    std::vector<double>& tau_dot_seq) {
  const Vec5& u_max = problem.params->u_max;
  for (Vec5& u : u_seq) u = u.cwiseMax(-u_max).cwiseMin(u_max);
  for (double& td : tau_dot_seq)
    td = std::clamp(td, problem.config->tau_rate_min, problem.config->tau_rate_max);
}

}  // namespace

std::vector<std::string> MpcConfig::validate() const {
  std::vector<std::string> errors;
  if (horizon < 2) errors.push_back("mpc horizon must be at least 2");
  if (!(ts > 0.0)) errors.push_back("mpc step ts must be positive");
  for (double w : {w_track, w_damp, w_vel, w_accl, w_prog})
    if (w < 0.0) errors.push_back("mpc weights must be non-negative");
  for (double eps : {collision_margin, limit_margin_frac, flow_margin_frac, tau_rate_margin})
    if (!(eps > 0.0)) errors.push_back("mpc penalty margins must be positive");
  if (!(tau_rate_min < tau_rate_max) || tau_rate_min < 0.0)
    errors.push_back("tau rate bounds must satisfy 0 <= min < max");
  if (!(budget_ms > 0.0) && iteration_cap <= 0)
    errors.push_back("either a positive budget or an iteration cap is required");
  if (max_iterations < 1) errors.push_back("max_iterations must be at least 1");
  return errors;
}

void MpcConfig::validate_or_throw() const {
  auto errors = validate();
  if (!errors.empty()) {
    std::string msg = "invalid mpc config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
}

double penalty(double h, double eps, double mu) {
  if (!(eps > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("penalty margin and weight must be positive");
  if (h >= eps) return 0.0;
  return 0.5 * mu * (h - eps) * (h - eps);
}

double stage_cost(const CraneState& x, const Vec5& /*u*/, double tau, double tau_dot,
                  const ReferenceSpline& spline, const MpcConfig& config) {
  const Vec5 e = x.q.head<5>() - spline.position(tau);
  const double e_prog = tau_dot - 1.0;
  return config.w_track * e.squaredNorm() +
         config.w_damp * x.qd.tail<2>().squaredNorm() +
         config.w_vel * x.qd.head<5>().squaredNorm() +
         config.w_accl * x.qdd_a.squaredNorm() + config.w_prog * e_prog * e_prog;
}

CraneState discretize_step(const CraneParams& params, const CraneState& x,
                           const Vec5& u, double ts) {
  const VecState x0 = x.pack();
  const VecState k1 = state_derivative(params, x, u);
  const VecState k2 =
      state_derivative(params, CraneState::unpack(x0 + 0.5 * ts * k1), u);
  const VecState k3 =
      state_derivative(params, CraneState::unpack(x0 + 0.5 * ts * k2), u);
  const VecState k4 = state_derivative(params, CraneState::unpack(x0 + ts * k3), u);
  return CraneState::unpack(x0 + (ts / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

StepLinearization linearize_step(const CraneParams& params, const CraneState& x,
                                 const Vec5& u, double ts) {
  using MatX = Eigen::Matrix<double, kStateDim, kStateDim>;
  using MatU = Eigen::Matrix<double, kStateDim, kNumActuated>;

  MatU ju = MatU::Zero();
  for (int i = 0; i < kNumActuated; ++i)
    ju(14 + i, i) = params.actuator_omega[i] * params.actuator_omega[i];

  const VecState x0 = x.pack();
  const VecState k1 = state_derivative(params, x, u);
  const CraneState x2 = CraneState::unpack(x0 + 0.5 * ts * k1);
  const VecState k2 = state_derivative(params, x2, u);
  const CraneState x3 = CraneState::unpack(x0 + 0.5 * ts * k2);
  const VecState k3 = state_derivative(params, x3, u);
  const CraneState x4 = CraneState::unpack(x0 + ts * k3);

  MatX j1, j2, j3, j4;
  continuous_jacobian(params, x, j1);
  continuous_jacobian(params, x2, j2);
  continuous_jacobian(params, x3, j3);
  continuous_jacobian(params, x4, j4);

  // Chain rule through the RK4 stages.
  const MatX i = MatX::Identity();
  const MatX dk1 = j1;
  const MatX dk2 = j2 * (i + 0.5 * ts * dk1);
  const MatX dk3 = j3 * (i + 0.5 * ts * dk2);
  const MatX dk4 = j4 * (i + ts * dk3);

  const MatU du1 = ju;
  const MatU du2 = j2 * (0.5 * ts * du1) + ju;
  const MatU du3 = j3 * (0.5 * ts * du2) + ju;
  const MatU du4 = j4 * (ts * du3) + ju;

  StepLinearization lin;
  lin.a = i + (ts / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);
  lin.b = (ts / 6.0) * (du1 + 2.0 * du2 + 2.0 * du3 + du4);
  return lin;
}

ObjectiveEval total_objective(const OcpProblem& problem, const std::vector<Vec5>& u_seq,
                              const std::vector<double>& tau_dot_seq,
                              bool with_gradients) {
  const int n = problem.config->horizon;
  if (int(u_seq.size()) != n || int(tau_dot_seq.size()) != n)
    throw std::invalid_argument("control sequences must match the horizon length");

  const Rollout r = roll_out(problem, u_seq, tau_dot_seq);
  ObjectiveEval out;
  out.value = r.objective;
  out.penalties = r.penalties;
  if (!with_gradients) return out;

  const double ts = problem.config->ts;
  const StateTermContext ctx{problem, true};
  PenaltyTotals scratch;

  // Adjoint over the augmented (state, tau) chain.
  std::vector<StepLinearization> lin(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k)
    lin[size_t(k)] = linearize_step(*problem.params, r.x[size_t(k)], u_seq[size_t(k)], ts);

  out.grad_u.assign(size_t(n), Vec5::Zero());
  out.grad_tau_dot.assign(size_t(n), 0.0);

  VecAug lambda = eval_state_terms(ctx, r.x[size_t(n)], r.tau[size_t(n)], &scratch).grad;
  for (int k = n - 1; k >= 0; --k) {
    const CtrlTermEval cv = eval_control_terms(problem, u_seq[size_t(k)],
                                               tau_dot_seq[size_t(k)], true, &scratch);
    out.grad_u[size_t(k)] = cv.grad.head<5>() +
                            lin[size_t(k)].b.transpose() * lambda.head<kStateDim>();
    out.grad_tau_dot[size_t(k)] = cv.grad[kNumActuated] + ts * lambda[kTauIdx];
    if (k > 0) {
      VecAug next = VecAug::Zero();
      next.head<kStateDim>() =
          lin[size_t(k)].a.transpose() * lambda.head<kStateDim>();
      next[kTauIdx] = lambda[kTauIdx];
      next += eval_state_terms(ctx, r.x[size_t(k)], r.tau[size_t(k)], &scratch).grad;
      lambda = next;
    }
  }
  return out;
}

OcpSolution solve_mpc(const OcpProblem& problem, const OcpSolution* warm_start) {
  const auto t_start = Clock::now();
  const MpcConfig& cfg = *problem.config;
  cfg.validate_or_throw();
  if (!problem.x_init.all_finite() || !std::isfinite(problem.tau_init))
    throw std::invalid_argument("mpc initial state must be finite");
  const int n = cfg.horizon;

  Deadline deadline;
  if (cfg.iteration_cap <= 0) {
    deadline.enabled = true;
    // Leave headroom so the solve returns within the budget even when a
    // check lands mid-iteration.
    const double guard_ms = std::min(5.0, 0.1 * cfg.budget_ms);
    deadline.at = t_start + std::chrono::duration_cast<Clock::duration>(
                                std::chrono::duration<double, std::milli>(
                                    cfg.budget_ms - guard_ms));
  }
  const int iteration_limit = cfg.iteration_cap > 0
                                  ? std::min(cfg.iteration_cap, cfg.max_iterations)
                                  : cfg.max_iterations;

  std::vector<Vec5> u(size_t(n), Vec5::Zero());
  std::vector<double> tau_dot(size_t(n), 1.0);
  if (warm_start && int(warm_start->controls.size()) == n &&
      int(warm_start->tau_dot.size()) == n) {
    u = warm_start->controls;
    tau_dot = warm_start->tau_dot;
  }
  clamp_controls(problem, u, tau_dot);

  Rollout current = roll_out(problem, u, tau_dot);
  if (!std::isfinite(current.objective))
    throw std::runtime_error("mpc initial guess yields a non-finite objective");

  const StateTermContext dctx{problem, true};
  PenaltyTotals scratch;
  double lambda_reg = 1e-6;
  int iterations = 0;
  bool converged = false;

  std::vector<MatAug> a_aug(static_cast<size_t>(n));
  std::vector<MatAugCtrl> b_aug(static_cast<size_t>(n));
  std::vector<VecAug> lz(static_cast<size_t>(n) + 1);
  std::vector<MatAug> lzz(static_cast<size_t>(n) + 1);
  std::vector<VecCtrl> lv(static_cast<size_t>(n));
  std::vector<MatCtrl> lvv(static_cast<size_t>(n));
  std::vector<VecCtrl> ff(static_cast<size_t>(n));
  std::vector<MatCtrlAug> gains(static_cast<size_t>(n));

  std::vector<Vec5> u_try(static_cast<size_t>(n));
  std::vector<double> tau_dot_try(static_cast<size_t>(n));

  bool relinearize = true;
  while (iterations < iteration_limit && !deadline.expired()) {
    ++iterations;

    if (relinearize) {
      bool aborted = false;
      for (int k = 0; k < n; ++k) {
        if (deadline.expired()) {
          aborted = true;
          break;
        }
        const StepLinearization lin =
            linearize_step(*problem.params, current.x[size_t(k)], u[size_t(k)], cfg.ts);
        a_aug[size_t(k)].setZero();
        a_aug[size_t(k)].topLeftCorner<kStateDim, kStateDim>() = lin.a;
        a_aug[size_t(k)](kTauIdx, kTauIdx) = 1.0;
        b_aug[size_t(k)].setZero();
        b_aug[size_t(k)].topLeftCorner<kStateDim, kNumActuated>() = lin.b;
        b_aug[size_t(k)](kTauIdx, kNumActuated) = cfg.ts;

        const CtrlTermEval cv =
            eval_control_terms(problem, u[size_t(k)], tau_dot[size_t(k)], true, &scratch);
        lv[size_t(k)] = cv.grad;
        lvv[size_t(k)] = cv.hess;
        if (k >= 1) {
          const TermEval sv =
              eval_state_terms(dctx, current.x[size_t(k)], current.tau[size_t(k)], &scratch);
          lz[size_t(k)] = sv.grad;
          lzz[size_t(k)] = sv.hess;
        } else {
          lz[0].setZero();
          lzz[0].setZero();
        }
      }
      if (aborted) break;
      const TermEval terminal =
          eval_state_terms(dctx, current.x[size_t(n)], current.tau[size_t(n)], &scratch);
      lz[size_t(n)] = terminal.grad;
      lzz[size_t(n)] = terminal.hess;
      relinearize = false;
    }

    // Riccati backward pass.
    VecAug vz = lz[size_t(n)];
    MatAug vzz = lzz[size_t(n)];
    double dj_lin = 0.0;
    bool backward_ok = true;
    for (int k = n - 1; k >= 0; --k) {
      const MatAug& a = a_aug[size_t(k)];
      const MatAugCtrl& b = b_aug[size_t(k)];
      const VecAug qz = lz[size_t(k)] + a.transpose() * vz;
      const VecCtrl qv = lv[size_t(k)] + b.transpose() * vz;
      const MatAug qzz = lzz[size_t(k)] + a.transpose() * vzz * a;
      MatCtrl qvv = lvv[size_t(k)] + b.transpose() * vzz * b;
      qvv.diagonal().array() += lambda_reg;
      const MatCtrlAug qvz = b.transpose() * vzz * a;

      const Eigen::LLT<MatCtrl> llt(qvv);
      if (llt.info() != Eigen::Success) {
        backward_ok = false;
        break;
      }
      ff[size_t(k)] = -llt.solve(qv);
      gains[size_t(k)] = -llt.solve(qvz);
      dj_lin += qv.dot(ff[size_t(k)]);

      const MatCtrlAug kt = gains[size_t(k)];
      vz = qz + kt.transpose() * (qvv * ff[size_t(k)] + qv) + qvz.transpose() * ff[size_t(k)];
      vzz = qzz + kt.transpose() * qvv * kt + kt.transpose() * qvz + qvz.transpose() * kt;
      vzz = 0.5 * (vzz + vzz.transpose()).eval();
    }
    if (!backward_ok) {
      lambda_reg = std::min(lambda_reg * 10.0, 1e10);
      if (lambda_reg >= 1e10) break;
      continue;
    }

    if (-dj_lin < cfg.converge_tol * (1.0 + std::abs(current.objective))) {
      converged = true;
      break;
    }

    // Forward pass with backtracking on the feedforward scale.
    bool accepted = false;
    for (double alpha = 1.0; alpha > 1.0 / 2048.0; alpha *= 0.5) {
      if (deadline.expired()) break;
      CraneState xk = problem.x_init;
      double tau_k = problem.tau_init;
      for (int k = 0; k < n; ++k) {
        VecAug dz = VecAug::Zero();
        dz.head<kStateDim>() = xk.pack() - current.x[size_t(k)].pack();
        dz[kTauIdx] = tau_k - current.tau[size_t(k)];
        VecCtrl v;
        v.head<5>() = u[size_t(k)];
        v[kNumActuated] = tau_dot[size_t(k)];
        v += alpha * ff[size_t(k)] + gains[size_t(k)] * dz;
        v.head<5>() = v.head<5>().cwiseMax(-problem.params->u_max).cwiseMin(problem.params->u_max);
        v[kNumActuated] = std::clamp(v[kNumActuated], cfg.tau_rate_min, cfg.tau_rate_max);
        u_try[size_t(k)] = v.head<5>();
        tau_dot_try[size_t(k)] = v[kNumActuated];
        xk = discretize_step(*problem.params, xk, u_try[size_t(k)], cfg.ts);
        tau_k += tau_dot_try[size_t(k)] * cfg.ts;
      }
      const Rollout trial = roll_out(problem, u_try, tau_dot_try);
      if (std::isfinite(trial.objective) &&
          trial.objective <= current.objective + 1e-4 * alpha * dj_lin) {
        u.swap(u_try);
        tau_dot.swap(tau_dot_try);
        current = trial;
        accepted = true;
        break;
      }
    }

    if (accepted) {
      lambda_reg = std::max(lambda_reg * 0.5, 1e-9);
      // TODO: skip relinearization when the accepted step barely moved the
      // trajectory; the Jacobian chain dominates the iteration cost.
      relinearize = true;
      if (-dj_lin < 1e3 * cfg.converge_tol * (1.0 + std::abs(current.objective))) {
        converged = true;
        break;
      }
    } else {
      if (deadline.expired()) break;
      lambda_reg = std::min(lambda_reg * 10.0, 1e10);
      if (lambda_reg >= 1e10) break;
    }
  }

  OcpSolution sol;
  sol.states.assign(current.x.begin(), current.x.begin() + n);
  sol.controls = u;
  sol.tau.assign(current.tau.begin(), current.tau.begin() + n);
  sol.tau_dot = tau_dot;
  sol.objective = current.objective;
  sol.penalties = current.penalties;
  sol.iterations = iterations;
  sol.converged = converged;
  sol.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t_start).count();
  return sol;
}

OcpSolution shift_warm_start(const OcpSolution& previous, const MpcConfig& config) {
  OcpSolution guess = previous;
  const int n = config.horizon;
  if (int(previous.controls.size()) != n || n < 1) return guess;
  for (int k = 0; k + 1 < n; ++k) {
    guess.controls[size_t(k)] = previous.controls[size_t(k) + 1];
    guess.tau_dot[size_t(k)] = previous.tau_dot[size_t(k) + 1];
  }
  guess.controls[size_t(n) - 1] = previous.controls[size_t(n) - 1];
  guess.tau_dot[size_t(n) - 1] = previous.tau_dot[size_t(n) - 1];
  if (int(previous.states.size()) == n) {
    for (int k = 0; k + 1 < n; ++k) {
      guess.states[size_t(k)] = previous.states[size_t(k) + 1];
      guess.tau[size_t(k)] = previous.tau[size_t(k) + 1];
    }
    guess.tau[size_t(n) - 1] =
        previous.tau[size_t(n) - 1] + previous.tau_dot[size_t(n) - 1] * config.ts;
  }
  return guess;
}

}  // namespace cranempc
