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

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "core/mpc.hpp"
#include "test_support.hpp"

using namespace cranempc;

namespace {

struct Fixture {
  CraneParams params = default_crane_params();
  MpcConfig config;
  CollisionConfig collision;
  VoxelEdf edf;
  ReferenceSpline spline;

  Fixture() {
    collision.radius_inflation = 0.05;
    VoxelGrid grid(Vec3(-12.0, -12.0, -2.0), 0.1, Eigen::Vector3i(240, 240, 80));
    edf = VoxelEdf::compute(std::move(grid), 2.0);
  }

  void hold_reference(const Vec5& q_a) {
    spline = plan_reference({q_a}, Vec5::Constant(0.3), Vec5::Constant(0.5));
  }

  OcpProblem problem(const CraneState& x, double tau = 0.0) const {
    OcpProblem p;
    p.params = &params;
    p.collision = &collision;
    p.spline = &spline;
    p.edf = &edf;
    p.config = &config;
    p.x_init = x;
    p.tau_init = tau;
    return p;
  }
};

// Mid-range state well away from every limit.
CraneState rest_state() {
  CraneState x;
  x.q << 0.0, -0.35, 0.35, 0.5, 0.0, 0.0, 0.0;
  return x;
}

}  // namespace

TEST_CASE("config defaults match the published controller settings") {
  const MpcConfig config;
  CHECK(config.horizon == 40);
  CHECK(config.ts == 0.1);
  CHECK(config.collision_margin == 0.2);
  CHECK(config.w_track == 1.0);
  CHECK(config.w_damp == 0.1);
  CHECK(config.w_accl == 0.1);
  CHECK(config.w_prog == 0.2);
  CHECK(config.budget_ms == 70.0);
}

TEST_CASE("quadratic barrier values and the mu rule") {
  CHECK(penalty(0.3, 0.2, 50.0) == 0.0);
  CHECK(penalty(0.1, 0.2, 50.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(penalty(0.2, 0.2, 50.0) == 0.0);
  // C^1 at activation: value shrinks quadratically just below the margin.
  CHECK(penalty(0.2 - 1e-6, 0.2, 50.0) == doctest::Approx(25.0 * 1e-12).epsilon(1e-6));
  CHECK(penalty(0.2 - 2e-6, 0.2, 50.0) / penalty(0.2 - 1e-6, 0.2, 50.0) ==
        doctest::Approx(4.0).epsilon(1e-6));

  CHECK(MpcConfig::penalty_mu(0.05) == doctest::Approx(200.0));
  CHECK(MpcConfig::penalty_mu(0.1) == doctest::Approx(100.0));
  CHECK(MpcConfig::penalty_mu(0.2) == doctest::Approx(50.0));
  CHECK_THROWS_AS(penalty(0.0, -1.0, 10.0), std::invalid_argument);
}

TEST_CASE("penalty is convex and zero exactly on the inactive side") {
  for (double h = -1.0; h < 1.0; h += 0.01) {
    const double p = penalty(h, 0.2, 50.0);
    if (h >= 0.2)
      CHECK(p == 0.0);
    else
      CHECK(p > 0.0);
  }
  // Midpoint convexity on a few triples.
  for (double a = -0.5; a < 0.5; a += 0.07)
    for (double b = a + 0.05; b < 0.6; b += 0.11) {
      const double lhs = penalty(0.5 * (a + b), 0.2, 50.0);
      const double rhs = 0.5 * (penalty(a, 0.2, 50.0) + penalty(b, 0.2, 50.0));
      CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("stage cost is zero at the tracked equilibrium and isolates terms") {
  Fixture f;
  CraneState x = rest_state();
  f.hold_reference(x.q.head<5>());
  CHECK(stage_cost(x, Vec5::Zero(), 0.0, 1.0, f.spline, f.config) == 0.0);
  CHECK(stage_cost(x, Vec5::Zero(), 0.0, 0.0, f.spline, f.config) ==
        doctest::Approx(0.2).epsilon(1e-12));
  x.qd[5] = 0.1;
  CHECK(stage_cost(x, Vec5::Zero(), 0.0, 1.0, f.spline, f.config) ==
        doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("discretize_step holds the equilibrium fixed") {
  const CraneParams params = default_crane_params();
  const CraneState x;
  const CraneState next = discretize_step(params, x, Vec5::Zero(), 0.1);
  CHECK((next.pack() - x.pack()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("discretize_step matches dense integration over one step") {
  const CraneParams params = default_crane_params();
  std::mt19937 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    CraneState x;
    x.q = test::random_q(rng, params, 0.5);
    x.qd = test::random_qd(rng, 0.2);
    Vec5 u;
    for (int i = 0; i < 5; ++i) u[i] = 0.3 * (trial % 2 ? 1 : -1) * (i + 1) / 5.0;
    const double ts = 0.02;
    const CraneState coarse = discretize_step(params, x, u, ts);
    CraneState fine = x;
    for (int s = 0; s < 40; ++s) fine = discretize_step(params, fine, u, ts / 40.0);
    CHECK((coarse.pack() - fine.pack()).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("discretize_step shows fourth-order step-halving behavior") {
  const CraneParams params = default_crane_params();
  CraneState x;
  x.q << 0.1, -0.4, 0.6, 0.8, 0.2, 0.15, -0.1;
  x.qd << 0.1, -0.05, 0.1, 0.2, -0.1, 0.3, 0.2;
  const Vec5 u = Vec5::Constant(0.2);

  const double big = 0.2;
  CraneState ref = x;
  for (int s = 0; s < 256; ++s) ref = discretize_step(params, ref, u, big / 256.0);

  const CraneState one = discretize_step(params, x, u, big);
  CraneState two = discretize_step(params, x, u, 0.5 * big);
  two = discretize_step(params, two, u, 0.5 * big);

  const double e1 = (one.pack() - ref.pack()).norm();
  const double e2 = (two.pack() - ref.pack()).norm();
  const double ratio = e1 / e2;
  CHECK(ratio > 8.0);
  CHECK(ratio < 40.0);
}

TEST_CASE("objective vanishes on a tracked constant reference") {
  Fixture f;
  const CraneState x = rest_state();
  f.hold_reference(x.q.head<5>());
  const int n = f.config.horizon;
  const ObjectiveEval eval = total_objective(f.problem(x), std::vector<Vec5>(size_t(n), Vec5::Zero()),
                                             std::vector<double>(size_t(n), 1.0), false);
  CHECK(eval.value <= 1e-8);
}

TEST_CASE("objective gradients match central finite differences") {
  Fixture f;
  f.config.horizon = 8;

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  CraneState x = rest_state();
  x.qd = test::random_qd(rng, 0.1);

  // Obstacle shelf just under the gripper so collision penalties activate.
  const Vec3 tip = forward_kinematics(f.params, x.q)[6] * Vec3(0.0, 0.0, -0.6);
  f.edf.apply_box_obstacle(tip + Vec3(-1.0, -1.0, -1.2), tip + Vec3(1.0, 1.0, -0.56),
                           true);
  Vec5 goal = x.q.head<5>();
  goal[0] += 0.4;
  f.spline = plan_reference({x.q.head<5>(), goal}, Vec5::Constant(0.3), Vec5::Constant(0.5));

  const int n = f.config.horizon;
  std::vector<Vec5> u(static_cast<size_t>(n));
  std::vector<double> tau_dot(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < 5; ++i) u[size_t(k)][i] = 0.2 * unit(rng);
    tau_dot[size_t(k)] = 0.6 + 0.3 * unit(rng);
  }

  const OcpProblem problem = f.problem(x);
  const ObjectiveEval eval = total_objective(problem, u, tau_dot, true);
  CHECK(eval.penalties.collision > 0.0);  // the obstacle is actually active

  double grad_norm = 0.0;
  for (int k = 0; k < n; ++k) {
    grad_norm += eval.grad_u[size_t(k)].squaredNorm();
    grad_norm += eval.grad_tau_dot[size_t(k)] * eval.grad_tau_dot[size_t(k)];
  }
  grad_norm = std::sqrt(grad_norm);
  REQUIRE(grad_norm > 0.0);

  // Central differences at two steps; directions where the two disagree sit
  // on a nonsmooth point (interpolation face or minimizer switch) and are
  // skipped, mirroring the collision-gradient contract.
  double max_rel = 0.0;
  int skipped = 0, total = 0;
  const auto check_direction = [&](const std::function<double(double)>& value_at) {
    ++total;
    const double h = 1e-6;
    const double fd1 = (value_at(h) - value_at(-h)) / (2.0 * h);
    const double fd2 = (value_at(0.5 * h) - value_at(-0.5 * h)) / h;
    if (std::abs(fd1 - fd2) / grad_norm > 2e-5) {
      ++skipped;
      return std::numeric_limits<double>::quiet_NaN();
    }
    return fd1;
  };
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < 5; ++i) {
      const double fd = check_direction([&](double d) {
        auto up = u;
        up[size_t(k)][i] += d;
        return total_objective(problem, up, tau_dot, false).value;
      });
      if (std::isnan(fd)) continue;
      max_rel = std::max(max_rel, std::abs(eval.grad_u[size_t(k)][i] - fd) / grad_norm);
    }
    const double fd = check_direction([&](double d) {
      auto tp = tau_dot;
      tp[size_t(k)] += d;
      return total_objective(problem, u, tp, false).value;
    });
    if (std::isnan(fd)) continue;
    max_rel = std::max(max_rel, std::abs(eval.grad_tau_dot[size_t(k)] - fd) / grad_norm);
  }
  CHECK(max_rel < 1e-4);
  CHECK(skipped <= total / 20);
}

TEST_CASE("collision penalties decompose as the penalty op times the knot count") {
  Fixture f;
  f.config.horizon = 10;
  const CraneState x = rest_state();
  f.hold_reference(x.q.head<5>());
  const int n = f.config.horizon;
  const std::vector<Vec5> u(size_t(n), Vec5::Zero());
  const std::vector<double> tau_dot(size_t(n), 1.0);

  const double before = total_objective(f.problem(x), u, tau_dot, false).value;

  // Wall near the gripper: the held state keeps every knot at the same sd.
  f.edf.apply_box_obstacle(Vec3(6.0, -1.0, 1.6), Vec3(7.8, 1.0, 2.4), true);
  const auto sds = signed_distances(
      f.edf, decompose_links(f.params, f.collision, x.q));
  double expected = 0.0;
  const double mu = MpcConfig::penalty_mu(f.config.collision_margin);
  for (const auto& link : sds)
    expected += penalty(link.signed_distance, f.config.collision_margin, mu);
  REQUIRE(expected > 0.0);

  const ObjectiveEval after = total_objective(f.problem(x), u, tau_dot, false);
  CHECK(after.value - before == doctest::Approx(n * expected).epsilon(1e-9));
  CHECK(after.penalties.collision == doctest::Approx(n * expected).epsilon(1e-9));
}

TEST_CASE("a converged warm start returns unchanged within an iteration") {
  Fixture f;
  f.config.horizon = 20;
  f.config.iteration_cap = 200;
  const CraneState x = rest_state();
  f.hold_reference(x.q.head<5>());

  const OcpSolution first = solve_mpc(f.problem(x));
  f.config.iteration_cap = 5;
  const OcpSolution again = solve_mpc(f.problem(x), &first);
  CHECK(again.iterations <= 2);
  CHECK(std::abs(again.objective - first.objective) <=
        1e-10 * (1.0 + std::abs(first.objective)));
}

TEST_CASE("tracking from an on-reference state commands the spline velocity") {
  Fixture f;
  f.config.iteration_cap = 120;
  f.config.max_iterations = 120;
  // Horizontal telescope extension: constant-velocity motion that leaves the
  // pendulum at rest, so the optimum is plain feed-forward tracking.
  CraneState x = rest_state();
  Vec5 start = x.q.head<5>();
  Vec5 goal = start;
  goal[3] += 0.7;
  f.spline = plan_reference({start, goal}, Vec5::Constant(0.1), Vec5::Constant(0.3));

  // Start mid-trajectory, exactly on the reference.
  const double tau0 = 0.5 * f.spline.duration();
  x.q.head<5>() = f.spline.position(tau0);
  x.qd.head<5>() = f.spline.velocity(tau0);
  const OcpSolution sol = solve_mpc(f.problem(x, tau0));
  CHECK(f.spline.velocity(tau0).norm() > 0.05);  // the reference really moves
  CHECK((sol.controls.front() - f.spline.velocity(tau0)).norm() < 1e-2);
}

TEST_CASE("solutions are monotone against the initial guess and bounded") {
  Fixture f;
  f.config.horizon = 15;
  f.config.iteration_cap = 8;
  std::mt19937 rng(23);
  CraneState x = rest_state();
  x.qd = test::random_qd(rng, 0.2);
  Vec5 goal = x.q.head<5>();
  goal[1] -= 0.2;
  f.spline = plan_reference({x.q.head<5>(), goal}, Vec5::Constant(0.2), Vec5::Constant(0.4));

  OcpSolution guess;
  guess.controls.assign(15, Vec5::Constant(5.0));  // clamps to u_max
  guess.tau_dot.assign(15, 0.3);
  const OcpSolution sol = solve_mpc(f.problem(x), &guess);

  std::vector<Vec5> clamped(15);
  for (int k = 0; k < 15; ++k)
    clamped[size_t(k)] = Vec5::Constant(5.0).cwiseMin(f.params.u_max);
  const double guess_objective =
      total_objective(f.problem(x), clamped, std::vector<double>(15, 0.3), false).value;
  CHECK(sol.objective <= guess_objective + 1e-12);
  for (const Vec5& u : sol.controls) {
    CHECK(u.allFinite());
    CHECK((u.cwiseAbs().array() <= f.params.u_max.array() + 1e-12).all());
  }
  for (double td : sol.tau_dot) {
    CHECK(td >= f.config.tau_rate_min - 1e-12);
    CHECK(td <= f.config.tau_rate_max + 1e-12);
  }
}

TEST_CASE("iteration-capped solves are bit-identical") {
  Fixture f;
  f.config.horizon = 12;
  f.config.iteration_cap = 6;
  CraneState x = rest_state();
  x.qd[5] = 0.3;
  Vec5 goal = x.q.head<5>();
  goal[0] += 0.5;
  f.spline = plan_reference({x.q.head<5>(), goal}, Vec5::Constant(0.2), Vec5::Constant(0.4));
  const OcpSolution a = solve_mpc(f.problem(x));
  const OcpSolution b = solve_mpc(f.problem(x));
  REQUIRE(a.controls.size() == b.controls.size());
  for (size_t k = 0; k < a.controls.size(); ++k) {
    CHECK(std::memcmp(a.controls[k].data(), b.controls[k].data(), 5 * sizeof(double)) == 0);
    CHECK(a.tau_dot[k] == b.tau_dot[k]);
  }
  CHECK(a.objective == b.objective);
}

TEST_CASE("wall-clock budget is honored and controls stay finite at expiry") {
  Fixture f;
  f.config.budget_ms = 70.0;
  f.config.iteration_cap = 0;
  CraneState x = rest_state();
  x.qd[5] = 0.5;
  x.qd[6] = -0.4;
  Vec5 goal = x.q.head<5>();
  goal[0] += 1.0;
  f.spline = plan_reference({x.q.head<5>(), goal}, Vec5::Constant(0.25), Vec5::Constant(0.5));
  std::vector<double> walls;
  for (int repeat = 0; repeat < 5; ++repeat) {
    const OcpSolution sol = solve_mpc(f.problem(x));
    walls.push_back(sol.wall_ms);
    for (const Vec5& u : sol.controls) {
      CHECK(u.allFinite());
      CHECK((u.cwiseAbs().array() <= f.params.u_max.array() + 1e-12).all());
    }
  }
  std::sort(walls.begin(), walls.end());
  CHECK(walls[2] <= 70.0 + 5.0);     // median within budget
  CHECK(walls.back() <= 200.0);      // scheduler stalls excepted, still bounded

  // A tiny budget still returns the (clamped) initial guess.
  f.config.budget_ms = 1.0;
  const OcpSolution rushed = solve_mpc(f.problem(x));
  CHECK(rushed.controls.size() == size_t(f.config.horizon));
  for (const Vec5& u : rushed.controls) CHECK(u.allFinite());
}

TEST_CASE("rollout-consistency and the tau recursion hold on solutions") {
  Fixture f;
  f.config.horizon = 10;
  f.config.iteration_cap = 4;
  const CraneState x = rest_state();
  f.hold_reference(x.q.head<5>());
  const OcpSolution sol = solve_mpc(f.problem(x));
  REQUIRE(int(sol.states.size()) == 10);
  CraneState prop = sol.states.front();
  for (int k = 0; k + 1 < 10; ++k) {
    prop = discretize_step(f.params, sol.states[size_t(k)], sol.controls[size_t(k)],
                           f.config.ts);
    CHECK((prop.pack() - sol.states[size_t(k) + 1].pack()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sol.tau[size_t(k) + 1] ==
          doctest::Approx(sol.tau[size_t(k)] + sol.tau_dot[size_t(k)] * f.config.ts)
              .epsilon(1e-12));
  }
}

TEST_CASE("non-finite initial conditions are rejected") {
  Fixture f;
  CraneState x = rest_state();
  f.hold_reference(x.q.head<5>());
  x.q[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(solve_mpc(f.problem(x)));
}

TEST_CASE("warm-start shift drops the first knot and duplicates the last") {
  MpcConfig config;
  config.horizon = 4;
  OcpSolution sol;
  for (int k = 0; k < 4; ++k) {
    sol.controls.push_back(Vec5::Constant(double(k)));
    sol.tau_dot.push_back(0.1 * k);
    CraneState x;
    x.q[0] = double(k);
    sol.states.push_back(x);
    sol.tau.push_back(0.01 * k);
  }
  const OcpSolution shifted = shift_warm_start(sol, config);
  REQUIRE(shifted.controls.size() == 4);
  CHECK(shifted.controls[0][0] == 1.0);
  CHECK(shifted.controls[2][0] == 3.0);
  CHECK(shifted.controls[3][0] == 3.0);  // duplicated tail
  CHECK(shifted.tau_dot[3] == doctest::Approx(0.3));
  CHECK(shifted.tau[0] == doctest::Approx(0.01));

  // A constant-control solution shifts onto itself.
  OcpSolution constant;
  constant.controls.assign(4, Vec5::Constant(0.2));
  constant.tau_dot.assign(4, 1.0);
  constant.states.assign(4, CraneState{});
  constant.tau = {0.0, 0.1, 0.2, 0.3};
  const OcpSolution same = shift_warm_start(constant, config);
  for (int k = 0; k < 4; ++k) {
    CHECK((same.controls[size_t(k)] - Vec5::Constant(0.2)).norm() == 0.0);
    CHECK(same.tau_dot[size_t(k)] == 1.0);
  }
}
