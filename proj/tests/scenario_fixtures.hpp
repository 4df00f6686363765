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

#include "core/scenario_io.hpp"
#include "core/sim.hpp"

namespace cranempc::test {

// Crane with narrowed joint limits so test scenarios fit a modest grid.
inline CraneParams narrow_crane() {
  CraneParams params = default_crane_params();
  params.q_min << -0.7, -0.7, 0.0, 0.0, -0.5, -1.2, -1.2;
  params.q_max << 0.7, 0.2, 1.2, 1.2, 0.5, 1.2, 1.2;
  return params;
}

// Grid sized from the sampled workspace bounds plus a margin.
inline GridSpec fit_grid(const CraneParams& params, const CollisionConfig& collision,
                         double margin = 0.8, double resolution = 0.1) {
  const Eigen::AlignedBox3d bounds = sampled_workspace_bounds(params, collision);
  GridSpec grid;
  grid.resolution = resolution;
  grid.origin = bounds.min() - Vec3::Constant(margin);
  const Vec3 extent = bounds.max() - bounds.min() + Vec3::Constant(2.0 * margin);
  for (int a = 0; a < 3; ++a)
    grid.dims[a] = int(std::ceil(extent[a] / resolution)) + 1;
  grid.truncation = 2.0;
  return grid;
}

// Small hold-in-place scenario that validates and runs quickly.
inline ScenarioSpec small_scenario(double duration = 1.0) {
  ScenarioSpec spec;
  spec.name = "unit_test_hold";
  spec.crane = narrow_crane();
  spec.collision.radius_inflation = 0.05;
  spec.mpc.horizon = 10;
  spec.mpc.iteration_cap = 3;
  spec.initial_q << 0.0, -0.35, 0.35, 0.4, 0.0, 0.0, 0.0;
  spec.waypoints = {spec.initial_q.head<5>()};
  spec.grid = fit_grid(spec.crane, spec.collision);
  spec.duration = duration;
  spec.plant_dt = 1e-3;
  spec.control_period = 0.1;
  return spec;
}

}  // namespace cranempc::test
