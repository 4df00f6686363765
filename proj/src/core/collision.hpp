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
#include <vector>

#include "core/crane_model.hpp"
#include "core/edf_map.hpp"
#include "core/types.hpp"

namespace cranempc {

// Sphere decomposition of the three collision links: boom, arm (outer boom
// plus telescope stage) and gripper (both passive links as one body). Sphere
// centers ride the link centerlines; the per-stage collision constraint uses
// the sphere with the minimum EDF value per link.

inline constexpr int kNumCollisionLinks = 3;

struct CollisionConfig {
  double sphere_spacing = 0.4;  // m, target separation along the centerline
  double boom_radius = 0.25;
  double arm_radius = 0.20;
  double gripper_radius = 0.45;
  // Half-voxel inflation absorbing the center-to-center EDF discretization.
  double radius_inflation = 0.05;

  double link_radius(int link) const {
    return (link == 0 ? boom_radius : link == 1 ? arm_radius : gripper_radius) +
           radius_inflation;
  }
};

struct Sphere {
  Vec3 center;     // world frame
  double radius;
  double fraction; // position along the segment, 0 at start, 1 at end
};

struct SphereSet {
  std::array<std::vector<Sphere>, kNumCollisionLinks> links;
};

// Centerline segments per collision link for the default chain:
//   L1: inner boom root to outer boom root (fixed length),
//   L2: outer boom root to the telescope tip (length varies with q),
//   L3: pendulum pivot to the gripper tip.
// Sphere count per link is ceil(length / spacing) + 1.
SphereSet decompose_links(const CraneParams& params, const CollisionConfig& config,
                          const Vec7& q);

struct LinkDistance {
  double signed_distance;  // min over spheres of (EDF at center - radius)
  int min_sphere;          // index of the minimizing sphere, ties to lowest
};

LinkDistance link_signed_distance(const VoxelEdf& edf,
                                  const std::vector<Sphere>& spheres);

// All three links at once; convenience for logging and the solver.
std::array<LinkDistance, kNumCollisionLinks> signed_distances(
    const VoxelEdf& edf, const SphereSet& spheres);

double min_signed_distance(const VoxelEdf& edf, const SphereSet& spheres);

// d(sd_link)/dq by the chain rule through the minimizing sphere: the EDF
// gradient at its center times the center's position Jacobian.
Vec7 signed_distance_gradient(const VoxelEdf& edf, const CraneParams& params,
                              const CollisionConfig& config, const Vec7& q,
                              int link);

// All three links with gradients, sharing one forward-kinematics pass.
struct LinkDistanceGradient {
  double signed_distance;
  int min_sphere;
  Vec7 gradient;
};
std::array<LinkDistanceGradient, kNumCollisionLinks> signed_distances_with_gradients(
    const VoxelEdf& edf, const CraneParams& params, const CollisionConfig& config,
    const Vec7& q);

}  // namespace cranempc
