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

#include "core/collision.hpp"

#include <cmath>
#include <stdexcept>

namespace cranempc {

namespace {

// Attachment frames for the default chain layout. Each segment is expressed
// as (link, local start) -> (link, local end); for L1 and L2 the end point is
// the next link's origin, which keeps the segment valid under telescoping.
struct SegmentSpec {
  int start_link;
  Vec3 start_local;
  int end_link;
  Vec3 end_local;
};

std::array<SegmentSpec, kNumCollisionLinks> segment_specs() {
  return {{
      {1, Vec3::Zero(), 2, Vec3::Zero()},              // boom
      {2, Vec3::Zero(), 3, Vec3::Zero()},              // arm incl. telescope
      {5, Vec3::Zero(), 6, Vec3(0.0, 0.0, -0.6)},      // pendulum + gripper body
  }};
}

}  // namespace

SphereSet decompose_links(const CraneParams& params, const CollisionConfig& config,
                          const Vec7& q) {
  if (!(config.sphere_spacing > 0.0))
    throw std::invalid_argument("sphere spacing must be positive");
  const auto poses = forward_kinematics(params, q);
  SphereSet set;
  const auto specs = segment_specs();
  for (int link = 0; link < kNumCollisionLinks; ++link) {
    const SegmentSpec& spec = specs[link];
    const Vec3 start = poses[spec.start_link] * spec.start_local;
    const Vec3 end = poses[spec.end_link] * spec.end_local;
    const double length = (end - start).norm();
    const int count = int(std::ceil(length / config.sphere_spacing - 1e-12)) + 1;
    const double radius = config.link_radius(link);
    auto& spheres = set.links[link];
    spheres.reserve(size_t(count));
    for (int s = 0; s < count; ++s) {
      const double a = count == 1 ? 0.0 : double(s) / double(count - 1);
      spheres.push_back(Sphere{start + a * (end - start), radius, a});
    }
  }
  return set;
}

LinkDistance link_signed_distance(const VoxelEdf& edf,
                                  const std::vector<Sphere>& spheres) {
  if (spheres.empty())
    throw std::invalid_argument("link has no collision spheres");
  LinkDistance result{std::numeric_limits<double>::infinity(), -1};
  for (int i = 0; i < int(spheres.size()); ++i) {
    const double sd = edf.query_distance(spheres[size_t(i)].center) -
                      spheres[size_t(i)].radius;
    if (sd < result.signed_distance) {
      result.signed_distance = sd;
      result.min_sphere = i;
    }
  }
  return result;
}

std::array<LinkDistance, kNumCollisionLinks> signed_distances(
    const VoxelEdf& edf, const SphereSet& spheres) {
  std::array<LinkDistance, kNumCollisionLinks> out;
  for (int link = 0; link < kNumCollisionLinks; ++link)
    out[size_t(link)] = link_signed_distance(edf, spheres.links[size_t(link)]);
  return out;
}

double min_signed_distance(const VoxelEdf& edf, const SphereSet& spheres) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& link : spheres.links)
    best = std::min(best, link_signed_distance(edf, link).signed_distance);
  return best;
}

Vec7 signed_distance_gradient(const VoxelEdf& edf, const CraneParams& params,
                              const CollisionConfig& config, const Vec7& q,
                              int link) {
  const SphereSet set = decompose_links(params, config, q);
  const LinkDistance ld = link_signed_distance(edf, set.links[size_t(link)]);
  const Sphere& sphere = set.links[size_t(link)][size_t(ld.min_sphere)];
  const Vec3 edf_grad = edf.query_gradient(sphere.center);
  // A sphere at fraction a rides the respaced centerline, so its center
  // moves as the matching convex combination of the segment endpoints.
  const SegmentSpec spec = segment_specs()[size_t(link)];
  const Mat3x7 jac_start = point_jacobian(params, q, spec.start_link, spec.start_local);
  const Mat3x7 jac_end = point_jacobian(params, q, spec.end_link, spec.end_local);
  const Mat3x7 jac = (1.0 - sphere.fraction) * jac_start + sphere.fraction * jac_end;
  return jac.transpose() * edf_grad;
}

std::array<LinkDistanceGradient, kNumCollisionLinks> signed_distances_with_gradients(
    const VoxelEdf& edf, const CraneParams& params, const CollisionConfig& config,
    const Vec7& q) {
  const auto poses = forward_kinematics(params, q);
  const auto specs = segment_specs();
  const SphereSet set = decompose_links(params, config, q);

  // Jacobian of the world point attached to `link` at `local`, reusing poses.
  const auto jac_of = [&](int link, const Vec3& local) {
    const Vec3 point = poses[size_t(link)] * local;
    Mat3x7 jac = Mat3x7::Zero();
    for (int i = 0; i <= link; ++i) {
      const Vec3 axis_world = poses[size_t(i)].linear() * params.joints[size_t(i)].axis;
      if (params.joints[size_t(i)].type == JointType::kRevolute)
        jac.col(i) = axis_world.cross(point - poses[size_t(i)].translation());
      else
        jac.col(i) = axis_world;
    }
    return jac;
  };

  std::array<LinkDistanceGradient, kNumCollisionLinks> out;
  for (int link = 0; link < kNumCollisionLinks; ++link) {
    const LinkDistance ld = link_signed_distance(edf, set.links[size_t(link)]);
    const Sphere& sphere = set.links[size_t(link)][size_t(ld.min_sphere)];
    const Vec3 edf_grad = edf.query_gradient(sphere.center);
    const Mat3x7 jac =
        (1.0 - sphere.fraction) * jac_of(specs[size_t(link)].start_link,
                                         specs[size_t(link)].start_local) +
        sphere.fraction * jac_of(specs[size_t(link)].end_link,
                                 specs[size_t(link)].end_local);
    out[size_t(link)] =
        LinkDistanceGradient{ld.signed_distance, ld.min_sphere, jac.transpose() * edf_grad};
  }
  return out;
}

}  // namespace cranempc
