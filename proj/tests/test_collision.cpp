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

#include <random>

#include "core/collision.hpp"
#include "test_support.hpp"

using namespace cranempc;

namespace {

// Workspace-sized grid around the default crane, obstacle-free.
VoxelEdf empty_workspace(double d_max = 2.0) {
  VoxelGrid grid(Vec3(-12.0, -12.0, -2.0), 0.1, Eigen::Vector3i(240, 240, 80));
  return VoxelEdf::compute(std::move(grid), d_max);
}

CollisionConfig test_config() {
  CollisionConfig config;
  config.radius_inflation = 0.05;
  return config;
}

}  // namespace

TEST_CASE("sphere counts follow the ceil(length/spacing)+1 rule") {
  const CraneParams params = default_crane_params();
  const CollisionConfig config = test_config();

  Vec7 q = Vec7::Zero();  // telescope retracted: arm length 3.0
  SphereSet set = decompose_links(params, config, q);
  CHECK(set.links[0].size() == 11);  // boom, 4.0 m
  CHECK(set.links[1].size() == 9);   // arm, ceil(3.0/0.4)+1
  CHECK(set.links[2].size() == 3);   // gripper, 0.6 m

  q[3] = 2.0;  // extended: arm length 5.0
  set = decompose_links(params, config, q);
  CHECK(set.links[1].size() == 14);  // ceil(5.0/0.4)+1
}

TEST_CASE("spheres cover their segments with half-spacing below the radius") {
  const CraneParams params = default_crane_params();
  const CollisionConfig config = test_config();
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec7 q = test::random_q(rng, params);
    const SphereSet set = decompose_links(params, config, q);
    for (int link = 0; link < kNumCollisionLinks; ++link) {
      const auto& spheres = set.links[size_t(link)];
      REQUIRE(spheres.size() >= 2);
      for (size_t s = 0; s + 1 < spheres.size(); ++s) {
        const double gap = (spheres[s + 1].center - spheres[s].center).norm();
        CHECK(0.5 * gap <= config.link_radius(link) + 1e-12);
        CHECK(gap <= config.sphere_spacing + 1e-12);
      }
    }
  }
}

TEST_CASE("slew rotation moves all sphere centers rigidly") {
  const CraneParams params = default_crane_params();
  const CollisionConfig config = test_config();
  Vec7 q = Vec7::Zero();
  q << 0.2, -0.3, 0.7, 1.1, 0.3, 0.05, -0.1;
  Vec7 q_rot = q;
  const double delta = 0.9;
  q_rot[0] += delta;

  const SphereSet before = decompose_links(params, config, q);
  const SphereSet after = decompose_links(params, config, q_rot);
  const Vec3 origin = params.joints[0].parent_offset.translation();
  const Mat3 rot = Eigen::AngleAxisd(delta, Vec3::UnitZ()).toRotationMatrix();
  for (int link = 0; link < kNumCollisionLinks; ++link) {
    REQUIRE(before.links[size_t(link)].size() == after.links[size_t(link)].size());
    for (size_t s = 0; s < before.links[size_t(link)].size(); ++s) {
      const Vec3 expected = rot * (before.links[size_t(link)][s].center - origin) + origin;
      CHECK((after.links[size_t(link)][s].center - expected).norm() < 1e-12);
      CHECK(after.links[size_t(link)][s].radius == before.links[size_t(link)][s].radius);
    }
  }
}

TEST_CASE("signed distance in an empty map is the truncation minus the radius") {
  const VoxelEdf edf = empty_workspace(2.0);
  const std::vector<Sphere> spheres = {{Vec3(2.0, 0.0, 1.0), 0.3, 0.0}};
  const LinkDistance ld = link_signed_distance(edf, spheres);
  CHECK(ld.signed_distance == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(ld.min_sphere == 0);
}

TEST_CASE("signed distance subtracts the radius from the field value") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(32, 32, 32));
  grid.occupancy[grid.linear_index(5, 16, 16)] = 1;
  const VoxelEdf edf = VoxelEdf::compute(std::move(grid), 2.0);
  // Sphere center five cells along +x from the seed: EDF value 0.5.
  const Vec3 center = edf.grid().center(edf.grid().linear_index(10, 16, 16));
  const std::vector<Sphere> spheres = {{center, 0.3, 0.0}};
  CHECK(link_signed_distance(edf, spheres).signed_distance ==
        doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("the minimizing sphere is the one with the smaller margin") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(32, 32, 32));
  grid.occupancy[grid.linear_index(5, 16, 16)] = 1;
  const VoxelEdf edf = VoxelEdf::compute(std::move(grid), 2.0);
  const Vec3 at_05 = edf.grid().center(edf.grid().linear_index(10, 16, 16));
  const Vec3 at_04 = edf.grid().center(edf.grid().linear_index(9, 16, 16));
  const std::vector<Sphere> spheres = {{at_05, 0.3, 0.0}, {at_04, 0.25, 1.0}};
  const LinkDistance ld = link_signed_distance(edf, spheres);
  CHECK(ld.signed_distance == doctest::Approx(0.15).epsilon(1e-9));
  CHECK(ld.min_sphere == 1);
}

TEST_CASE("empty sphere list is rejected") {
  const VoxelEdf edf = empty_workspace();
  CHECK_THROWS_AS(link_signed_distance(edf, {}), std::invalid_argument);
}

TEST_CASE("gradient is zero in a uniform field") {
  const CraneParams params = default_crane_params();
  const VoxelEdf edf = empty_workspace();
  const Vec7 q = Vec7::Zero();
  for (int link = 0; link < kNumCollisionLinks; ++link)
    CHECK(signed_distance_gradient(edf, params, test_config(), q, link).norm() == 0.0);
}

TEST_CASE("boom distance has zero partials for downstream joints") {
  const CraneParams params = default_crane_params();
  const CollisionConfig config = test_config();
  VoxelGrid grid(Vec3(-12.0, -12.0, -2.0), 0.1, Eigen::Vector3i(240, 240, 80));
  // Obstacle under the boom midpoint.
  grid.set_box_obstacle(Vec3(2.0, -0.4, 0.4), Vec3(3.0, 0.4, 1.0), true);
  const VoxelEdf edf = VoxelEdf::compute(std::move(grid), 2.0);
  Vec7 q;
  q << 0.1, -0.2, 0.3, 0.5, 0.2, 0.05, -0.05;
  const Vec7 grad = signed_distance_gradient(edf, params, config, q, 0);
  CHECK(grad.head<2>().norm() > 0.0);
  CHECK(grad.tail<4>().norm() < 1e-12);  // telescope, rotator, pendulum
}

TEST_CASE("link gradients match finite differences away from minimizer switches") {
  const CraneParams params = default_crane_params();
  const CollisionConfig config = test_config();
  std::mt19937 rng(12);
  VoxelGrid grid(Vec3(-12.0, -12.0, -2.0), 0.1, Eigen::Vector3i(240, 240, 80));
  grid.set_box_obstacle(Vec3(4.0, -1.5, -0.5), Vec3(6.5, 1.5, 1.2), true);
  grid.set_box_obstacle(Vec3(1.0, 3.0, -0.5), Vec3(3.0, 5.0, 2.0), true);
  const VoxelEdf edf = VoxelEdf::compute(std::move(grid), 2.0);

  const double h = 1e-6;
  int tested = 0;
  for (int trial = 0; trial < 1500 && tested < 500; ++trial) {
    const Vec7 q = test::random_q(rng, params, 0.6);
    for (int link = 0; link < kNumCollisionLinks; ++link) {
      const SphereSet set = decompose_links(params, config, q);
      const int min_sphere = link_signed_distance(edf, set.links[size_t(link)]).min_sphere;
      // The interpolant is smooth only inside a cell: skip minimizers whose
      // center sits on a cell face, where the gradient genuinely jumps.
      const Vec3 center = set.links[size_t(link)][size_t(min_sphere)].center;
      bool interior = true;
      for (int a = 0; a < 3; ++a) {
        const double u = (center[a] - edf.grid().origin[a]) / edf.grid().resolution - 0.5;
        const double frac = u - std::floor(u);
        if (frac < 0.02 || frac > 0.98) interior = false;
      }
      if (!interior) continue;
      // Skip configurations where the minimizer flips under perturbation.
      bool stable = true;
      Vec7 fd = Vec7::Zero();
      for (int i = 0; i < kNumJoints && stable; ++i) {
        Vec7 qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        const SphereSet sp = decompose_links(params, config, qp);
        const SphereSet sm = decompose_links(params, config, qm);
        const LinkDistance dp = link_signed_distance(edf, sp.links[size_t(link)]);
        const LinkDistance dm = link_signed_distance(edf, sm.links[size_t(link)]);
        if (dp.min_sphere != min_sphere || dm.min_sphere != min_sphere) {
          stable = false;
          break;
        }
        fd[i] = (dp.signed_distance - dm.signed_distance) / (2.0 * h);
      }
      if (!stable) continue;
      const Vec7 grad = signed_distance_gradient(edf, params, config, q, link);
      CHECK((grad - fd).cwiseAbs().maxCoeff() < 1e-3);
      ++tested;
    }
  }
  CHECK(tested >= 500);
}

TEST_CASE("centerline points are no closer than the link signed distance") {
  const CraneParams params = default_crane_params();
  const CollisionConfig config = test_config();
  std::mt19937 rng(21);
  VoxelGrid grid(Vec3(-12.0, -12.0, -2.0), 0.1, Eigen::Vector3i(240, 240, 80));
  grid.set_box_obstacle(Vec3(4.5, -1.0, -0.5), Vec3(6.0, 1.0, 1.0), true);
  const VoxelEdf edf = VoxelEdf::compute(std::move(grid), 2.0);

  for (int trial = 0; trial < 25; ++trial) {
    const Vec7 q = test::random_q(rng, params, 0.6);
    const SphereSet set = decompose_links(params, config, q);
    for (int link = 0; link < kNumCollisionLinks; ++link) {
      const auto& spheres = set.links[size_t(link)];
      const double sd = link_signed_distance(edf, spheres).signed_distance;
      // Sample along the centerline between consecutive sphere centers.
      for (size_t s = 0; s + 1 < spheres.size(); ++s)
        for (int f = 0; f <= 4; ++f) {
          const Vec3 p =
              spheres[s].center + 0.25 * f * (spheres[s + 1].center - spheres[s].center);
          CHECK(edf.query_distance(p) >= sd - 1e-9);
        }
    }
  }
}

TEST_CASE("signed distance is 1-Lipschitz in a single center perturbation") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(32, 32, 32));
  grid.set_box_obstacle(Vec3(1.0, 1.0, 1.0), Vec3(1.5, 1.5, 1.5), true);
  const VoxelEdf edf = VoxelEdf::compute(std::move(grid), 2.0);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Sphere> spheres = {{Vec3(0.8, 2.2, 1.4), 0.2, 0.0},
                                   {Vec3(2.4, 0.9, 1.8), 0.25, 1.0}};
    const double base = link_signed_distance(edf, spheres).signed_distance;
    Vec3 delta(unit(rng), unit(rng), unit(rng));
    delta *= 0.11;
    spheres[size_t(trial % 2)].center += delta;
    const double moved = link_signed_distance(edf, spheres).signed_distance;
    // The interpolated field is 1-Lipschitz per axis; use the L1 bound.
    CHECK(std::abs(moved - base) <= delta.cwiseAbs().sum() + 1e-9);
  }
}
