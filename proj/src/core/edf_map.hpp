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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace cranempc {

// Axis-aligned voxel occupancy grid. Voxel (i,j,k) has its center at
// origin + resolution * (i+1/2, j+1/2, k+1/2); the grid volume is the box
// [origin, origin + resolution * dims].
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double resolution = 0.1;
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();
  std::vector<std::uint8_t> occupancy;

  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double resolution, const Eigen::Vector3i& dims);

  int num_voxels() const { return dims.x() * dims.y() * dims.z(); }
  int linear_index(int i, int j, int k) const {
    return i + dims.x() * (j + dims.y() * k);
  }
  Eigen::Vector3i voxel_of(int linear) const;
  Vec3 center(int i, int j, int k) const;
  Vec3 center(int linear) const;
  bool occupied(int linear) const { return occupancy[linear] != 0; }

  // Sets the occupancy of every voxel whose center lies inside the closed
  // axis-aligned box and returns the voxels whose state actually changed.
  // A box entirely outside the grid yields an empty change set.
  std::vector<int> set_box_obstacle(const Vec3& min_corner, const Vec3& max_corner,
                                    bool occupied);
};

// Truncated Euclidean distance field over a voxel grid. Distances are
// center-to-center, clamped to d_max, and exactly equal to the brute-force
// minimum over occupied voxels; incremental updates preserve that equality.
class VoxelEdf {
 public:
  VoxelEdf() = default;

  // Production path: separable exact distance transform over the whole grid.
  static VoxelEdf compute(VoxelGrid grid, double d_max);

  // Independent O(voxels x obstacles) oracle; same values as compute().
  static VoxelEdf compute_bruteforce(const VoxelGrid& grid, double d_max);

  // Re-establishes exactness after the listed voxels flipped occupancy.
  // The occupancy itself must already be applied to grid(). Only regions
  // within the truncation radius of the changes are touched.
  void update_incremental(const std::vector<int>& changed);

  // Applies a box flip to the grid and updates the field; returns the
  // changed voxel set.
  std::vector<int> apply_box_obstacle(const Vec3& min_corner, const Vec3& max_corner,
                                      bool occupied);

  VoxelGrid& grid() { return grid_; }
  const VoxelGrid& grid() const { return grid_; }
  double d_max() const { return d_max_; }
  double distance_at(int linear) const { return dist_[linear]; }
  int closest_obstacle_at(int linear) const { return coc_[linear]; }
  const std::vector<double>& distances() const { return dist_; }

  // Trilinear interpolation of the stored distances; points outside the grid
  // volume return d_max.
  double query_distance(const Vec3& p) const;

  // Analytic gradient of the interpolant; zero outside the grid volume and
  // along clamped boundary axes.
  Vec3 query_gradient(const Vec3& p) const;

 private:
  void recompute_region(const Eigen::Vector3i& lo, const Eigen::Vector3i& hi,
                        bool sites_from_occupancy, const std::vector<int>& site_list,
                        bool lower_only, const std::vector<int>* apply_only = nullptr);

  VoxelGrid grid_;
  double d_max_ = 2.0;
  std::vector<double> dist_;
  std::vector<std::int32_t> coc_;  // linear index of a nearest obstacle, -1 if truncated
};

// Plain-text grid dump (origin, resolution, dims, occupied voxel list), used
// for test fixtures and scenario debugging.
void save_grid(const VoxelGrid& grid, std::ostream& out);
void save_grid_file(const VoxelGrid& grid, const std::string& path);
VoxelGrid load_grid(std::istream& in);
VoxelGrid load_grid_file(const std::string& path);

}  // namespace cranempc
