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

#include "core/edf_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cranempc {

namespace {

constexpr std::int64_t kNoSite = std::numeric_limits<std::int64_t>::max() / 4;

double center_distance(const Eigen::Vector3i& a, const Eigen::Vector3i& b,
                       double resolution) {
  const std::int64_t dx = a.x() - b.x();
  const std::int64_t dy = a.y() - b.y();
  const std::int64_t dz = a.z() - b.z();
  return resolution * std::sqrt(double(dx * dx + dy * dy + dz * dz));
}

// Lower envelope of the parabolas (i - c)^2 + f[c] over integer i in [0, n).
// All bookkeeping uses integer-exact rational comparisons, so the winning
// site per cell attains the exact minimum. winner[i] = -1 when no site exists.
void envelope_1d(int n, const std::int64_t* f, std::int32_t* winner,
                 std::vector<std::int32_t>& v, std::vector<std::int64_t>& zn,
                 std::vector<std::int64_t>& zd) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kNoSite) continue;
    std::int64_t num = 0, den = 1;
    while (true) {
      if (k < 0) {
        k = 0;
        v[0] = q;
        break;
      }
      const std::int64_t vk = v[k];
      num = f[q] + std::int64_t(q) * q - f[vk] - vk * vk;
      den = 2 * (q - vk);
      const bool pop = k > 0 && num * zd[k] <= zn[k] * den;
      if (pop) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      zn[k] = num;
      zd[k] = den;
      break;
    }
  }
  if (k < 0) {
    std::fill(winner, winner + n, -1);
    return;
  }
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    while (idx < k && zn[idx + 1] <= std::int64_t(i) * zd[idx + 1]) ++idx;
    winner[i] = v[idx];
  }
}

}  // namespace

VoxelGrid::VoxelGrid(const Vec3& origin_, double resolution_,
                     const Eigen::Vector3i& dims_) {
  if (!(resolution_ > 0.0)) throw std::invalid_argument("voxel resolution must be positive");
  if (dims_.minCoeff() < 1) throw std::invalid_argument("grid dims must be at least 1");
  const std::int64_t n = std::int64_t(dims_.x()) * dims_.y() * dims_.z();
  if (n > std::numeric_limits<int>::max() / 2)
    throw std::invalid_argument("grid is too large");
  origin = origin_;
  resolution = resolution_;
  dims = dims_;
  occupancy.assign(size_t(n), 0);
}

Eigen::Vector3i VoxelGrid::voxel_of(int linear) const {
  const int i = linear % dims.x();
  const int j = (linear / dims.x()) % dims.y();
  const int k = linear / (dims.x() * dims.y());
  return {i, j, k};
}

Vec3 VoxelGrid::center(int i, int j, int k) const {
  return origin + resolution * Vec3(i + 0.5, j + 0.5, k + 0.5);
}

Vec3 VoxelGrid::center(int linear) const {
  const auto v = voxel_of(linear);
  return center(v.x(), v.y(), v.z());
}

std::vector<int> VoxelGrid::set_box_obstacle(const Vec3& min_corner,
                                             const Vec3& max_corner, bool occ) {
  if (!min_corner.allFinite() || !max_corner.allFinite())
    throw std::invalid_argument("obstacle box corners must be finite");
  if ((min_corner.array() > max_corner.array()).any())
    throw std::invalid_argument("obstacle box min corner exceeds max corner");

  // Voxel centers inside the closed box: center = origin + res*(i+1/2).
  Eigen::Vector3i lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = int(std::ceil((min_corner[a] - origin[a]) / resolution - 0.5 - 1e-12));
    hi[a] = int(std::floor((max_corner[a] - origin[a]) / resolution - 0.5 + 1e-12));
    lo[a] = std::max(lo[a], 0);
    hi[a] = std::min(hi[a], dims[a] - 1);
  }
  std::vector<int> changed;
  if ((lo.array() > hi.array()).any()) return changed;
  const std::uint8_t value = occ ? 1 : 0;
  for (int k = lo.z(); k <= hi.z(); ++k)
    for (int j = lo.y(); j <= hi.y(); ++j)
      for (int i = lo.x(); i <= hi.x(); ++i) {
        const int idx = linear_index(i, j, k);
        if (occupancy[idx] != value) {
          occupancy[idx] = value;
          changed.push_back(idx);
        }
      }
  return changed;
}

// ---------------------------------------------------------------------------

VoxelEdf VoxelEdf::compute(VoxelGrid grid, double d_max) {
  if (!(d_max > 0.0)) throw std::invalid_argument("d_max must be positive");
  VoxelEdf edf;
  edf.grid_ = std::move(grid);
  edf.d_max_ = d_max;
  edf.dist_.assign(size_t(edf.grid_.num_voxels()), d_max);
  edf.coc_.assign(size_t(edf.grid_.num_voxels()), -1);
  edf.recompute_region(Eigen::Vector3i::Zero(), edf.grid_.dims - Eigen::Vector3i::Ones(),
                       /*sites_from_occupancy=*/true, {}, /*lower_only=*/false);
  return edf;
}

VoxelEdf VoxelEdf::compute_bruteforce(const VoxelGrid& grid, double d_max) {
  if (!(d_max > 0.0)) throw std::invalid_argument("d_max must be positive");
  VoxelEdf edf;
  edf.grid_ = grid;
  edf.d_max_ = d_max;
  const int n = grid.num_voxels();
  edf.dist_.assign(size_t(n), d_max);
  edf.coc_.assign(size_t(n), -1);
  std::vector<Eigen::Vector3i> occupied;
  std::vector<int> occupied_idx;
  for (int idx = 0; idx < n; ++idx)
    if (grid.occupied(idx)) {
      occupied.push_back(grid.voxel_of(idx));
      occupied_idx.push_back(idx);
    }
  if (occupied.empty()) return edf;
  for (int idx = 0; idx < n; ++idx) {
    const Eigen::Vector3i v = grid.voxel_of(idx);
    std::int64_t best_sq = std::numeric_limits<std::int64_t>::max();
    int best_site = -1;
    for (size_t s = 0; s < occupied.size(); ++s) {
      const std::int64_t dx = v.x() - occupied[s].x();
      const std::int64_t dy = v.y() - occupied[s].y();
      const std::int64_t dz = v.z() - occupied[s].z();
      const std::int64_t dsq = dx * dx + dy * dy + dz * dz;
      if (dsq < best_sq) {
        best_sq = dsq;
        best_site = occupied_idx[s];
      }
    }
    const double d = grid.resolution * std::sqrt(double(best_sq));
    if (d >= d_max) {
      edf.dist_[idx] = d_max;
      edf.coc_[idx] = -1;
    } else {
      edf.dist_[idx] = d;
      edf.coc_[idx] = best_site;
    }
  }
  return edf;
}

void VoxelEdf::recompute_region(const Eigen::Vector3i& lo, const Eigen::Vector3i& hi,
                                bool sites_from_occupancy,
                                const std::vector<int>& site_list, bool lower_only,
                                const std::vector<int>* apply_only) {
  const Eigen::Vector3i rdims = hi - lo + Eigen::Vector3i::Ones();
  const int rx = rdims.x(), ry = rdims.y(), rz = rdims.z();
  const std::int64_t rn = std::int64_t(rx) * ry * rz;
  const auto local = [&](int i, int j, int k) {
    return size_t(i + rx * (j + std::int64_t(ry) * k));
  };

  std::vector<std::uint8_t> mask;
  if (apply_only) {
    mask.assign(size_t(rn), 0);
    for (int idx : *apply_only) {
      const Eigen::Vector3i v = grid_.voxel_of(idx);
      mask[local(v.x() - lo.x(), v.y() - lo.y(), v.z() - lo.z())] = 1;
    }
  }

  std::vector<std::uint8_t> site(size_t(rn), 0);
  bool any_site = false;
  if (sites_from_occupancy) {
    for (int k = 0; k < rz; ++k)
      for (int j = 0; j < ry; ++j)
        for (int i = 0; i < rx; ++i) {
          const bool s = grid_.occupied(grid_.linear_index(lo.x() + i, lo.y() + j, lo.z() + k));
          site[local(i, j, k)] = s ? 1 : 0;
          any_site |= s;
        }
  } else {
    for (int idx : site_list) {
      const Eigen::Vector3i v = grid_.voxel_of(idx);
      if ((v.array() < lo.array()).any() || (v.array() > hi.array()).any()) continue;
      site[local(v.x() - lo.x(), v.y() - lo.y(), v.z() - lo.z())] = 1;
      any_site = true;
    }
  }

  const auto apply = [&](int i, int j, int k, double d, int site_idx) {
    if (apply_only && !mask[local(i, j, k)]) return;
    const int idx = grid_.linear_index(lo.x() + i, lo.y() + j, lo.z() + k);
    if (lower_only) {
      if (d < dist_[idx]) {
        dist_[idx] = d;
        coc_[idx] = std::int32_t(site_idx);
      }
    } else {
      if (d >= d_max_ || site_idx < 0) {
        dist_[idx] = d_max_;
        coc_[idx] = -1;
      } else {
        dist_[idx] = d;
        coc_[idx] = std::int32_t(site_idx);
      }
    }
  };

  if (!any_site) {
    if (!lower_only)
      for (int k = 0; k < rz; ++k)
        for (int j = 0; j < ry; ++j)
          for (int i = 0; i < rx; ++i) apply(i, j, k, d_max_, -1);
    return;
  }

  // Separable exact feature transform: per-axis nearest-site scan along x,
  // then parabola envelopes along y and z carrying the winning site indices.
  std::vector<std::int64_t> d1(static_cast<size_t>(rn));
  std::vector<std::int64_t> d2(static_cast<size_t>(rn));
  std::vector<std::int32_t> sx(static_cast<size_t>(rn));
  std::vector<std::int32_t> sy(static_cast<size_t>(rn));

  for (int k = 0; k < rz; ++k)
    for (int j = 0; j < ry; ++j) {
      int last = -1;
      for (int i = 0; i < rx; ++i) {
        const size_t c = local(i, j, k);
        if (site[c]) last = i;
        sx[c] = last;
        d1[c] = last < 0 ? kNoSite : std::int64_t(i - last) * (i - last);
      }
      int next = -1;
      for (int i = rx - 1; i >= 0; --i) {
        const size_t c = local(i, j, k);
        if (site[c]) next = i;
        if (next >= 0) {
          const std::int64_t d = std::int64_t(next - i) * (next - i);
          if (d < d1[c]) {
            d1[c] = d;
            sx[c] = next;
          }
        }
      }
    }

  const int max_dim = std::max({rx, ry, rz});
  std::vector<std::int64_t> f(static_cast<size_t>(max_dim));
  std::vector<std::int64_t> zn(static_cast<size_t>(max_dim) + 1);
  std::vector<std::int64_t> zd(static_cast<size_t>(max_dim) + 1);
  std::vector<std::int32_t> v(static_cast<size_t>(max_dim));
  std::vector<std::int32_t> winner(static_cast<size_t>(max_dim));

  for (int k = 0; k < rz; ++k)
    for (int i = 0; i < rx; ++i) {
      for (int j = 0; j < ry; ++j) f[size_t(j)] = d1[local(i, j, k)];
      envelope_1d(ry, f.data(), winner.data(), v, zn, zd);
      for (int j = 0; j < ry; ++j) {
        const size_t c = local(i, j, k);
        const int w = winner[size_t(j)];
        sy[c] = w;
        d2[c] = w < 0 ? kNoSite
                      : d1[local(i, w, k)] + std::int64_t(j - w) * (j - w);
      }
    }

  for (int j = 0; j < ry; ++j)
    for (int i = 0; i < rx; ++i) {
      for (int k = 0; k < rz; ++k) f[size_t(k)] = d2[local(i, j, k)];
      envelope_1d(rz, f.data(), winner.data(), v, zn, zd);
      for (int k = 0; k < rz; ++k) {
        const int wz = winner[size_t(k)];
        if (wz < 0) {
          apply(i, j, k, d_max_, -1);
          continue;
        }
        const int wy = sy[local(i, j, wz)];
        const int wx = sx[local(i, wy, wz)];
        const Eigen::Vector3i cell(lo.x() + i, lo.y() + j, lo.z() + k);
        const Eigen::Vector3i site_cell(lo.x() + wx, lo.y() + wy, lo.z() + wz);
        const double d = center_distance(cell, site_cell, grid_.resolution);
        apply(i, j, k, std::min(d, d_max_),
              grid_.linear_index(site_cell.x(), site_cell.y(), site_cell.z()));
      }
    }
}

void VoxelEdf::update_incremental(const std::vector<int>& changed) {
  if (changed.empty()) return;
  std::vector<int> added, removed;
  for (int idx : changed)
    (grid_.occupied(idx) ? added : removed).push_back(idx);

  const int radius = int(std::ceil(d_max_ / grid_.resolution)) + 1;
  const auto inflate = [&](Eigen::Vector3i lo, Eigen::Vector3i hi, int r) {
    lo -= Eigen::Vector3i::Constant(r);
    hi += Eigen::Vector3i::Constant(r);
    lo = lo.cwiseMax(Eigen::Vector3i::Zero());
    hi = hi.cwiseMin(grid_.dims - Eigen::Vector3i::Ones());
    return std::pair{lo, hi};
  };
  const auto bbox = [&](const std::vector<int>& voxels) {
    Eigen::Vector3i lo = grid_.dims, hi = Eigen::Vector3i::Constant(-1);
    for (int idx : voxels) {
      const Eigen::Vector3i v = grid_.voxel_of(idx);
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return std::pair{lo, hi};
  };

  if (!removed.empty()) {
    // Raise: voxels whose recorded closest obstacle vanished are stale; their
    // new values can only come from obstacles within the truncation radius.
    const auto [rlo, rhi] = bbox(removed);
    const auto [slo, shi] = inflate(rlo, rhi, radius);
    std::vector<int> stale;
    Eigen::Vector3i alo = grid_.dims, ahi = Eigen::Vector3i::Constant(-1);
    for (int k = slo.z(); k <= shi.z(); ++k)
      for (int j = slo.y(); j <= shi.y(); ++j)
        for (int i = slo.x(); i <= shi.x(); ++i) {
          const int idx = grid_.linear_index(i, j, k);
          const std::int32_t site = coc_[idx];
          if (site >= 0 && !grid_.occupied(site)) {
            stale.push_back(idx);
            alo = alo.cwiseMin(Eigen::Vector3i(i, j, k));
            ahi = ahi.cwiseMax(Eigen::Vector3i(i, j, k));
          }
        }
    if (!stale.empty()) {
      const auto [qlo, qhi] = inflate(alo, ahi, radius);
      // Every obstacle within the truncation radius of a stale voxel lies
      // inside the inflated neighborhood, so recomputing against current
      // occupancy is exact for exactly the stale set.
      recompute_region(qlo, qhi, /*sites_from_occupancy=*/true, {},
                       /*lower_only=*/false, &stale);
    }
  }

  if (!added.empty()) {
    // Lower: distances can only shrink, and only within the truncation
    // radius of the new obstacles.
    const auto [alo, ahi] = bbox(added);
    const auto [slo, shi] = inflate(alo, ahi, radius);
    recompute_region(slo, shi, /*sites_from_occupancy=*/false, added,
                     /*lower_only=*/true);
  }
}

std::vector<int> VoxelEdf::apply_box_obstacle(const Vec3& min_corner,
                                              const Vec3& max_corner, bool occupied) {
  std::vector<int> changed = grid_.set_box_obstacle(min_corner, max_corner, occupied);
  update_incremental(changed);
  return changed;
}

double VoxelEdf::query_distance(const Vec3& p) const {
  const Vec3 hi = grid_.origin + grid_.resolution * grid_.dims.cast<double>();
  if ((p.array() < grid_.origin.array()).any() || (p.array() > hi.array()).any())
    return d_max_;
  int i0[3], i1[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - grid_.origin[a]) / grid_.resolution - 0.5;
    int c = int(std::floor(u));
    c = std::clamp(c, 0, std::max(grid_.dims[a] - 2, 0));
    i0[a] = c;
    i1[a] = std::min(c + 1, grid_.dims[a] - 1);
    t[a] = std::clamp(u - c, 0.0, 1.0);
  }
  double value = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) *
                         (dz ? t[2] : 1.0 - t[2]);
        if (w == 0.0) continue;
        value += w * dist_[grid_.linear_index(dx ? i1[0] : i0[0], dy ? i1[1] : i0[1],
                                              dz ? i1[2] : i0[2])];
      }
  return value;
}

Vec3 VoxelEdf::query_gradient(const Vec3& p) const {
  const Vec3 hi = grid_.origin + grid_.resolution * grid_.dims.cast<double>();
  if ((p.array() < grid_.origin.array()).any() || (p.array() > hi.array()).any())
    return Vec3::Zero();
  int i0[3], i1[3];
  double t[3];
  bool clamped[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - grid_.origin[a]) / grid_.resolution - 0.5;
    int c = int(std::floor(u));
    c = std::clamp(c, 0, std::max(grid_.dims[a] - 2, 0));
    i0[a] = c;
    i1[a] = std::min(c + 1, grid_.dims[a] - 1);
    const double raw = u - c;
    t[a] = std::clamp(raw, 0.0, 1.0);
    clamped[a] = raw < 0.0 || raw > 1.0 || grid_.dims[a] == 1;
  }
  const auto corner = [&](int dx, int dy, int dz) {
    return dist_[grid_.linear_index(dx ? i1[0] : i0[0], dy ? i1[1] : i0[1],
                                    dz ? i1[2] : i0[2])];
  };
  Vec3 grad = Vec3::Zero();
  if (!clamped[0]) {
    grad.x() = (corner(1, 0, 0) - corner(0, 0, 0)) * (1 - t[1]) * (1 - t[2]) +
               (corner(1, 1, 0) - corner(0, 1, 0)) * t[1] * (1 - t[2]) +
               (corner(1, 0, 1) - corner(0, 0, 1)) * (1 - t[1]) * t[2] +
               (corner(1, 1, 1) - corner(0, 1, 1)) * t[1] * t[2];
  }
  if (!clamped[1]) {
    grad.y() = (corner(0, 1, 0) - corner(0, 0, 0)) * (1 - t[0]) * (1 - t[2]) +
               (corner(1, 1, 0) - corner(1, 0, 0)) * t[0] * (1 - t[2]) +
               (corner(0, 1, 1) - corner(0, 0, 1)) * (1 - t[0]) * t[2] +
               (corner(1, 1, 1) - corner(1, 0, 1)) * t[0] * t[2];
  }
  if (!clamped[2]) {
    grad.z() = (corner(0, 0, 1) - corner(0, 0, 0)) * (1 - t[0]) * (1 - t[1]) +
               (corner(1, 0, 1) - corner(1, 0, 0)) * t[0] * (1 - t[1]) +
               (corner(0, 1, 1) - corner(0, 1, 0)) * (1 - t[0]) * t[1] +
               (corner(1, 1, 1) - corner(1, 1, 0)) * t[0] * t[1];
  }
  return grad / grid_.resolution;
}

// ---------------------------------------------------------------------------

void save_grid(const VoxelGrid& grid, std::ostream& out) {
  out << "cranempc-voxelgrid 1\n";
  out.precision(17);
  out << "origin " << grid.origin.x() << " " << grid.origin.y() << " "
      << grid.origin.z() << "\n";
  out << "resolution " << grid.resolution << "\n";
  out << "dims " << grid.dims.x() << " " << grid.dims.y() << " " << grid.dims.z()
      << "\n";
  std::vector<int> occupied;
  for (int idx = 0; idx < grid.num_voxels(); ++idx)
    if (grid.occupied(idx)) occupied.push_back(idx);
  out << "occupied " << occupied.size() << "\n";
  for (int idx : occupied) {
    const auto v = grid.voxel_of(idx);
    out << v.x() << " " << v.y() << " " << v.z() << "\n";
  }
}

void save_grid_file(const VoxelGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open grid file for writing: " + path);
  save_grid(grid, out);
}

VoxelGrid load_grid(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "cranempc-voxelgrid" || version != 1)
    throw std::runtime_error("not a cranempc voxel grid dump");
  std::string key;
  Vec3 origin;
  double resolution = 0.0;
  Eigen::Vector3i dims;
  in >> key >> origin.x() >> origin.y() >> origin.z();
  if (key != "origin") throw std::runtime_error("grid dump: expected origin");
  in >> key >> resolution;
  if (key != "resolution") throw std::runtime_error("grid dump: expected resolution");
  in >> key >> dims.x() >> dims.y() >> dims.z();
  if (key != "dims") throw std::runtime_error("grid dump: expected dims");
  VoxelGrid grid(origin, resolution, dims);
  std::size_t count = 0;
  in >> key >> count;
  if (key != "occupied") throw std::runtime_error("grid dump: expected occupied count");
  for (std::size_t n = 0; n < count; ++n) {
    int i, j, k;
    if (!(in >> i >> j >> k)) throw std::runtime_error("grid dump: truncated voxel list");
    if (i < 0 || j < 0 || k < 0 || i >= grid.dims.x() || j >= grid.dims.y() ||
        k >= grid.dims.z())
      throw std::runtime_error("grid dump: voxel index out of range");
    grid.occupancy[grid.linear_index(i, j, k)] = 1;
  }
  return grid;
}

VoxelGrid load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file: " + path);
  return load_grid(in);
}

}  // namespace cranempc
