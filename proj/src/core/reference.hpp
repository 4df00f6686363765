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

#include <vector>

#include "core/types.hpp"

namespace cranempc {

// Cubic-spline reference for the five actuated joints, parameterized by the
// progress variable tau (seconds at nominal progress). Zero end velocities;
// evaluation outside the domain holds the endpoint values. Obstacles are
// deliberately ignored here: collision handling is the controller's job.
class ReferenceSpline {
 public:
  ReferenceSpline() = default;

  double start_time() const { return knots_.empty() ? 0.0 : knots_.front(); }
  double end_time() const { return knots_.empty() ? 0.0 : knots_.back(); }
  double duration() const { return end_time() - start_time(); }
  int num_waypoints() const { return int(values_.size()); }
  const std::vector<double>& knot_times() const { return knots_; }
  const Vec5& waypoint(int i) const { return values_[size_t(i)]; }

  Vec5 position(double tau) const;
  Vec5 velocity(double tau) const;  // zero outside the domain

 private:
  friend ReferenceSpline plan_reference(const std::vector<Vec5>&, const Vec5&,
                                        const Vec5&);
  std::vector<double> knots_;            // strictly increasing, size K+1
  std::vector<Vec5> values_;             // waypoints, size K+1
  // Per segment i and joint j: q(s) = c0 + c1 s + c2 s^2 + c3 s^3, s local.
  std::vector<std::array<Vec5, 4>> coeffs_;
};

// Builds a C^2 cubic spline through the waypoints with zero start and end
// velocity, scaling segment durations until the per-piece peak velocity and
// acceleration respect the limits. Throws on an empty waypoint list or
// non-positive limits.
ReferenceSpline plan_reference(const std::vector<Vec5>& waypoints,
                               const Vec5& velocity_limit,
                               const Vec5& acceleration_limit);

}  // namespace cranempc
