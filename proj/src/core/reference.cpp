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

#include "core/reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace cranempc {

namespace {

// Clamped cubic spline through (t_i, y_i) with zero end velocities: solves
// the standard tridiagonal moment system for the knot second derivatives.
std::vector<double> solve_moments(const std::vector<double>& t,
                                  const std::vector<double>& y) {
  const int n = int(t.size());
  std::vector<double> a(static_cast<size_t>(n));
  std::vector<double> b(static_cast<size_t>(n));
  std::vector<double> c(static_cast<size_t>(n));
  std::vector<double> r(static_cast<size_t>(n));
  const auto h = [&](int i) { return t[size_t(i + 1)] - t[size_t(i)]; };
  const auto slope = [&](int i) {
    return (y[size_t(i + 1)] - y[size_t(i)]) / h(i);
  };
  b[0] = h(0) / 3.0;
  c[0] = h(0) / 6.0;
  r[0] = slope(0);  // minus zero start velocity
  for (int i = 1; i < n - 1; ++i) {
    a[size_t(i)] = h(i - 1) / 6.0;
    b[size_t(i)] = (h(i - 1) + h(i)) / 3.0;
    c[size_t(i)] = h(i) / 6.0;
    r[size_t(i)] = slope(i) - slope(i - 1);
  }
  a[size_t(n - 1)] = h(n - 2) / 6.0;
  b[size_t(n - 1)] = h(n - 2) / 3.0;
  r[size_t(n - 1)] = -slope(n - 2);  // zero end velocity

  // Thomas algorithm.
  for (int i = 1; i < n; ++i) {
    const double m = a[size_t(i)] / b[size_t(i - 1)];
    b[size_t(i)] -= m * c[size_t(i - 1)];
    r[size_t(i)] -= m * r[size_t(i - 1)];
  }
  std::vector<double> moments(static_cast<size_t>(n));
  moments[size_t(n - 1)] = r[size_t(n - 1)] / b[size_t(n - 1)];
  for (int i = n - 2; i >= 0; --i)
    moments[size_t(i)] =
        (r[size_t(i)] - c[size_t(i)] * moments[size_t(i + 1)]) / b[size_t(i)];
  return moments;
}

struct PiecePeaks {
  double max_velocity;
  double max_acceleration;
};

PiecePeaks piece_peaks(const std::array<double, 4>& c, double h) {
  // velocity c1 + 2 c2 s + 3 c3 s^2: extrema at the ends or the vertex.
  double vmax = std::max(std::abs(c[1]),
                         std::abs(c[1] + 2.0 * c[2] * h + 3.0 * c[3] * h * h));
  if (std::abs(c[3]) > 0.0) {
    const double s_star = -c[2] / (3.0 * c[3]);
    if (s_star > 0.0 && s_star < h)
      vmax = std::max(vmax, std::abs(c[1] + 2.0 * c[2] * s_star + 3.0 * c[3] * s_star * s_star));
  }
  // acceleration 2 c2 + 6 c3 s is linear: ends only.
  const double amax =
      std::max(std::abs(2.0 * c[2]), std::abs(2.0 * c[2] + 6.0 * c[3] * h));
  return {vmax, amax};
}

}  // namespace

ReferenceSpline plan_reference(const std::vector<Vec5>& waypoints,
                               const Vec5& velocity_limit,
                               const Vec5& acceleration_limit) {
  if (waypoints.empty())
    throw std::invalid_argument("reference needs at least one waypoint");
  if ((velocity_limit.array() <= 0.0).any() || (acceleration_limit.array() <= 0.0).any())
    throw std::invalid_argument("reference limits must be positive");
  for (const Vec5& w : waypoints)
    if (!w.allFinite()) throw std::invalid_argument("waypoints must be finite");

  ReferenceSpline spline;
  spline.values_ = waypoints;
  if (waypoints.size() == 1) {
    spline.knots_ = {0.0};
    return spline;
  }

  const int segments = int(waypoints.size()) - 1;

  // Initial durations from the zero-end-velocity single-segment bounds
  // (peak velocity 1.5 d/h, peak acceleration 6 d/h^2), then uniform time
  // scaling against the exact per-piece peaks of the coupled spline.
  std::vector<double> h(static_cast<size_t>(segments));
  for (int i = 0; i < segments; ++i) {
    double hi = 1e-3;
    for (int j = 0; j < kNumActuated; ++j) {
      const double d = std::abs(waypoints[size_t(i + 1)][j] - waypoints[size_t(i)][j]);
      hi = std::max(hi, 1.5 * d / velocity_limit[j]);
      hi = std::max(hi, std::sqrt(6.0 * d / acceleration_limit[j]));
    }
    h[size_t(i)] = hi;
  }

  for (int pass = 0; pass < 24; ++pass) {
    std::vector<double> t(static_cast<size_t>(segments) + 1);
    t[0] = 0.0;
    for (int i = 0; i < segments; ++i) t[size_t(i + 1)] = t[size_t(i)] + h[size_t(i)];

    spline.knots_ = t;
    spline.coeffs_.assign(size_t(segments), {Vec5::Zero(), Vec5::Zero(),
                                             Vec5::Zero(), Vec5::Zero()});
    for (int j = 0; j < kNumActuated; ++j) {
      std::vector<double> y(waypoints.size());
      for (size_t i = 0; i < waypoints.size(); ++i) y[i] = waypoints[i][j];
      const std::vector<double> m = solve_moments(t, y);
      for (int i = 0; i < segments; ++i) {
        const double hi = h[size_t(i)];
        const double mi = m[size_t(i)], mi1 = m[size_t(i + 1)];
        auto& c = spline.coeffs_[size_t(i)];
        c[0][j] = y[size_t(i)];
        c[1][j] = (y[size_t(i + 1)] - y[size_t(i)]) / hi - hi * (2.0 * mi + mi1) / 6.0;
        c[2][j] = mi / 2.0;
        c[3][j] = (mi1 - mi) / (6.0 * hi);
      }
    }

    double ratio = 1.0;
    for (int i = 0; i < segments; ++i)
      for (int j = 0; j < kNumActuated; ++j) {
        const std::array<double, 4> cj = {
            spline.coeffs_[size_t(i)][0][j], spline.coeffs_[size_t(i)][1][j],
            spline.coeffs_[size_t(i)][2][j], spline.coeffs_[size_t(i)][3][j]};
        const PiecePeaks peaks = piece_peaks(cj, h[size_t(i)]);
        ratio = std::max(ratio, peaks.max_velocity / velocity_limit[j]);
        ratio = std::max(ratio, std::sqrt(peaks.max_acceleration / acceleration_limit[j]));
      }
    if (ratio <= 1.0 + 1e-9) break;
    for (double& hi : h) hi *= ratio * 1.001;
  }
  return spline;
}

Vec5 ReferenceSpline::position(double tau) const {
  if (values_.empty()) return Vec5::Zero();
  if (values_.size() == 1 || tau <= knots_.front()) return values_.front();
  if (tau >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), tau);
  const int i = int(it - knots_.begin()) - 1;
  const double s = tau - knots_[size_t(i)];
  const auto& c = coeffs_[size_t(i)];
  return c[0] + s * (c[1] + s * (c[2] + s * c[3]));
}

Vec5 ReferenceSpline::velocity(double tau) const {
  if (values_.size() <= 1 || tau < knots_.front() || tau > knots_.back())
    return Vec5::Zero();
  const int last = int(knots_.size()) - 1;
  int i;
  if (tau >= knots_[size_t(last)]) {
    i = last - 1;
  } else {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), tau);
    i = int(it - knots_.begin()) - 1;
  }
  const double s = tau - knots_[size_t(i)];
  const auto& c = coeffs_[size_t(i)];
  return c[1] + s * (2.0 * c[2] + s * 3.0 * c[3]);
}

}  // namespace cranempc
