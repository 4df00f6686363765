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

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cranempc {

inline constexpr int kNumJoints = 7;    // 5 actuated + 2 passive pendulum axes
inline constexpr int kNumActuated = 5;
inline constexpr int kNumPassive = 2;
inline constexpr int kStateDim = 19;    // [q(7), qdot(7), qddot_actuated(5)]

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using VecState = Eigen::Matrix<double, kStateDim, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat2x5 = Eigen::Matrix<double, 2, 5>;
using Mat2x7 = Eigen::Matrix<double, 2, 7>;
using Mat3x7 = Eigen::Matrix<double, 3, 7>;
using Transform = Eigen::Isometry3d;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace cranempc
