// Copyright 2026 The domforest Authors
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

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace domforest {

using Vec3 = Eigen::Vector3d;

inline constexpr std::size_t kActionDim = 6;
inline constexpr std::size_t kFeatureDim = 768;

/// Desired positions of the two robot-held corners, packed as (v0, v1).
struct GraspAction {
  std::array<double, kActionDim> values{};

  static GraspAction from_corners(const Vec3& v0, const Vec3& v1) {
    return GraspAction{{v0.x(), v0.y(), v0.z(), v1.x(), v1.y(), v1.z()}};
  }
  Vec3 v0() const { return {values[0], values[1], values[2]}; }
  Vec3 v1() const { return {values[3], values[4], values[5]}; }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const GraspAction&) const = default;
};

/// Squared Euclidean distance between two actions.
inline double squared_distance(const GraspAction& a, const GraspAction& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kActionDim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Positions of the two human-held corners (v2, v3).
struct HandPair {
  Vec3 v2 = Vec3::Zero();
  Vec3 v3 = Vec3::Zero();
};

enum class TaskKind : int { Straight = 0, Bend = 1, Twist = 2 };

inline std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::Straight: return "straight";
    case TaskKind::Bend: return "bend";
    case TaskKind::Twist: return "twist";
  }
  return "unknown";
}

inline TaskKind parse_task(std::string_view name) {
  if (name == "straight") return TaskKind::Straight;
  if (name == "bend") return TaskKind::Bend;
  if (name == "twist") return TaskKind::Twist;
  throw std::invalid_argument("unknown task '" + std::string(name) +
                              "' (expected straight|bend|twist)");
}

inline int task_id(TaskKind kind) { return static_cast<int>(kind); }

inline TaskKind task_from_id(int id) {
  if (id < 0 || id > 2) throw std::invalid_argument("invalid task id " + std::to_string(id));
  return static_cast<TaskKind>(id);
}

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace domforest
