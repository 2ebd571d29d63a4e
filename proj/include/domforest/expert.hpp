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

#include "domforest/rng.hpp"
#include "domforest/types.hpp"

#include <stdexcept>

namespace domforest {

class DegenerateHandsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TaskSpec {
  TaskKind kind = TaskKind::Straight;
  double straight_offset = 0.35;
  double bend_offset = 0.175;
  double twist_forward = 0.31;
  double twist_lateral = 0.15;
  Vec3 axis{0.0, 0.0, -1.0};

  static TaskSpec of(TaskKind kind) {
    TaskSpec t;
    t.kind = kind;
    return t;
  }
  void validate() const;
};

/// Closed-form target grasp for the robot given the human-held corners.
GraspAction expert_action(const TaskSpec& task, const Vec3& v2, const Vec3& v3);
inline GraspAction expert_action(const TaskSpec& task, const HandPair& hands) {
  return expert_action(task, hands.v2, hands.v3);
}

struct WorkspaceBox {
  Vec3 lo{-0.1, 0.2, -0.2};
  Vec3 hi{0.4, 0.5, 0.2};
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
  }
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(lo).cwiseMin(hi); }
};

struct HumanMotionParams {
  WorkspaceBox box;
  int waypoints = 10;
  double speed_limit = 0.1;
  double max_separation = 0.3;
  double min_separation = 0.15;
  // Minimum x-extent of (v3 - v2); keeps the hand edge from flipping over.
  double min_x_gap = 0.1;
  double perturb_sigma = 0.0;

  void validate() const;
  bool admissible(const HandPair& hands) const;
};

/// Random human hands: each hand walks toward its waypoint under a per-axis speed clamp.
/// One instance drives one rollout; the generator is owned by the model.
class HumanMotionModel {
 public:
  HumanMotionModel(HumanMotionParams params, std::uint64_t seed);

  const HumanMotionParams& params() const { return params_; }
  const HandPair& waypoint() const { return waypoint_; }
  int waypoints_reached() const { return reached_; }
  bool finished() const { return reached_ >= params_.waypoints; }

  HandPair sample_waypoint();
  void set_waypoint(const HandPair& w) { waypoint_ = w; }

  /// Advances both hands by one step of length dt.
  HandPair step(const HandPair& current, double dt);

 private:
  HumanMotionParams params_;
  Rng rng_;
  HandPair waypoint_;
  int reached_ = 0;
};

inline HandPair human_step(HumanMotionModel& model, const HandPair& current, double dt) {
  return model.step(current, dt);
}

/// Moves `from` toward `to` with each axis limited to `max_step`.
Vec3 clamp_step(const Vec3& from, const Vec3& to, double max_step);

/// Projects a hand pair onto ||v2 - v3|| <= max_separation by shrinking about the midpoint.
HandPair clamp_separation(const HandPair& hands, double max_separation);

/// Advances both hands toward `target` by the same fraction of their remaining paths, with
/// every axis of either hand moving at most `max_step`. The hand-edge vector stays a convex
/// combination of the current and target edges, so a separation bound met by both holds
/// throughout.
HandPair step_hands_toward(const HandPair& current, const HandPair& target, double max_step);

}  // namespace domforest
