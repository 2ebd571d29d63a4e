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

#include "domforest/expert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace domforest {

namespace {
constexpr double kDegenerate = 1e-6;
}

void TaskSpec::validate() const {
  if (std::abs(axis.norm() - 1.0) > 1e-12) throw std::invalid_argument("TaskSpec: axis must be a unit vector");
  if (!(straight_offset > 0 && bend_offset > 0 && twist_forward > 0 && twist_lateral > 0)) {
    throw std::invalid_argument("TaskSpec: offsets must be positive");
  }
}

GraspAction expert_action(const TaskSpec& task, const Vec3& v2, const Vec3& v3) {
  if (!v2.allFinite() || !v3.allFinite()) throw std::invalid_argument("expert_action: non-finite hand position");
  const Vec3 edge = v3 - v2;
  if (edge.norm() <= kDegenerate) throw DegenerateHandsError("expert_action: hands coincide");
  const Vec3 normal = task.axis.cross(edge);
  if (normal.norm() <= kDegenerate) throw DegenerateHandsError("expert_action: hand edge parallel to task axis");
  const Vec3 d1 = normal.normalized();

  switch (task.kind) {
    case TaskKind::Straight:
      return GraspAction::from_corners(v2 + task.straight_offset * d1, v3 + task.straight_offset * d1);
    case TaskKind::Bend:
      return GraspAction::from_corners(v2 + task.bend_offset * d1, v3 + task.bend_offset * d1);
    case TaskKind::Twist: {
      const Vec3 d2 = edge.cross(normal).normalized();
      const Vec3 base = 0.5 * (v2 + v3) + task.twist_forward * d1;
      return GraspAction::from_corners(base + task.twist_lateral * d2, base - task.twist_lateral * d2);
    }
  }
  throw std::invalid_argument("expert_action: unknown task");
}

void HumanMotionParams::validate() const {
  std::ostringstream err;
  if (!(box.lo.array() < box.hi.array()).all()) err << "workspace box lo must be below hi; ";
  if (waypoints < 1) err << "waypoints must be >= 1; ";
  if (!(speed_limit > 0)) err << "speed_limit must be > 0; ";
  if (!(max_separation > 0)) err << "max_separation must be > 0; ";
  if (!(min_separation >= 0 && min_separation <= max_separation)) err << "min_separation must lie in [0, max_separation]; ";
  if (!(min_x_gap <= max_separation)) err << "min_x_gap must not exceed max_separation; ";
  if (!(perturb_sigma >= 0)) err << "perturb_sigma must be >= 0; ";
  if (!err.str().empty()) throw std::invalid_argument("invalid human motion: " + err.str());
}

bool HumanMotionParams::admissible(const HandPair& h) const {
  const Vec3 edge = h.v3 - h.v2;
  const double sep = edge.norm();
  return box.contains(h.v2) && box.contains(h.v3) && sep <= max_separation && sep >= min_separation &&
         edge.x() >= min_x_gap;
}

Vec3 clamp_step(const Vec3& from, const Vec3& to, double max_step) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) out[a] = from[a] + std::clamp(to[a] - from[a], -max_step, max_step);
  return out;
}

HandPair clamp_separation(const HandPair& hands, double max_separation) {
  const Vec3 edge = hands.v3 - hands.v2;
  const double sep = edge.norm();
  if (sep <= max_separation) return hands;
  const Vec3 mid = 0.5 * (hands.v2 + hands.v3);
  const Vec3 half = edge * (0.5 * max_separation / sep);
  HandPair out{mid - half, mid + half};
  // Rounding can leave the result a hair above the bound.
  while ((out.v3 - out.v2).norm() > max_separation) {
    out.v2 = mid - (out.v3 - mid) * (1.0 - 1e-15);
    out.v3 = mid + (out.v3 - mid) * (1.0 - 1e-15);
  }
  return out;
}

HandPair step_hands_toward(const HandPair& current, const HandPair& target, double max_step) {
  const Vec3 r2 = target.v2 - current.v2;
  const Vec3 r3 = target.v3 - current.v3;
  const double remaining = std::max(r2.lpNorm<Eigen::Infinity>(), r3.lpNorm<Eigen::Infinity>());
  if (remaining <= max_step) return target;
  const double f = max_step / remaining;
  return {current.v2 + f * r2, current.v3 + f * r3};
}

HumanMotionModel::HumanMotionModel(HumanMotionParams params, std::uint64_t seed)
    : params_(std::move(params)), rng_(seed) {
  params_.validate();
  waypoint_ = sample_waypoint();
}

HandPair HumanMotionModel::sample_waypoint() {
  const auto& b = params_.box;
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    HandPair h;
    for (int a = 0; a < 3; ++a) {
      h.v2[a] = uniform(rng_, b.lo[a], b.hi[a]);
      h.v3[a] = uniform(rng_, b.lo[a], b.hi[a]);
    }
    if (params_.admissible(h)) return h;
  }
  throw std::runtime_error("HumanMotionModel: workspace admits no waypoint pair");
}

HandPair HumanMotionModel::step(const HandPair& current, double dt) {
  const double max_step = params_.speed_limit * dt;
  HandPair next = step_hands_toward(current, waypoint_, max_step);
  const HandPair planned = next;

  if (params_.perturb_sigma > 0) {
    std::normal_distribution<double> noise(0.0, params_.perturb_sigma);
    HandPair jittered = next;
    for (int a = 0; a < 3; ++a) {
      jittered.v2[a] += noise(rng_);
      jittered.v3[a] += noise(rng_);
    }
    jittered = clamp_separation(jittered, params_.max_separation);
    // Keep the jittered pair inside the speed bound relative to the current hands.
    next = {params_.box.clamp(clamp_step(current.v2, jittered.v2, max_step)),
            params_.box.clamp(clamp_step(current.v3, jittered.v3, max_step))};
    if ((next.v3 - next.v2).norm() > params_.max_separation) next = planned;
  }

  const double tol = 1e-9 + 3.0 * params_.perturb_sigma;
  const bool at_goal = (next.v2 - waypoint_.v2).lpNorm<Eigen::Infinity>() <= tol &&
                       (next.v3 - waypoint_.v3).lpNorm<Eigen::Infinity>() <= tol;
  if (at_goal) {
    ++reached_;
    waypoint_ = sample_waypoint();
  }
  return next;
}

}  // namespace domforest
