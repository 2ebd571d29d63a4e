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

#include "domforest/rollout.hpp"

#include "domforest/rng.hpp"

namespace domforest {

void EnvConfig::validate() const {
  if (nx < 2 || ny < 2) throw std::invalid_argument("env: grid must be at least 2x2");
  if (sim_steps_per_control < 1) throw std::invalid_argument("env: sim_steps_per_control must be >= 1");
  sim.validate();
  camera.validate();
  features.validate();
  noise.validate();
  human.validate();
}

GraspAction ForestController::act(const StepContext& ctx) {
  if (!ctx.features) return ctx.robot;
  const Prediction p = forest_->predict(*ctx.features, ctx.task);
  if (p.degraded()) ++degraded_;
  return p.action;
}

Environment::Environment(const EnvConfig& cfg, std::shared_ptr<const FeatureExtractor> extractor, TaskSpec task,
                         std::uint64_t seed)
    : cfg_(cfg),
      extractor_(std::move(extractor)),
      task_(task),
      seed_(seed),
      human_(cfg.human, derive_seed(seed, 0x68756d61)) {
  cfg_.validate();
  task_.validate();
  auto [mesh, state] = make_cloth(cfg_.nx, cfg_.ny);
  mesh_ = std::move(mesh);
  state_ = std::move(state);
}

DepthImage Environment::render() const { return render_depth(state_, mesh_, cfg_.camera); }

Environment::Observation Environment::observe() {
  Observation obs;
  obs.hands = hand_positions(state_, mesh_);
  obs.robot = robot_positions(state_, mesh_);
  obs.expert = expert_action(task_, obs.hands);
  DepthImage img = render();
  if (!cfg_.noise.is_zero()) img = apply_noise(img, cfg_.noise, derive_seed(seed_, 0x6e6f6973, step_));
  try {
    obs.features = extractor_->extract(img);
  } catch (const AlignmentError&) {
    obs.features.reset();
  }
  return obs;
}

void Environment::advance(const GraspAction& target) {
  HandPair hands = hand_positions(state_, mesh_);
  for (int s = 0; s < cfg_.sim_steps_per_control; ++s) {
    hands = human_.step(hands, cfg_.sim.dt);
    state_ = step(state_, mesh_, cfg_.sim, target, hands);
    record(target);
  }
  ++step_;
}

void Environment::advance_with_hands(const GraspAction& target, const HandPair& hands_target, int sim_steps) {
  HandPair hands = hand_positions(state_, mesh_);
  const double max_step = cfg_.sim.human_speed_limit * cfg_.sim.dt;
  const int steps = sim_steps > 0 ? sim_steps : cfg_.sim_steps_per_control;
  for (int s = 0; s < steps; ++s) {
    hands = step_hands_toward(hands, hands_target, max_step);
    state_ = step(state_, mesh_, cfg_.sim, target, hands);
    record(target);
  }
  ++step_;
}

void Environment::record(const GraspAction& target) {
  if (recording_) trajectory_.push_back({state_.time, corner_positions(state_, mesh_), target});
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records) {
  const auto old = out.precision(17);
  out << "time,v0x,v0y,v0z,v1x,v1y,v1z,v2x,v2y,v2z,v3x,v3y,v3z,t0x,t0y,t0z,t1x,t1y,t1z\n";
  for (const auto& r : records) {
    out << r.time;
    for (const Vec3* v : {&r.corners.v0, &r.corners.v1, &r.corners.v2, &r.corners.v3}) {
      out << ',' << v->x() << ',' << v->y() << ',' << v->z();
    }
    for (double t : r.target.values) out << ',' << t;
    out << '\n';
  }
  out.precision(old);
}

}  // namespace domforest
