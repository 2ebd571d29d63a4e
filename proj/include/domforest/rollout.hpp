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

#include "domforest/cloth.hpp"
#include "domforest/expert.hpp"
#include "domforest/features.hpp"
#include "domforest/forest.hpp"
#include "domforest/observation.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <memory>
#include <optional>
#include <string>

namespace domforest {

struct EnvConfig {
  int nx = 21;
  int ny = 24;
  SimParams sim;
  CameraModel camera;
  FeatureConfig features;
  NoiseSpec noise;
  HumanMotionParams human;
  int sim_steps_per_control = 10;

  double control_period() const { return sim.dt * sim_steps_per_control; }
  void validate() const;
};

/// What a controller sees at one control step.
struct StepContext {
  const FeatureVector* features = nullptr;  // null when the observation had no foreground
  HandPair hands;
  GraspAction robot;
  GraspAction expert;
  int task = 0;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual GraspAction act(const StepContext& ctx) = 0;
};

class ExpertController final : public Controller {
 public:
  std::string name() const override { return "expert"; }
  GraspAction act(const StepContext& ctx) override { return ctx.expert; }
};

/// Forest policy; holds the robot still when the observation is unusable.
class ForestController final : public Controller {
 public:
  explicit ForestController(std::shared_ptr<const RandomForest> forest) : forest_(std::move(forest)) {}
  std::string name() const override { return "forest"; }
  GraspAction act(const StepContext& ctx) override;
  std::size_t degraded() const { return degraded_; }

 private:
  std::shared_ptr<const RandomForest> forest_;
  std::size_t degraded_ = 0;
};

/// Wraps any feature-to-action predictor.
class FunctionController final : public Controller {
 public:
  using Fn = std::function<GraspAction(std::span<const double>, int task)>;
  FunctionController(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  GraspAction act(const StepContext& ctx) override {
    return ctx.features ? fn_(*ctx.features, ctx.task) : ctx.robot;
  }

 private:
  std::string name_;
  Fn fn_;
};

/// Per simulation step: time, the four corners after the step and the commanded robot target.
struct TrajectoryRecord {
  double time = 0.0;
  Corners corners;
  GraspAction target;
};

/// Comma-separated dump with a header row.
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records);

/// One simulated episode: cloth, camera, random human and the task expert.
class Environment {
 public:
  struct Observation {
    std::optional<FeatureVector> features;
    HandPair hands;
    GraspAction robot;
    GraspAction expert;
  };

  Environment(const EnvConfig& cfg, std::shared_ptr<const FeatureExtractor> extractor, TaskSpec task,
              std::uint64_t seed);

  Observation observe();
  DepthImage render() const;
  /// Holds `target` for one control period while the human walks.
  void advance(const GraspAction& target);

  const ClothMesh& mesh() const { return mesh_; }
  const ClothState& state() const { return state_; }
  const TaskSpec& task() const { return task_; }
  void set_task(const TaskSpec& task) { task_ = task; }
  void set_noise(const NoiseSpec& noise) { cfg_.noise = noise; }
  const EnvConfig& config() const { return cfg_; }
  HumanMotionModel& human() { return human_; }
  int control_step() const { return step_; }
  bool human_finished() const { return human_.finished(); }

  /// Drives the human corners toward externally supplied targets instead of the random model.
  /// `sim_steps` <= 0 means one full control period.
  void advance_with_hands(const GraspAction& target, const HandPair& hands_target, int sim_steps = 0);

  void set_recording(bool on) { recording_ = on; }
  const std::vector<TrajectoryRecord>& trajectory() const { return trajectory_; }

 private:
  void record(const GraspAction& target);

  EnvConfig cfg_;
  std::shared_ptr<const FeatureExtractor> extractor_;
  TaskSpec task_;
  std::uint64_t seed_;
  ClothMesh mesh_;
  ClothState state_;
  HumanMotionModel human_;
  int step_ = 0;
  bool recording_ = false;
  std::vector<TrajectoryRecord> trajectory_;
};

}  // namespace domforest
