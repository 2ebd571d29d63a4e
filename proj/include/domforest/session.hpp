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

#include "domforest/baselines.hpp"
#include "domforest/rollout.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace domforest {

/// Snapshot broadcast to clients after every tick.
struct SessionFrame {
  std::uint64_t tick = 0;
  int grid_nx = 0;  // dimensions of the transported vertex grid
  int grid_ny = 0;
  bool full_grid = true;
  std::vector<Vec3> vertices;
  Corners corners;
  GraspAction action;
  GraspAction expert;
  double error = 0.0;  // squared action distance divided by the action dimension
  TaskKind task = TaskKind::Straight;
  std::string controller;
  bool noise_active = false;
  bool features_ok = true;
};

struct SessionConfig {
  EnvConfig env;
  double tick_hz = 30.0;
  int max_transport_grid = 32;
  std::uint64_t seed = 1;
};

/// Indices of the vertex grid kept when an nx-by-ny grid is reduced to at most `limit` per side.
/// Both extremes are always kept so the corners survive decimation.
std::vector<int> decimate_axis(int n, int limit);

/// Copy of `full` with the vertex grid reduced to at most `limit` vertices per side.
SessionFrame decimate_frame(const SessionFrame& full, int limit);

/// Serializes a frame as a self-describing `frame` message.
std::string frame_to_json(const SessionFrame& f);

/// Interactive simulation state behind the live server. Owns the environment; every method
/// must be called from the simulation thread. Client ids are opaque integers assigned by
/// the transport.
class Session {
 public:
  struct Reply {
    int client = 0;
    std::string text;
  };

  Session(SessionConfig cfg, std::shared_ptr<const RandomForest> forest);

  void add_controller(std::unique_ptr<Controller> controller);
  std::vector<std::string> controller_names() const;

  /// Registers a client; the first client without a current driver becomes the driver.
  /// Returns the `role` message for that client.
  std::string connect(int client);
  void disconnect(int client);
  std::optional<int> driver() const { return driver_; }
  bool wants_full_grid(int client) const;

  /// Parses and applies one client message. Returns error or acknowledgement messages.
  std::vector<Reply> handle(int client, const std::string& text);

  /// Advances one tick and returns the frame with the complete vertex grid.
  SessionFrame tick();

  const HandPair& hand_target() const { return hands_target_; }
  const std::string& active_controller() const { return active_; }
  TaskKind task() const { return task_; }
  const Environment& environment() const { return env_; }
  int sim_steps_per_tick() const { return steps_per_tick_; }
  double tick_hz() const { return cfg_.tick_hz; }
  int max_transport_grid() const { return cfg_.max_transport_grid; }

  /// Projects a requested hand pair onto the admissible set (separation bound, minimum
  /// x-gap, midpoint inside the workspace box).
  static HandPair sanitize_hands(const HandPair& requested, const HumanMotionParams& limits);

 private:
  std::string error_message(const std::string& what) const;

  SessionConfig cfg_;
  std::shared_ptr<const FeatureExtractor> extractor_;
  Environment env_;
  std::map<std::string, std::unique_ptr<Controller>> controllers_;
  std::string active_ = "expert";
  TaskKind task_ = TaskKind::Straight;
  NoiseSpec noise_;
  HandPair hands_target_;
  std::uint64_t tick_ = 0;
  int steps_per_tick_ = 1;
  std::optional<int> driver_;
  std::map<int, bool> clients_;  // client -> full-grid preference
};

}  // namespace domforest
