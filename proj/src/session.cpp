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

#include "domforest/session.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace domforest {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json action_json(const GraspAction& a) { return json(std::vector<double>(a.values.begin(), a.values.end())); }

Vec3 parse_vec(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(name) + " must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(std::string(name) + " must be an array of 3 numbers");
    v[i] = j[i].get<double>();
  }
  if (!v.allFinite()) throw std::invalid_argument(std::string(name) + " must be finite");
  return v;
}

const json& require(const json& msg, const char* key) {
  auto it = msg.find(key);
  if (it == msg.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

std::vector<int> decimate_axis(int n, int limit) {
  std::vector<int> idx;
  if (n <= limit) {
    for (int i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  for (int k = 0; k < limit; ++k) {
    idx.push_back(static_cast<int>(std::lround(static_cast<double>(k) * (n - 1) / (limit - 1))));
  }
  return idx;
}

std::string frame_to_json(const SessionFrame& f) {
  json vertices = json::array();
  for (const auto& v : f.vertices) {
    vertices.push_back(v.x());
    vertices.push_back(v.y());
    vertices.push_back(v.z());
  }
  json msg = {
      {"type", "frame"},
      {"tick", f.tick},
      {"grid", {{"nx", f.grid_nx}, {"ny", f.grid_ny}, {"full", f.full_grid}}},
      {"vertex_count", f.vertices.size()},
      {"vertices", std::move(vertices)},
      {"corners", {{"v0", vec_json(f.corners.v0)}, {"v1", vec_json(f.corners.v1)},
                   {"v2", vec_json(f.corners.v2)}, {"v3", vec_json(f.corners.v3)}}},
      {"action", action_json(f.action)},
      {"expert", action_json(f.expert)},
      {"error", f.error},
      {"task", std::string(task_name(f.task))},
      {"controller", f.controller},
      {"noise", f.noise_active},
      {"features_ok", f.features_ok},
  };
  return msg.dump();
}

Session::Session(SessionConfig cfg, std::shared_ptr<const RandomForest> forest)
    : cfg_(std::move(cfg)),
      extractor_(std::make_shared<const FeatureExtractor>(cfg_.env.features)),
      env_(cfg_.env, extractor_, TaskSpec::of(TaskKind::Straight), cfg_.seed) {
  if (!(cfg_.tick_hz > 0)) throw std::invalid_argument("session: tick_hz must be positive");
  if (cfg_.max_transport_grid < 2) throw std::invalid_argument("session: max_transport_grid must be >= 2");
  steps_per_tick_ = std::max(1, static_cast<int>(std::lround(1.0 / (cfg_.tick_hz * cfg_.env.sim.dt))));
  hands_target_ = hand_positions(env_.state(), env_.mesh());
  add_controller(std::make_unique<ExpertController>());
  if (forest) add_controller(std::make_unique<ForestController>(std::move(forest)));
}

void Session::add_controller(std::unique_ptr<Controller> controller) {
  auto name = controller->name();
  controllers_[name] = std::move(controller);
}

std::vector<std::string> Session::controller_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : controllers_) names.push_back(name);
  return names;
}

std::string Session::connect(int client) {
  clients_[client] = false;
  if (!driver_) driver_ = client;
  return json{{"type", "role"}, {"role", driver_ == client ? "driver" : "viewer"}, {"controllers", controller_names()}}
      .dump();
}

void Session::disconnect(int client) {
  clients_.erase(client);
  if (driver_ == client) driver_.reset();
}

bool Session::wants_full_grid(int client) const {
  auto it = clients_.find(client);
  return it != clients_.end() && it->second;
}

std::string Session::error_message(const std::string& what) const {
  return json{{"type", "error"}, {"message", what}}.dump();
}

HandPair Session::sanitize_hands(const HandPair& requested, const HumanMotionParams& limits) {
  Vec3 edge = requested.v3 - requested.v2;
  Vec3 mid = 0.5 * (requested.v2 + requested.v3);
  const double max_sep = limits.max_separation;
  edge.x() = std::clamp(edge.x(), limits.min_x_gap, max_sep);
  const double room = std::sqrt(std::max(0.0, max_sep * max_sep - edge.x() * edge.x()));
  const double lateral = std::hypot(edge.y(), edge.z());
  if (lateral > room) {
    edge.y() *= room / lateral;
    edge.z() *= room / lateral;
  }
  mid = limits.box.clamp(mid);
  return clamp_separation({mid - 0.5 * edge, mid + 0.5 * edge}, max_sep);
}

std::vector<Session::Reply> Session::handle(int client, const std::string& text) {
  std::vector<Reply> out;
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    out.push_back({client, error_message(std::string("malformed message: ") + e.what())});
    return out;
  }
  try {
    if (!msg.is_object()) throw std::invalid_argument("message must be a JSON object");
    const auto type_it = msg.find("type");
    if (type_it == msg.end() || !type_it->is_string()) throw std::invalid_argument("message needs a string 'type'");
    const std::string type = *type_it;
    if (type == "hands") {
      if (driver_ != client) throw std::invalid_argument("hands ignored: client is not the driver");
      const HandPair requested{parse_vec(require(msg, "v2"), "v2"), parse_vec(require(msg, "v3"), "v3")};
      hands_target_ = sanitize_hands(requested, cfg_.env.human);
    } else if (type == "set_task") {
      const auto& t = require(msg, "task");
      if (!t.is_string()) throw std::invalid_argument("task must be a string");
      task_ = parse_task(t.get<std::string>());
      env_.set_task(TaskSpec::of(task_));
    } else if (type == "set_controller") {
      const auto& c = require(msg, "controller");
      if (!c.is_string()) throw std::invalid_argument("controller must be a string");
      const std::string name = c;
      if (!controllers_.count(name)) throw std::invalid_argument("controller '" + name + "' is not available");
      active_ = name;
    } else if (type == "set_noise") {
      NoiseSpec n;
      if (msg.value("enabled", true)) {
        n.depth_sigma = msg.value("depth_sigma", 0.005);
        n.occluder_count = msg.value("occluder_count", 1);
        n.dropout_prob = msg.value("dropout_prob", 0.0);
      }
      n.validate();
      noise_ = n;
      env_.set_noise(n);
    } else if (type == "set_resolution") {
      const auto& f = require(msg, "full");
      if (!f.is_boolean()) throw std::invalid_argument("full must be a boolean");
      clients_[client] = f.get<bool>();
    } else if (type == "request_driver") {
      if (!driver_) driver_ = client;
      out.push_back({client, json{{"type", "role"}, {"role", driver_ == client ? "driver" : "viewer"},
                                  {"controllers", controller_names()}}
                                 .dump()});
    } else {
      throw std::invalid_argument("unknown message type '" + type + "'");
    }
  } catch (const std::exception& e) {
    out.push_back({client, error_message(e.what())});
  }
  return out;
}

SessionFrame Session::tick() {
  const auto obs = env_.observe();
  StepContext ctx{obs.features ? &*obs.features : nullptr, obs.hands, obs.robot, obs.expert, task_id(task_)};
  Controller& controller = *controllers_.at(active_);
  const GraspAction action = controller.act(ctx);
  env_.advance_with_hands(action, hands_target_, steps_per_tick_);

  SessionFrame f;
  f.tick = ++tick_;
  f.action = action;
  f.expert = obs.expert;
  f.error = squared_distance(action, obs.expert) / static_cast<double>(kActionDim);
  f.task = task_;
  f.controller = active_;
  f.noise_active = !noise_.is_zero();
  f.features_ok = obs.features.has_value();
  f.corners = corner_positions(env_.state(), env_.mesh());
  f.grid_nx = env_.mesh().nx;
  f.grid_ny = env_.mesh().ny;
  f.vertices = env_.state().positions;
  return f;
}

SessionFrame decimate_frame(const SessionFrame& full, int limit) {
  SessionFrame out = full;
  const auto xs = decimate_axis(full.grid_nx, limit);
  const auto ys = decimate_axis(full.grid_ny, limit);
  out.full_grid = xs.size() == static_cast<std::size_t>(full.grid_nx) && ys.size() == static_cast<std::size_t>(full.grid_ny);
  out.grid_nx = static_cast<int>(xs.size());
  out.grid_ny = static_cast<int>(ys.size());
  out.vertices.clear();
  out.vertices.reserve(xs.size() * ys.size());
  for (int j : ys) {
    for (int i : xs) out.vertices.push_back(full.vertices[static_cast<std::size_t>(j) * full.grid_nx + i]);
  }
  return out;
}

}  // namespace domforest
