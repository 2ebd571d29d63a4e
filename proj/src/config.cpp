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

#include "domforest/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace domforest {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one mapping, remembering which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(where() + ": expected a mapping");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    consumed_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(join(path_, key) + ": invalid value '" + scalar_text(v) + "'");
    }
  }

  void get(const std::string& key, Vec3& out) {
    consumed_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    if (!v.IsSequence() || v.size() != 3) throw ConfigError(join(path_, key) + ": expected a list of 3 numbers");
    try {
      for (int i = 0; i < 3; ++i) out[i] = v[i].as<double>();
    } catch (const YAML::Exception&) {
      throw ConfigError(join(path_, key) + ": expected a list of 3 numbers");
    }
  }

  Section child(const std::string& key) {
    consumed_.insert(key);
    YAML::Node v = (node_ && node_.IsMap()) ? node_[key] : YAML::Node();
    return Section(v, join(path_, key));
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }
  YAML::Node raw(const std::string& key) {
    consumed_.insert(key);
    return node_ && node_.IsMap() ? node_[key] : YAML::Node();
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!consumed_.count(key)) throw ConfigError(join(path_, key) + ": unknown key");
    }
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

 private:
  static std::string scalar_text(const YAML::Node& v) {
    if (v.IsScalar()) return v.Scalar();
    std::ostringstream s;
    s << v;
    return s.str();
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> consumed_;
};

template <class F>
void checked(const std::string& section, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

void read_noise(Section s, NoiseSpec& n) {
  s.get("depth_sigma", n.depth_sigma);
  s.get("occluder_count", n.occluder_count);
  s.get("occluder_min_px", n.occluder_min_px);
  s.get("occluder_max_px", n.occluder_max_px);
  s.get("dropout_prob", n.dropout_prob);
  s.get("occluder_min_depth", n.occluder_min_depth);
  s.finish();
}

std::vector<TaskKind> read_tasks(const YAML::Node& node, const std::string& path) {
  std::vector<TaskKind> out;
  auto one = [&](const YAML::Node& n) {
    try {
      out.push_back(parse_task(n.as<std::string>()));
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  };
  if (node.IsSequence()) {
    for (const auto& n : node) one(n);
  } else {
    one(node);
  }
  if (out.empty()) throw ConfigError(path + ": at least one task is required");
  return out;
}

}  // namespace

void RunConfig::validate() const {
  checked("imitation", [&] { imitation.validate(); });
  checked("baselines.mlp", [&] { mlp.validate(); });
  checked("eval.noise", [&] { eval.noise.validate(); });
  if (eval.episodes < 1) throw ConfigError("eval.episodes: must be >= 1");
  if (eval.max_steps < 1) throw ConfigError("eval.max_steps: must be >= 1");
  if (!(linear_ridge >= 0.0)) throw ConfigError("baselines.linear_ridge: must be >= 0");
  if (run_id.empty()) throw ConfigError("run_id: must not be empty");
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig cfg;
  ImitationConfig& im = cfg.imitation;
  EnvConfig& env = im.env;
  Section top(root, "");
  top.get("run_id", cfg.run_id);
  top.get("output_dir", cfg.output_dir);
  top.get("seed", im.seed);
  if (top.has("task") && top.has("tasks")) throw ConfigError("task: give either 'task' or 'tasks', not both");
  if (top.has("task")) im.tasks = read_tasks(top.raw("task"), "task");
  if (top.has("tasks")) im.tasks = read_tasks(top.raw("tasks"), "tasks");
  top.raw("task");
  top.raw("tasks");

  {
    Section s = top.child("sim");
    s.get("grid_nx", env.nx);
    s.get("grid_ny", env.ny);
    s.get("dt", env.sim.dt);
    s.get("substeps", env.sim.substeps);
    s.get("k_structural", env.sim.k_structural);
    s.get("k_shear", env.sim.k_shear);
    s.get("k_bend", env.sim.k_bend);
    s.get("damping", env.sim.damping);
    s.get("gravity", env.sim.gravity);
    s.get("max_stretch", env.sim.max_stretch);
    s.get("robot_speed_limit", env.sim.robot_speed_limit);
    s.get("human_speed_limit", env.sim.human_speed_limit);
    s.get("vertex_mass", env.sim.vertex_mass);
    s.get("strain_iterations", env.sim.strain_iterations);
    s.get("steps_per_control", env.sim_steps_per_control);
    s.finish();
  }
  {
    Section s = top.child("camera");
    double fov_deg = env.camera.fov_y * 180.0 / std::numbers::pi;
    s.get("position", env.camera.position);
    s.get("look_at", env.camera.look_at);
    s.get("up", env.camera.up);
    s.get("fov_deg", fov_deg);
    env.camera.fov_y = fov_deg * std::numbers::pi / 180.0;
    s.get("near", env.camera.near_m);
    s.get("far", env.camera.far_m);
    s.get("width", env.camera.width);
    s.get("height", env.camera.height);
    s.finish();
  }
  {
    Section s = top.child("features");
    s.get("canvas", env.features.canvas);
    s.get("grid", env.features.grid);
    s.get("fill", env.features.fill);
    s.get("far_threshold", env.features.far_threshold);
    s.finish();
  }
  {
    Section s = top.child("labeling");
    s.get("bandwidth", im.bandwidth);
    s.finish();
  }
  {
    Section s = top.child("forest");
    s.get("trees", im.forest.trees);
    s.get("max_depth", im.forest.max_depth);
    s.get("min_gain", im.forest.min_gain);
    s.get("candidate_splits", im.forest.candidate_splits);
    s.get("subsample", im.forest.subsample);
    s.finish();
  }
  {
    Section s = top.child("imitation");
    s.get("iterations", im.iterations);
    s.get("samples_per_iteration", im.samples_per_iteration);
    s.get("fraction", im.p);
    s.get("rollout_steps", im.rollout_steps);
    s.get("probe_fraction", im.probe_fraction);
    s.get("early_stop", im.early_stop);
    s.get("convergence_tol", im.convergence_tol);
    s.get("convergence_window", im.convergence_window);
    s.finish();
  }
  {
    Section s = top.child("human");
    s.get("box_lo", env.human.box.lo);
    s.get("box_hi", env.human.box.hi);
    s.get("waypoints", env.human.waypoints);
    s.get("min_separation", env.human.min_separation);
    s.get("max_separation", env.human.max_separation);
    s.get("min_x_gap", env.human.min_x_gap);
    s.get("hand_noise_sigma", env.human.perturb_sigma);
    env.human.speed_limit = env.sim.human_speed_limit;
    s.finish();
  }
  read_noise(top.child("noise"), env.noise);
  {
    Section s = top.child("eval");
    s.get("episodes", cfg.eval.episodes);
    s.get("max_steps", cfg.eval.max_steps);
    read_noise(s.child("noise"), cfg.eval.noise);
    s.finish();
  }
  {
    Section s = top.child("baselines");
    s.get("linear_ridge", cfg.linear_ridge);
    Section m = s.child("mlp");
    m.get("hidden", cfg.mlp.hidden);
    m.get("epochs", cfg.mlp.epochs);
    m.get("batch", cfg.mlp.batch);
    m.get("lr", cfg.mlp.lr);
    m.finish();
    s.finish();
  }
  top.finish();
  cfg.mlp.seed = im.seed;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

namespace {

void emit_vec(YAML::Emitter& out, const char* key, const Vec3& v) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
}

void emit_noise(YAML::Emitter& out, const NoiseSpec& n) {
  out << YAML::BeginMap;
  out << YAML::Key << "depth_sigma" << YAML::Value << n.depth_sigma;
  out << YAML::Key << "occluder_count" << YAML::Value << n.occluder_count;
  out << YAML::Key << "occluder_min_px" << YAML::Value << n.occluder_min_px;
  out << YAML::Key << "occluder_max_px" << YAML::Value << n.occluder_max_px;
  out << YAML::Key << "dropout_prob" << YAML::Value << n.dropout_prob;
  out << YAML::Key << "occluder_min_depth" << YAML::Value << n.occluder_min_depth;
  out << YAML::EndMap;
}

}  // namespace

std::string dump_config(const RunConfig& cfg) {
  const ImitationConfig& im = cfg.imitation;
  const EnvConfig& env = im.env;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "run_id" << YAML::Value << cfg.run_id;
  out << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir;
  out << YAML::Key << "seed" << YAML::Value << im.seed;
  out << YAML::Key << "tasks" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto t : im.tasks) out << std::string(task_name(t));
  out << YAML::EndSeq;

  out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "grid_nx" << YAML::Value << env.nx;
  out << YAML::Key << "grid_ny" << YAML::Value << env.ny;
  out << YAML::Key << "dt" << YAML::Value << env.sim.dt;
  out << YAML::Key << "substeps" << YAML::Value << env.sim.substeps;
  out << YAML::Key << "k_structural" << YAML::Value << env.sim.k_structural;
  out << YAML::Key << "k_shear" << YAML::Value << env.sim.k_shear;
  out << YAML::Key << "k_bend" << YAML::Value << env.sim.k_bend;
  out << YAML::Key << "damping" << YAML::Value << env.sim.damping;
  emit_vec(out, "gravity", env.sim.gravity);
  out << YAML::Key << "max_stretch" << YAML::Value << env.sim.max_stretch;
  out << YAML::Key << "robot_speed_limit" << YAML::Value << env.sim.robot_speed_limit;
  out << YAML::Key << "human_speed_limit" << YAML::Value << env.sim.human_speed_limit;
  out << YAML::Key << "vertex_mass" << YAML::Value << env.sim.vertex_mass;
  out << YAML::Key << "strain_iterations" << YAML::Value << env.sim.strain_iterations;
  out << YAML::Key << "steps_per_control" << YAML::Value << env.sim_steps_per_control;
  out << YAML::EndMap;

  out << YAML::Key << "camera" << YAML::Value << YAML::BeginMap;
  emit_vec(out, "position", env.camera.position);
  emit_vec(out, "look_at", env.camera.look_at);
  emit_vec(out, "up", env.camera.up);
  out << YAML::Key << "fov_deg" << YAML::Value << env.camera.fov_y * 180.0 / std::numbers::pi;
  out << YAML::Key << "near" << YAML::Value << env.camera.near_m;
  out << YAML::Key << "far" << YAML::Value << env.camera.far_m;
  out << YAML::Key << "width" << YAML::Value << env.camera.width;
  out << YAML::Key << "height" << YAML::Value << env.camera.height;
  out << YAML::EndMap;

  out << YAML::Key << "features" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "canvas" << YAML::Value << env.features.canvas;
  out << YAML::Key << "grid" << YAML::Value << env.features.grid;
  out << YAML::Key << "fill" << YAML::Value << env.features.fill;
  out << YAML::Key << "far_threshold" << YAML::Value << env.features.far_threshold;
  out << YAML::EndMap;

  out << YAML::Key << "labeling" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bandwidth" << YAML::Value << im.bandwidth;
  out << YAML::EndMap;

  out << YAML::Key << "forest" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "trees" << YAML::Value << im.forest.trees;
  out << YAML::Key << "max_depth" << YAML::Value << im.forest.max_depth;
  out << YAML::Key << "min_gain" << YAML::Value << im.forest.min_gain;
  out << YAML::Key << "candidate_splits" << YAML::Value << im.forest.candidate_splits;
  out << YAML::Key << "subsample" << YAML::Value << im.forest.subsample;
  out << YAML::EndMap;

  out << YAML::Key << "imitation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "iterations" << YAML::Value << im.iterations;
  out << YAML::Key << "samples_per_iteration" << YAML::Value << im.samples_per_iteration;
  out << YAML::Key << "fraction" << YAML::Value << im.p;
  out << YAML::Key << "rollout_steps" << YAML::Value << im.rollout_steps;
  out << YAML::Key << "probe_fraction" << YAML::Value << im.probe_fraction;
  out << YAML::Key << "early_stop" << YAML::Value << im.early_stop;
  out << YAML::Key << "convergence_tol" << YAML::Value << im.convergence_tol;
  out << YAML::Key << "convergence_window" << YAML::Value << im.convergence_window;
  out << YAML::EndMap;

  out << YAML::Key << "human" << YAML::Value << YAML::BeginMap;
  emit_vec(out, "box_lo", env.human.box.lo);
  emit_vec(out, "box_hi", env.human.box.hi);
  out << YAML::Key << "waypoints" << YAML::Value << env.human.waypoints;
  out << YAML::Key << "min_separation" << YAML::Value << env.human.min_separation;
  out << YAML::Key << "max_separation" << YAML::Value << env.human.max_separation;
  out << YAML::Key << "min_x_gap" << YAML::Value << env.human.min_x_gap;
  out << YAML::Key << "hand_noise_sigma" << YAML::Value << env.human.perturb_sigma;
  out << YAML::EndMap;

  out << YAML::Key << "noise" << YAML::Value;
  emit_noise(out, env.noise);

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "episodes" << YAML::Value << cfg.eval.episodes;
  out << YAML::Key << "max_steps" << YAML::Value << cfg.eval.max_steps;
  out << YAML::Key << "noise" << YAML::Value;
  emit_noise(out, cfg.eval.noise);
  out << YAML::EndMap;

  out << YAML::Key << "baselines" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "linear_ridge" << YAML::Value << cfg.linear_ridge;
  out << YAML::Key << "mlp" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "hidden" << YAML::Value << cfg.mlp.hidden;
  out << YAML::Key << "epochs" << YAML::Value << cfg.mlp.epochs;
  out << YAML::Key << "batch" << YAML::Value << cfg.mlp.batch;
  out << YAML::Key << "lr" << YAML::Value << cfg.mlp.lr;
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << dump_config(cfg);
}

bool apply_env_overrides(RunConfig& cfg) {
  const char* seed = std::getenv("DOMFOREST_SEED");
  if (!seed || !*seed) return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(seed, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("DOMFOREST_SEED: not an unsigned integer: '") + seed + "'");
  cfg.imitation.seed = v;
  cfg.mlp.seed = v;
  return true;
}

}  // namespace domforest
