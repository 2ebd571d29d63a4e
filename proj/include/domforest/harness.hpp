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
#include "domforest/config.hpp"
#include "domforest/imitation.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace domforest {

// ---- checkpoints ----------------------------------------------------------------------

struct Checkpoint {
  std::string dir;
  RunConfig config;
  RandomForest forest;
  MetricsLog log;
  std::optional<Dataset> data;
};

/// Writes forest.rfcl, forest_iter_<n>.rfcl, dataset.csv, dataset_meta.csv, metrics.csv and
/// config.yaml into `dir` (created if needed).
void write_checkpoint(const std::string& dir, const RunConfig& cfg, const TrainResult& result);
Checkpoint load_checkpoint(const std::string& dir, bool with_dataset = false);
/// Forest saved after iteration `n` of the run in `dir`.
RandomForest load_iteration_forest(const std::string& dir, int n);

/// Runs imitation training and writes a checkpoint to `<out>/<run_id>`; returns that path.
std::string run_training(const RunConfig& cfg, const std::string& out, std::ostream* progress = nullptr);

/// Fits the linear and MLP baselines on the non-probe rows of a checkpoint's dataset and
/// stores them next to the forest as linear.linm and mlp.mlpm.
void fit_checkpoint_baselines(const std::string& dir, std::ostream* progress = nullptr);

// ---- evaluation -----------------------------------------------------------------------

struct EpisodeRecord {
  int episode = 0;
  std::size_t steps = 0;
  std::size_t skipped = 0;   // steps without usable features
  std::size_t degraded = 0;  // forest predictions that fell back to an all-task mean
  bool completed = false;    // human reached every waypoint before the step cap
  double error = 0.0;        // mean action error over this episode's steps
};

struct EvalReport {
  std::string controller;
  TaskKind task = TaskKind::Straight;
  std::vector<EpisodeRecord> episodes;
  double error = 0.0;  // mean action error pooled over every step of every episode
  std::size_t steps = 0;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

/// Closed-loop episodes where the controller acts at every step and each visited state is
/// scored against the expert label. Episodes are seeded from `seed` and never overlap the
/// training streams.
EvalReport evaluate(const EnvConfig& env, const ControllerFactory& make_controller, TaskKind task, int episodes,
                    int max_steps, std::uint64_t seed);

ControllerFactory forest_factory(std::shared_ptr<const RandomForest> forest);
ControllerFactory expert_factory();

void write_eval_csv(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& variants);

// ---- controller comparison ------------------------------------------------------------

struct CompareOptions {
  std::vector<int> fractions{20, 40, 60, 80, 100};
  double test_fraction = 0.2;
  TrainConfig forest{.trees = 25, .max_depth = 8};
  double bandwidth = 0.03;
  MlpConfig mlp;
  double linear_ridge = 0.0;
  std::uint64_t seed = 1;
  std::vector<std::string> models{"forest", "mlp", "linear"};
};

struct CompareResult {
  std::vector<std::string> models;
  std::vector<int> fractions;
  std::vector<std::vector<double>> test;   // [model][fraction]
  std::vector<std::vector<double>> train;  // [model][fraction]
  std::size_t test_rows = 0;
  std::size_t pool_rows = 0;

  double test_residual(const std::string& model, int fraction) const;
  std::size_t cell_count() const { return models.size() * fractions.size(); }
};

CompareResult compare_controllers(const Dataset& data, const CompareOptions& opts);
void write_compare_table(std::ostream& out, const CompareResult& r);
std::vector<int> parse_fractions(const std::string& text);

/// Per-task mean action error of `forest` on `rows`.
double task_error(const Dataset& data, std::span<const std::size_t> rows, const RandomForest& forest, int task);

/// Expert-only data collection used by `compare` experiments.
Dataset collect_expert_dataset(const EnvConfig& env, const std::vector<TaskKind>& tasks, int rows,
                               int rollout_steps, std::uint64_t seed);

}  // namespace domforest
