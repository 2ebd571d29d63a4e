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

#include "domforest/dataset.hpp"
#include "domforest/forest.hpp"
#include "domforest/rollout.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace domforest {

struct ImitationConfig {
  int iterations = 10;
  int samples_per_iteration = 500;
  double p = 0.8;                 // fraction term: beta_n = p^(n-1)
  int rollout_steps = 20;         // control steps per rollout
  std::vector<TaskKind> tasks{TaskKind::Straight};
  TrainConfig forest{.trees = 25, .max_depth = 8};
  double bandwidth = 0.03;
  double probe_fraction = 0.2;
  bool early_stop = true;
  double convergence_tol = 0.05;
  int convergence_window = 3;
  EnvConfig env;
  std::uint64_t seed = 1;

  double beta(int iteration) const;
  void validate() const;
};

struct MetricsEntry {
  int iteration = 0;
  double err_aggregate = 0.0;
  double err_probe = 0.0;
  std::size_t total_leaves = 0;
  std::vector<std::size_t> leaf_counts;
  std::size_t dataset_size = 0;
  std::size_t skipped = 0;
  std::size_t degraded = 0;
  std::size_t clusters = 0;
  double expert_fraction = 0.0;
  double wall_ms = 0.0;

  /// Equality over everything except wall time.
  bool same_outcome(const MetricsEntry& o) const;
};

struct MetricsLog {
  std::vector<MetricsEntry> entries;

  void write_csv(std::ostream& out) const;
  static MetricsLog read_csv(std::istream& in);
};

/// Sum over rows of ||x* - prediction||^2 / (6 |rows|).
double mean_action_error(std::span<const GraspAction> expected, std::span<const GraspAction> predicted);
double mean_action_error(const Dataset& data, std::span<const std::size_t> rows, const RandomForest& forest);
double mean_action_error(const Dataset& data, const RandomForest& forest);

/// Mean-shift labels over `rows` followed by forest training.
RandomForest fit_forest(const Dataset& data, std::span<const std::size_t> rows, const TrainConfig& cfg,
                        double bandwidth, std::size_t* clusters = nullptr);

struct IterationResult {
  RandomForest forest;
  MetricsEntry metrics;
  std::vector<std::uint8_t> expert_trace;  // 1 where the expert's action was executed
};

/// Seed of rollout `r` in iteration `n`; the environment, human and noise streams derive from it.
std::uint64_t rollout_seed(std::uint64_t seed, int n, int r);
/// Seed of the per-step expert/learner coin flips of a rollout.
std::uint64_t mixing_seed(std::uint64_t rollout_seed);

/// One DAgger iteration: collect with the beta-mixture, aggregate into `data`, retrain.
IterationResult run_iteration(int n, const ImitationConfig& cfg, Dataset& data, const RandomForest* forest,
                              std::shared_ptr<const FeatureExtractor> extractor);

struct TrainResult {
  RandomForest forest;
  MetricsLog log;
  Dataset data;
  std::vector<RandomForest> history;  // forest after each iteration
  bool converged = false;
};

bool has_converged(const MetricsLog& log, double tol, int window);

using IterationCallback = std::function<void(const IterationResult&)>;
TrainResult train(const ImitationConfig& cfg, const IterationCallback& on_iteration = {});

}  // namespace domforest
