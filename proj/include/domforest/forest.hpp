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

#include "domforest/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace domforest {

struct TrainConfig {
  int trees = 25;
  int max_depth = 16;
  double min_gain = 1e-4;  // bits
  int candidate_splits = 64;
  double subsample = 0.7;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Rows handed to the tree builder. Feature spans point into caller-owned storage.
struct TrainingSet {
  std::size_t dim = 0;
  std::vector<std::span<const double>> features;
  std::vector<GraspAction> actions;
  std::vector<int> tasks;
  std::vector<int> labels;

  std::size_t size() const { return features.size(); }
  void add(std::span<const double> f, const GraspAction& a, int task, int label);
  void validate() const;
};

/// Shannon entropy (bits) of a label multiset.
double entropy_bits(std::span<const int> labels);

/// H(parent) - sum_c |c|/|parent| H(c). Throws on an empty parent or a partition that does not
/// cover the parent exactly.
double info_gain(std::span<const int> parent, std::span<const int> left, std::span<const int> right);

struct TaskAction {
  int task = 0;
  std::size_t count = 0;
  GraspAction mean;
};

struct Leaf {
  std::vector<TaskAction> tasks;  // sorted by task id
  std::vector<std::pair<int, std::size_t>> label_histogram;  // sorted by label
  GraspAction overall_mean;
  std::size_t count = 0;

  const TaskAction* find(int task) const;
  bool pure() const { return label_histogram.size() == 1; }
};

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;  // index into DecisionTree::leaves when this is a leaf

  bool is_leaf() const { return leaf >= 0; }
};

/// Binary tree; node 0 is the root. A sample goes left when f[feature] < threshold.
class DecisionTree {
 public:
  std::vector<TreeNode> nodes;
  std::vector<Leaf> leaves;

  int route(std::span<const double> f) const;  // leaf index
  const Leaf& leaf_for(std::span<const double> f) const { return leaves[route(f)]; }
  std::size_t leaf_count() const { return leaves.size(); }
  int depth() const;
};

DecisionTree train_tree(const TrainingSet& data, std::span<const std::size_t> rows, const TrainConfig& cfg,
                        std::uint64_t seed);

/// Whole data set convenience overload.
DecisionTree train_tree(const TrainingSet& data, const TrainConfig& cfg, std::uint64_t seed);

struct Prediction {
  GraspAction action;
  int degraded_trees = 0;  // trees whose leaf had no entry for the task

  bool degraded() const { return degraded_trees > 0; }
};

class RandomForest {
 public:
  std::vector<DecisionTree> trees;
  TrainConfig config;
  std::size_t feature_dim = 0;
  std::vector<int> task_ids;  // sorted

  /// Average of the per-tree leaf actions for `task`; a leaf lacking the task contributes
  /// its all-task mean and marks the prediction degraded.
  Prediction predict(std::span<const double> f, int task) const;
  std::vector<std::size_t> leaf_counts() const;
  std::size_t total_leaves() const;
  bool has_task(int task) const;
};

RandomForest train_forest(const TrainingSet& data, const TrainConfig& cfg);

// "RFCL" versioned little-endian binary; see forest.cpp for the record layout.
void write_forest(std::ostream& out, const RandomForest& forest);
RandomForest read_forest(std::istream& in);
void save_forest(const std::string& path, const RandomForest& forest);
RandomForest load_forest(const std::string& path);
void dump_forest_text(std::ostream& out, const RandomForest& forest);

}  // namespace domforest
