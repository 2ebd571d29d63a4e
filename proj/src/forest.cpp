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

#include "domforest/forest.hpp"

#include "domforest/binary_io.hpp"
#include "domforest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace domforest {

void TrainConfig::validate() const {
  std::ostringstream err;
  if (trees < 1) err << "trees must be >= 1; ";
  if (max_depth < 0) err << "max_depth must be >= 0; ";
  if (!(min_gain >= 0.0)) err << "min_gain must be >= 0; ";
  if (candidate_splits < 1) err << "candidate_splits must be >= 1; ";
  if (!(subsample > 0.0 && subsample <= 1.0)) err << "subsample must lie in (0, 1]; ";
  if (!err.str().empty()) throw std::invalid_argument("invalid TrainConfig: " + err.str());
}

void TrainingSet::add(std::span<const double> f, const GraspAction& a, int task, int label) {
  if (dim == 0) dim = f.size();
  if (f.size() != dim) throw std::invalid_argument("TrainingSet: inconsistent feature dimension");
  features.push_back(f);
  actions.push_back(a);
  tasks.push_back(task);
  labels.push_back(label);
}

void TrainingSet::validate() const {
  if (features.empty()) throw std::invalid_argument("TrainingSet: no rows");
  if (actions.size() != features.size() || tasks.size() != features.size() || labels.size() != features.size()) {
    throw std::invalid_argument("TrainingSet: column length mismatch");
  }
  for (const auto& f : features) {
    if (f.size() != dim) throw std::invalid_argument("TrainingSet: inconsistent feature dimension");
  }
}

namespace {

double entropy_from_counts(std::span<const std::size_t> counts, std::size_t total) {
  if (total == 0) return 0.0;
  double acc = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    acc -= p * std::log2(p);
  }
  return acc;
}

std::vector<std::size_t> histogram(std::span<const int> labels) {
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  std::vector<std::size_t> out;
  for (const auto& [l, c] : counts) out.push_back(c);
  return out;
}

}  // namespace

double entropy_bits(std::span<const int> labels) {
  const auto counts = histogram(labels);
  return entropy_from_counts(counts, labels.size());
}

double info_gain(std::span<const int> parent, std::span<const int> left, std::span<const int> right) {
  if (parent.empty()) throw std::invalid_argument("info_gain: empty parent");
  std::vector<int> a(parent.begin(), parent.end());
  std::vector<int> b(left.begin(), left.end());
  b.insert(b.end(), right.begin(), right.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw std::invalid_argument("info_gain: partition does not cover the parent");
  const double n = static_cast<double>(parent.size());
  return entropy_bits(parent) - (static_cast<double>(left.size()) / n) * entropy_bits(left) -
         (static_cast<double>(right.size()) / n) * entropy_bits(right);
}

const TaskAction* Leaf::find(int task) const {
  auto it = std::lower_bound(tasks.begin(), tasks.end(), task,
                             [](const TaskAction& t, int id) { return t.task < id; });
  return (it != tasks.end() && it->task == task) ? &*it : nullptr;
}

int DecisionTree::route(std::span<const double> f) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = f[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[node].leaf;
}

int DecisionTree::depth() const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[node].is_leaf()) {
      stack.push_back({nodes[node].left, d + 1});
      stack.push_back({nodes[node].right, d + 1});
    }
  }
  return deepest;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const TrainConfig& cfg) : data_(data), cfg_(cfg) {
    std::vector<int> unique(data.labels.begin(), data.labels.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    label_values_ = unique;
    dense_.resize(data.labels.size());
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
      dense_[i] = static_cast<int>(std::lower_bound(unique.begin(), unique.end(), data.labels[i]) - unique.begin());
    }
    left_counts_.resize(unique.size());
    counts_.resize(unique.size());
  }

  DecisionTree build(std::vector<std::size_t> rows, std::uint64_t seed) {
    tree_ = DecisionTree{};
    tree_.nodes.emplace_back();
    grow(0, rows, 0, derive_seed(seed, 0));
    return std::move(tree_);
  }

 private:
  void grow(int node, std::vector<std::size_t>& rows, int depth, std::uint64_t seed) {
    std::fill(counts_.begin(), counts_.end(), 0);
    for (auto r : rows) ++counts_[dense_[r]];
    const std::size_t distinct =
        static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](auto c) { return c > 0; }));
    if (depth >= cfg_.max_depth || distinct <= 1 || rows.size() < 2) {
      make_leaf(node, rows);
      return;
    }
    const double parent_h = entropy_from_counts(counts_, rows.size());
    const double n = static_cast<double>(rows.size());

    Rng rng(seed);
    double best_gain = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int c = 0; c < cfg_.candidate_splits; ++c) {
      const auto feature = std::min(data_.dim - 1, static_cast<std::size_t>(uniform01(rng) * data_.dim));
      const double u = uniform01(rng);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto r : rows) {
        const double v = data_.features[r][feature];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) continue;
      const double threshold = lo + u * (hi - lo);
      std::fill(left_counts_.begin(), left_counts_.end(), 0);
      std::size_t n_left = 0;
      for (auto r : rows) {
        if (data_.features[r][feature] < threshold) {
          ++left_counts_[dense_[r]];
          ++n_left;
        }
      }
      if (n_left == 0 || n_left == rows.size()) continue;
      right_counts_.resize(counts_.size());
      for (std::size_t k = 0; k < counts_.size(); ++k) right_counts_[k] = counts_[k] - left_counts_[k];
      const std::size_t n_right = rows.size() - n_left;
      const double gain = parent_h - (n_left / n) * entropy_from_counts(left_counts_, n_left) -
                          (n_right / n) * entropy_from_counts(right_counts_, n_right);
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<int>(feature);
        best_threshold = threshold;
      }
    }
    if (best_feature < 0 || best_gain < cfg_.min_gain) {
      make_leaf(node, rows);
      return;
    }

    std::vector<std::size_t> left, right;
    for (auto r : rows) (data_.features[r][best_feature] < best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int l = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const int rgt = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[node].feature = best_feature;
    tree_.nodes[node].threshold = best_threshold;
    tree_.nodes[node].left = l;
    tree_.nodes[node].right = rgt;
    grow(l, left, depth + 1, derive_seed(seed, 1));
    grow(rgt, right, depth + 1, derive_seed(seed, 2));
  }

  void make_leaf(int node, const std::vector<std::size_t>& rows) {
    Leaf leaf;
    std::map<int, std::pair<std::size_t, std::array<double, kActionDim>>> per_task;
    std::map<int, std::size_t> labels;
    std::array<double, kActionDim> total{};
    for (auto r : rows) {
      auto& [count, sum] = per_task[data_.tasks[r]];
      ++count;
      for (std::size_t k = 0; k < kActionDim; ++k) {
        sum[k] += data_.actions[r][k];
        total[k] += data_.actions[r][k];
      }
      ++labels[data_.labels[r]];
    }
    for (const auto& [task, entry] : per_task) {
      TaskAction t{task, entry.first, {}};
      for (std::size_t k = 0; k < kActionDim; ++k) t.mean[k] = entry.second[k] / static_cast<double>(entry.first);
      leaf.tasks.push_back(t);
    }
    leaf.label_histogram.assign(labels.begin(), labels.end());
    leaf.count = rows.size();
    for (std::size_t k = 0; k < kActionDim; ++k) leaf.overall_mean[k] = total[k] / static_cast<double>(rows.size());
    tree_.nodes[node].leaf = static_cast<int>(tree_.leaves.size());
    tree_.leaves.push_back(std::move(leaf));
  }

  const TrainingSet& data_;
  const TrainConfig& cfg_;
  std::vector<int> label_values_;
  std::vector<int> dense_;
  std::vector<std::size_t> counts_, left_counts_, right_counts_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree train_tree(const TrainingSet& data, std::span<const std::size_t> rows, const TrainConfig& cfg,
                        std::uint64_t seed) {
  data.validate();
  cfg.validate();
  if (rows.empty()) throw std::invalid_argument("train_tree: no rows");
  TreeBuilder builder(data, cfg);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()), seed);
}

DecisionTree train_tree(const TrainingSet& data, const TrainConfig& cfg, std::uint64_t seed) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return train_tree(data, rows, cfg, seed);
}

RandomForest train_forest(const TrainingSet& data, const TrainConfig& cfg) {
  data.validate();
  cfg.validate();
  RandomForest forest;
  forest.config = cfg;
  forest.feature_dim = data.dim;
  forest.task_ids.assign(data.tasks.begin(), data.tasks.end());
  std::sort(forest.task_ids.begin(), forest.task_ids.end());
  forest.task_ids.erase(std::unique(forest.task_ids.begin(), forest.task_ids.end()), forest.task_ids.end());
  forest.trees.resize(cfg.trees);

  const std::size_t n = data.size();
  const std::size_t m = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.subsample * static_cast<double>(n))), 1, n);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < cfg.trees; ++k) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(k), 0x5eed));
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    // Partial Fisher-Yates: the first m entries are a uniform subset without replacement.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + std::min(n - i - 1, static_cast<std::size_t>(uniform01(rng) * (n - i)));
      std::swap(rows[i], rows[j]);
    }
    rows.resize(m);
    std::sort(rows.begin(), rows.end());
    TreeBuilder builder(data, cfg);
    forest.trees[k] = builder.build(std::move(rows), derive_seed(cfg.seed, static_cast<std::uint64_t>(k), 0x74ee));
  }
  return forest;
}

Prediction RandomForest::predict(std::span<const double> f, int task) const {
  if (f.size() != feature_dim) throw std::invalid_argument("predict: feature dimension mismatch");
  Prediction p;
  std::array<double, kActionDim> sum{};
  for (const auto& tree : trees) {
    const Leaf& leaf = tree.leaf_for(f);
    const TaskAction* entry = leaf.find(task);
    const GraspAction& a = entry ? entry->mean : leaf.overall_mean;
    if (!entry) ++p.degraded_trees;
    for (std::size_t k = 0; k < kActionDim; ++k) sum[k] += a[k];
  }
  for (std::size_t k = 0; k < kActionDim; ++k) p.action[k] = sum[k] / static_cast<double>(trees.size());
  return p;
}

std::vector<std::size_t> RandomForest::leaf_counts() const {
  std::vector<std::size_t> out;
  for (const auto& t : trees) out.push_back(t.leaf_count());
  return out;
}

std::size_t RandomForest::total_leaves() const {
  std::size_t s = 0;
  for (const auto& t : trees) s += t.leaf_count();
  return s;
}

bool RandomForest::has_task(int task) const {
  return std::binary_search(task_ids.begin(), task_ids.end(), task);
}

// Layout:
//   "RFCL" u32 version
//   u32 trees, i32 max_depth, f64 min_gain, u32 candidate_splits, f64 subsample, u64 seed
//   u32 feature_dim, u32 task count, i32 task ids...
//   per tree, preorder: u8 kind (0 split, 1 leaf)
//     split: u32 feature, f64 threshold, left subtree, right subtree
//     leaf:  u32 count, 6 f64 overall mean,
//            u32 task entries, each {i32 task, u32 count, 6 f64 mean},
//            u32 label entries, each {i32 label, u32 count}
namespace {

constexpr std::uint32_t kForestVersion = 1;

void put_action(std::ostream& out, const GraspAction& a) {
  for (double v : a.values) binio::put_f64(out, v);
}

GraspAction get_action(std::istream& in) {
  GraspAction a;
  for (double& v : a.values) v = binio::get_f64(in);
  return a;
}

void write_subtree(std::ostream& out, const DecisionTree& tree, int node) {
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) {
    const Leaf& leaf = tree.leaves[n.leaf];
    binio::put_u8(out, 1);
    binio::put_u32(out, static_cast<std::uint32_t>(leaf.count));
    put_action(out, leaf.overall_mean);
    binio::put_u32(out, static_cast<std::uint32_t>(leaf.tasks.size()));
    for (const auto& t : leaf.tasks) {
      binio::put_i32(out, t.task);
      binio::put_u32(out, static_cast<std::uint32_t>(t.count));
      put_action(out, t.mean);
    }
    binio::put_u32(out, static_cast<std::uint32_t>(leaf.label_histogram.size()));
    for (const auto& [label, count] : leaf.label_histogram) {
      binio::put_i32(out, label);
      binio::put_u32(out, static_cast<std::uint32_t>(count));
    }
    return;
  }
  binio::put_u8(out, 0);
  binio::put_u32(out, static_cast<std::uint32_t>(n.feature));
  binio::put_f64(out, n.threshold);
  write_subtree(out, tree, n.left);
  write_subtree(out, tree, n.right);
}

int read_subtree(std::istream& in, DecisionTree& tree, std::size_t dim, int depth) {
  if (depth > 100000) throw binio::FormatError("RFCL: tree too deep");
  const int node = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const auto kind = binio::get_u8(in);
  if (kind == 1) {
    Leaf leaf;
    leaf.count = binio::get_u32(in);
    leaf.overall_mean = get_action(in);
    const auto ntasks = binio::get_u32(in);
    for (std::uint32_t i = 0; i < ntasks; ++i) {
      TaskAction t;
      t.task = binio::get_i32(in);
      t.count = binio::get_u32(in);
      t.mean = get_action(in);
      leaf.tasks.push_back(t);
    }
    const auto nlabels = binio::get_u32(in);
    for (std::uint32_t i = 0; i < nlabels; ++i) {
      const int label = binio::get_i32(in);
      leaf.label_histogram.emplace_back(label, binio::get_u32(in));
    }
    tree.nodes[node].leaf = static_cast<int>(tree.leaves.size());
    tree.leaves.push_back(std::move(leaf));
    return node;
  }
  if (kind != 0) throw binio::FormatError("RFCL: bad node kind");
  const auto feature = binio::get_u32(in);
  if (feature >= dim) throw binio::FormatError("RFCL: feature index out of range");
  const double threshold = binio::get_f64(in);
  const int l = read_subtree(in, tree, dim, depth + 1);
  const int r = read_subtree(in, tree, dim, depth + 1);
  tree.nodes[node].feature = static_cast<int>(feature);
  tree.nodes[node].threshold = threshold;
  tree.nodes[node].left = l;
  tree.nodes[node].right = r;
  return node;
}

}  // namespace

void write_forest(std::ostream& out, const RandomForest& forest) {
  binio::put_magic(out, "RFCL");
  binio::put_u32(out, kForestVersion);
  const auto& c = forest.config;
  binio::put_u32(out, static_cast<std::uint32_t>(forest.trees.size()));
  binio::put_i32(out, c.max_depth);
  binio::put_f64(out, c.min_gain);
  binio::put_u32(out, static_cast<std::uint32_t>(c.candidate_splits));
  binio::put_f64(out, c.subsample);
  binio::put_u64(out, c.seed);
  binio::put_u32(out, static_cast<std::uint32_t>(forest.feature_dim));
  binio::put_u32(out, static_cast<std::uint32_t>(forest.task_ids.size()));
  for (int t : forest.task_ids) binio::put_i32(out, t);
  for (const auto& tree : forest.trees) write_subtree(out, tree, 0);
}

RandomForest read_forest(std::istream& in) {
  binio::expect_magic(in, "RFCL");
  const auto version = binio::get_u32(in);
  if (version != kForestVersion) throw binio::FormatError("RFCL: unsupported version " + std::to_string(version));
  RandomForest f;
  const auto k = binio::get_u32(in);
  if (k < 1 || k > 100000) throw binio::FormatError("RFCL: bad tree count");
  f.config.trees = static_cast<int>(k);
  f.config.max_depth = binio::get_i32(in);
  f.config.min_gain = binio::get_f64(in);
  f.config.candidate_splits = static_cast<int>(binio::get_u32(in));
  f.config.subsample = binio::get_f64(in);
  f.config.seed = binio::get_u64(in);
  f.feature_dim = binio::get_u32(in);
  const auto ntasks = binio::get_u32(in);
  for (std::uint32_t i = 0; i < ntasks; ++i) f.task_ids.push_back(binio::get_i32(in));
  f.trees.resize(k);
  for (auto& tree : f.trees) read_subtree(in, tree, f.feature_dim, 0);
  return f;
}

void save_forest(const std::string& path, const RandomForest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_forest(out, forest);
}

RandomForest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_forest(in);
}

void dump_forest_text(std::ostream& out, const RandomForest& forest) {
  out << "forest trees=" << forest.trees.size() << " feature_dim=" << forest.feature_dim << " tasks=";
  for (std::size_t i = 0; i < forest.task_ids.size(); ++i) out << (i ? "," : "") << forest.task_ids[i];
  out << '\n' << std::setprecision(9);
  for (std::size_t k = 0; k < forest.trees.size(); ++k) {
    const auto& tree = forest.trees[k];
    out << "tree " << k << " leaves=" << tree.leaf_count() << " depth=" << tree.depth() << '\n';
    std::vector<std::pair<int, int>> stack{{0, 1}};
    while (!stack.empty()) {
      auto [node, indent] = stack.back();
      stack.pop_back();
      const TreeNode& n = tree.nodes[node];
      out << std::string(2 * indent, ' ');
      if (n.is_leaf()) {
        const Leaf& leaf = tree.leaves[n.leaf];
        out << "leaf n=" << leaf.count;
        for (const auto& t : leaf.tasks) {
          out << " task" << t.task << "(" << t.count << ")=[";
          for (std::size_t i = 0; i < kActionDim; ++i) out << (i ? "," : "") << t.mean[i];
          out << "]";
        }
        out << '\n';
      } else {
        out << "f[" << n.feature << "] < " << n.threshold << '\n';
        stack.push_back({n.right, indent + 1});
        stack.push_back({n.left, indent + 1});
      }
    }
  }
}

}  // namespace domforest
