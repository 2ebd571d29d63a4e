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
#include "domforest/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <deque>
#include <map>
#include <sstream>

using namespace domforest;

namespace {

// Owns feature storage so TrainingSet spans stay valid.
struct Toy {
  std::deque<std::vector<double>> rows;
  TrainingSet set;

  explicit Toy(std::size_t dim) { set.dim = dim; }
  void add(std::vector<double> f, const GraspAction& a, int task, int label) {
    rows.push_back(std::move(f));
    set.add(rows.back(), a, task, label);
  }
};

GraspAction action_of(double v) { return GraspAction{{v, 0.1 * v, 0, 0.3, 0, -v}}; }

// Two labels split by feature 0: {0..0.1} vs {0.9..1.0}; remaining features are noise in [0, 1].
Toy separable(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Toy t(dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<double> f(dim);
    for (auto& v : f) v = uniform01(rng);
    f[0] = label == 0 ? uniform(rng, 0.0, 0.1) : uniform(rng, 0.9, 1.0);
    t.add(std::move(f), action_of(label), 0, label);
  }
  return t;
}

Toy random_toy(std::size_t n, std::size_t dim, int labels, int tasks, std::uint64_t seed) {
  Toy t(dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(dim);
    for (auto& v : f) v = uniform01(rng);
    const int label = static_cast<int>(std::min(labels - 1.0, f[0] * labels + 0.2 * uniform01(rng)));
    const int task = static_cast<int>(i % tasks);
    GraspAction a;
    for (auto& v : a.values) v = uniform(rng, -1, 1);
    t.add(std::move(f), a, task, label);
  }
  return t;
}

double entropy_oracle(const std::vector<int>& xs) {
  std::map<int, double> c;
  for (int x : xs) c[x] += 1.0;
  double h = 0.0;
  for (auto& [k, v] : c) {
    const double p = v / xs.size();
    h -= p * std::log2(p);
  }
  return h;
}

int brute_route(const DecisionTree& t, std::span<const double> f) {
  int node = 0;
  while (true) {
    const TreeNode& n = t.nodes[node];
    if (n.left < 0 && n.right < 0) return n.leaf;
    node = f[n.feature] < n.threshold ? n.left : n.right;
  }
}

GraspAction brute_predict(const RandomForest& forest, std::span<const double> f, int task) {
  GraspAction sum{};
  for (const auto& t : forest.trees) {
    const Leaf& leaf = t.leaves[brute_route(t, f)];
    GraspAction a = leaf.overall_mean;
    for (const auto& ta : leaf.tasks) if (ta.task == task) a = ta.mean;
    for (std::size_t k = 0; k < kActionDim; ++k) sum[k] += a[k];
  }
  for (auto& v : sum.values) v /= static_cast<double>(forest.trees.size());
  return sum;
}

std::size_t childless(const DecisionTree& t) {
  std::size_t count = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const TreeNode& n = t.nodes[stack.back()];
    stack.pop_back();
    if (n.left < 0 && n.right < 0) {
      ++count;
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return count;
}

std::string bytes_of(const RandomForest& f) {
  std::ostringstream out;
  write_forest(out, f);
  return out.str();
}

DecisionTree single_leaf(const GraspAction& a, int task) {
  DecisionTree t;
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0});
  Leaf leaf;
  leaf.tasks.push_back(TaskAction{task, 1, a});
  leaf.label_histogram = {{0, 1}};
  leaf.overall_mean = a;
  leaf.count = 1;
  t.leaves.push_back(leaf);
  return t;
}

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("information gain") {
    const std::vector<int> aabb{0, 0, 1, 1};
    CHECK(info_gain(aabb, std::vector<int>{0, 0}, std::vector<int>{1, 1}) == 1.0);
    CHECK(info_gain(aabb, std::vector<int>{0, 1}, std::vector<int>{0, 1}) == 0.0);
    CHECK(info_gain(std::vector<int>{0, 0, 0, 1}, std::vector<int>{0, 0}, std::vector<int>{0, 1}) ==
          doctest::Approx(0.3112781).epsilon(1e-7));
    CHECK_THROWS(info_gain(std::vector<int>{}, std::vector<int>{}, std::vector<int>{}));
    CHECK_THROWS(info_gain(aabb, std::vector<int>{0}, std::vector<int>{1, 1}));
  }

  TEST_CASE("information gain agrees with direct entropy arithmetic") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<int> parent(20);
      for (auto& x : parent) x = static_cast<int>(uniform01(rng) * 4);
      const std::size_t cut = 1 + static_cast<std::size_t>(uniform01(rng) * 18);
      const std::vector<int> left(parent.begin(), parent.begin() + cut), right(parent.begin() + cut, parent.end());
      const double expected = entropy_oracle(parent) - (left.size() / 20.0) * entropy_oracle(left) -
                              (right.size() / 20.0) * entropy_oracle(right);
      CHECK(std::abs(info_gain(parent, left, right) - expected) <= 1e-12);
      CHECK(std::abs(entropy_bits(parent) - entropy_oracle(parent)) <= 1e-12);
    }
  }

  TEST_CASE("one sample makes a single leaf holding its action") {
    Toy t(3);
    t.add({0.1, 0.2, 0.3}, action_of(0.7), 0, 0);
    const DecisionTree tree = train_tree(t.set, TrainConfig{}, 1);
    CHECK(tree.leaf_count() == 1);
    CHECK(tree.leaves[0].overall_mean == action_of(0.7));
  }

  TEST_CASE("pure labels give a single leaf at the action mean") {
    Toy t(4);
    Rng rng(8);
    GraspAction mean{};
    for (int i = 0; i < 40; ++i) {
      GraspAction a;
      for (auto& v : a.values) v = uniform(rng, 0, 1);
      for (std::size_t k = 0; k < kActionDim; ++k) mean[k] += a[k] / 40.0;
      t.add({uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)}, a, 0, 3);
    }
    const DecisionTree tree = train_tree(t.set, TrainConfig{}, 2);
    REQUIRE(tree.leaf_count() == 1);
    for (std::size_t k = 0; k < kActionDim; ++k) CHECK(std::abs(tree.leaves[0].overall_mean[k] - mean[k]) <= 1e-12);
  }

  TEST_CASE("a separable root split lands in the gap on feature 0") {
    Toy t = separable(60, 3, 5);
    TrainConfig cfg;
    cfg.subsample = 1.0;
    const DecisionTree tree = train_tree(t.set, cfg, 3);
    CHECK(tree.depth() == 1);
    CHECK(tree.leaf_count() == 2);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold > 0.1);
    CHECK(tree.nodes[0].threshold < 0.9);

    // Exhaustive enumeration over every midpoint threshold on every feature.
    double best = -1.0;
    int best_feature = -1;
    for (std::size_t d = 0; d < t.set.dim; ++d) {
      std::vector<double> values;
      for (const auto& f : t.set.features) values.push_back(f[d]);
      std::sort(values.begin(), values.end());
      for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const double thr = 0.5 * (values[i] + values[i + 1]);
        std::vector<int> l, r;
        for (std::size_t s = 0; s < t.set.size(); ++s) (t.set.features[s][d] < thr ? l : r).push_back(t.set.labels[s]);
        if (l.empty() || r.empty()) continue;
        const double g = info_gain(t.set.labels, l, r);
        if (g > best) best = g, best_feature = static_cast<int>(d);
      }
    }
    CHECK(best == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(best_feature == 0);
    std::vector<int> l, r;
    for (std::size_t s = 0; s < t.set.size(); ++s) (t.set.features[s][0] < tree.nodes[0].threshold ? l : r).push_back(t.set.labels[s]);
    CHECK(info_gain(t.set.labels, l, r) == doctest::Approx(best).epsilon(1e-12));
  }

  TEST_CASE("a single full-sample tree forest predicts its leaf action") {
    Toy t = random_toy(200, 5, 4, 1, 6);
    TrainConfig cfg;
    cfg.trees = 1;
    cfg.subsample = 1.0;
    const RandomForest forest = train_forest(t.set, cfg);
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> f(5);
      for (auto& v : f) v = uniform01(rng);
      const Leaf& leaf = forest.trees[0].leaf_for(f);
      const Prediction p = forest.predict(f, 0);
      CHECK(p.action == leaf.find(0)->mean);
      CHECK_FALSE(p.degraded());
    }
  }

  TEST_CASE("the same seed reproduces the forest byte for byte") {
    Toy t = random_toy(300, 8, 5, 2, 9);
    TrainConfig cfg;
    cfg.trees = 7;
    CHECK(bytes_of(train_forest(t.set, cfg)) == bytes_of(train_forest(t.set, cfg)));
    TrainConfig other = cfg;
    other.seed = 2;
    CHECK(bytes_of(train_forest(t.set, cfg)) != bytes_of(train_forest(t.set, other)));
  }

  TEST_CASE("on separable data every tree routes training samples to pure leaves") {
    Toy t = separable(100, 4, 7);
    const RandomForest forest = train_forest(t.set, TrainConfig{});
    REQUIRE(forest.trees.size() == 25);
    for (std::size_t s = 0; s < t.set.size(); ++s) {
      for (const auto& tree : forest.trees) {
        const Leaf& leaf = tree.leaves[brute_route(tree, t.set.features[s])];
        CHECK(leaf.pure());
        CHECK(leaf.label_histogram[0].first == t.set.labels[s]);
      }
    }
  }

  TEST_CASE("prediction averages leaf actions across trees") {
    RandomForest forest;
    forest.feature_dim = 2;
    forest.task_ids = {0};
    forest.trees.push_back(single_leaf(GraspAction{{0, 0, 0, 0, 0, 0}}, 0));
    forest.trees.push_back(single_leaf(GraspAction{{0.6, 0, 0, 0, 0, 0}}, 0));
    const std::vector<double> f{0.3, 0.4};
    const Prediction p = forest.predict(f, 0);
    CHECK(p.action[0] == doctest::Approx(0.3).epsilon(1e-15));
    for (std::size_t k = 1; k < kActionDim; ++k) CHECK(p.action[k] == 0.0);
    CHECK_FALSE(p.degraded());

    const Prediction missing = forest.predict(f, 2);
    CHECK(missing.degraded_trees == 2);
    CHECK(missing.action[0] == doctest::Approx(0.3));
    CHECK_THROWS(forest.predict(std::vector<double>{1.0}, 0));
  }

  TEST_CASE("predict matches brute-force route-and-average") {
    Toy t = random_toy(600, 6, 6, 3, 12);
    TrainConfig cfg;
    cfg.trees = 9;
    cfg.min_gain = 0.0;
    const RandomForest forest = train_forest(t.set, cfg);
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> f(6);
      for (auto& v : f) v = uniform(rng, -0.2, 1.2);
      const int task = static_cast<int>(uniform01(rng) * 3);
      const Prediction p = forest.predict(f, task);
      const GraspAction want = brute_predict(forest, f, task);
      for (std::size_t k = 0; k < kActionDim; ++k) CHECK(std::abs(p.action[k] - want[k]) <= 1e-12);
    }
  }

  TEST_CASE("leaf counts match a full traversal") {
    Toy t = random_toy(400, 5, 5, 1, 14);
    const RandomForest forest = train_forest(t.set, TrainConfig{});
    const auto counts = forest.leaf_counts();
    std::size_t total = 0;
    for (std::size_t k = 0; k < forest.trees.size(); ++k) {
      CHECK(counts[k] == childless(forest.trees[k]));
      total += counts[k];
    }
    CHECK(forest.total_leaves() == total);

    TrainConfig stump;
    stump.max_depth = 0;
    for (auto c : train_forest(t.set, stump).leaf_counts()) CHECK(c == 1);
    TrainConfig one;
    one.max_depth = 1;
    for (auto c : train_forest(t.set, one).leaf_counts()) CHECK(c == 2);
  }

  TEST_CASE("training samples are reproduced on separable data with full trees") {
    Toy t(3);
    Rng rng(15);
    for (int i = 0; i < 120; ++i) {
      const int label = i % 4;
      t.add({label + uniform(rng, 0.0, 0.5), uniform01(rng), uniform01(rng)}, action_of(0.1 * label + 0.05), 0, label);
    }
    TrainConfig cfg;
    cfg.subsample = 1.0;
    cfg.min_gain = 0.0;
    cfg.max_depth = 64;
    const RandomForest forest = train_forest(t.set, cfg);
    for (std::size_t s = 0; s < t.set.size(); ++s) {
      const Prediction p = forest.predict(t.set.features[s], 0);
      for (std::size_t k = 0; k < kActionDim; ++k) CHECK(std::abs(p.action[k] - t.set.actions[s][k]) <= 1e-12);
    }
  }

  TEST_CASE("lowering the gain threshold never removes leaves") {
    Toy t = random_toy(500, 6, 8, 2, 16);
    std::size_t previous = 0;
    for (double g : {1e-2, 1e-4, 0.0}) {
      TrainConfig cfg;
      cfg.trees = 5;
      cfg.min_gain = g;
      const std::size_t leaves = train_forest(t.set, cfg).total_leaves();
      CHECK(leaves >= previous);
      previous = leaves;
    }
  }

  TEST_CASE("binary round trip preserves predictions") {
    Toy t = random_toy(300, 7, 5, 3, 17);
    TrainConfig cfg;
    cfg.trees = 6;
    const RandomForest forest = train_forest(t.set, cfg);
    const std::string bytes = bytes_of(forest);
    CHECK(bytes.substr(0, 4) == "RFCL");
    std::istringstream in(bytes);
    const RandomForest back = read_forest(in);
    CHECK(back.config == forest.config);
    CHECK(back.task_ids == forest.task_ids);
    CHECK(bytes_of(back) == bytes);
    Rng rng(18);
    for (int i = 0; i < 300; ++i) {
      std::vector<double> f(7);
      for (auto& v : f) v = uniform01(rng);
      const int task = static_cast<int>(uniform01(rng) * 4);
      CHECK(back.predict(f, task).action == forest.predict(f, task).action);
    }
    std::istringstream bad(std::string("RFCX") + bytes.substr(4));
    CHECK_THROWS(read_forest(bad));
    std::istringstream cut(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS(read_forest(cut));
  }

  TEST_CASE("text dump lists every tree") {
    Toy t = separable(40, 2, 19);
    TrainConfig cfg;
    cfg.trees = 3;
    std::ostringstream out;
    dump_forest_text(out, train_forest(t.set, cfg));
    const std::string text = out.str();
    std::size_t trees = 0;
    for (std::size_t pos = text.find("tree"); pos != std::string::npos; pos = text.find("tree", pos + 1)) ++trees;
    CHECK(trees >= 3);
  }

  TEST_CASE("invalid configuration and data are rejected") {
    TrainConfig cfg;
    cfg.trees = 0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.subsample = 0.0;
    CHECK_THROWS(cfg.validate());
    Toy t(2);
    t.set.actions.push_back({});
    CHECK_THROWS(t.set.validate());
  }
}
