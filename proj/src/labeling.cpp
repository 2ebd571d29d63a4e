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

#include "domforest/labeling.hpp"

#include "domforest/kernels/mean_shift.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace domforest {

GraspAction shift_once(std::span<const GraspAction> actions, const GraspAction& point, double bandwidth) {
  const double r2 = bandwidth * bandwidth;
  // Offsets from the query point are summed so that a window of identical actions
  // returns that action bit for bit.
  std::array<double, kActionDim> sum{};
  std::size_t count = 0;
  for (const auto& a : actions) {
    if (squared_distance(a, point) > r2) continue;
    for (std::size_t k = 0; k < kActionDim; ++k) sum[k] += a[k] - point[k];
    ++count;
  }
  if (count == 0) return point;
  GraspAction mean;
  for (std::size_t k = 0; k < kActionDim; ++k) mean[k] = point[k] + sum[k] / static_cast<double>(count);
  return mean;
}

namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a), b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

MeanShiftResult mean_shift(std::span<const GraspAction> actions, double bandwidth,
                           const MeanShiftOptions& opts) {
  if (actions.empty()) throw std::invalid_argument("mean_shift: no actions");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("mean_shift: bandwidth must be > 0");
  const auto converged =
      kernels::parallel::climb_modes(actions, bandwidth, opts.tolerance, opts.max_iterations);
  const std::size_t n = converged.size();

  // Transitive merge of converged points, so the partition does not depend on input order.
  const double merge2 = 0.25 * bandwidth * bandwidth;
  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (squared_distance(converged[i], converged[j]) < merge2) sets.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[sets.find(i)].push_back(i);

  struct Group {
    GraspAction mode;
    std::vector<std::size_t> members;
  };
  std::vector<Group> clusters;
  for (auto& [root, members] : groups) {
    Group g;
    const GraspAction& anchor = converged[members.front()];
    for (std::size_t k = 0; k < kActionDim; ++k) {
      double s = 0.0;
      for (auto i : members) s += converged[i][k] - anchor[k];
      g.mode[k] = anchor[k] + s / static_cast<double>(members.size());
    }
    g.members = std::move(members);
    clusters.push_back(std::move(g));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Group& a, const Group& b) { return a.mode.values < b.mode.values; });

  MeanShiftResult result;
  result.labels.resize(n);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    result.modes.push_back(clusters[c].mode);
    result.sizes.push_back(clusters[c].members.size());
    for (auto i : clusters[c].members) result.labels[i] = ActionLabel{static_cast<int>(c), clusters[c].mode};
  }
  return result;
}

JointLabels label_by_task(std::span<const GraspAction> actions, std::span<const int> tasks,
                          double bandwidth, const MeanShiftOptions& opts) {
  if (actions.size() != tasks.size()) throw std::invalid_argument("label_by_task: size mismatch");
  std::map<int, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < tasks.size(); ++i) by_task[tasks[i]].push_back(i);

  JointLabels out;
  out.labels.assign(actions.size(), -1);
  for (const auto& [task, rows] : by_task) {
    std::vector<GraspAction> subset;
    subset.reserve(rows.size());
    for (auto i : rows) subset.push_back(actions[i]);
    const auto clusters = mean_shift(subset, bandwidth, opts);
    const int base = out.count;
    for (std::size_t c = 0; c < clusters.modes.size(); ++c) {
      out.task_of_label.push_back(task);
      out.cluster_of_label.push_back(static_cast<int>(c));
    }
    out.count += static_cast<int>(clusters.modes.size());
    for (std::size_t k = 0; k < rows.size(); ++k) out.labels[rows[k]] = base + clusters.labels[k].cluster;
  }
  return out;
}

}  // namespace domforest
