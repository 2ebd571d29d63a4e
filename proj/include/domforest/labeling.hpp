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

#include <span>
#include <vector>

namespace domforest {

struct ActionLabel {
  int cluster = 0;
  GraspAction mode;
};

struct MeanShiftOptions {
  double tolerance = 1e-6;
  int max_iterations = 200;
};

struct MeanShiftResult {
  std::vector<ActionLabel> labels;  // one per input action
  std::vector<GraspAction> modes;   // indexed by cluster id
  std::vector<std::size_t> sizes;   // members per cluster
};

/// Flat-kernel mean shift. Each action climbs to its mode; converged points closer than
/// bandwidth / 2 are merged transitively. Cluster ids are contiguous and ordered by mode.
MeanShiftResult mean_shift(std::span<const GraspAction> actions, double bandwidth,
                           const MeanShiftOptions& opts = {});

/// Mean of all actions within `bandwidth` of `point`; returns `point` if none are.
GraspAction shift_once(std::span<const GraspAction> actions, const GraspAction& point, double bandwidth);

/// Per-task clustering folded into one dense label space: (task, cluster) -> joint id.
struct JointLabels {
  std::vector<int> labels;
  int count = 0;
  std::vector<int> task_of_label;
  std::vector<int> cluster_of_label;
};

JointLabels label_by_task(std::span<const GraspAction> actions, std::span<const int> tasks,
                          double bandwidth, const MeanShiftOptions& opts = {});

}  // namespace domforest
