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

#include "domforest/kernels/mean_shift.hpp"

#include "domforest/labeling.hpp"

#include <cmath>

namespace domforest::kernels {

namespace {

GraspAction climb(std::span<const GraspAction> actions, GraspAction x, double bandwidth,
                  double tolerance, int max_iterations) {
  for (int it = 0; it < max_iterations; ++it) {
    const GraspAction next = shift_once(actions, x, bandwidth);
    const double step = std::sqrt(squared_distance(next, x));
    x = next;
    if (step < tolerance) break;
  }
  return x;
}

}  // namespace

namespace reference {

std::vector<GraspAction> climb_modes(std::span<const GraspAction> actions, double bandwidth,
                                     double tolerance, int max_iterations) {
  std::vector<GraspAction> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(climb(actions, a, bandwidth, tolerance, max_iterations));
  return out;
}

}  // namespace reference

namespace parallel {

std::vector<GraspAction> climb_modes(std::span<const GraspAction> actions, double bandwidth,
                                     double tolerance, int max_iterations) {
  std::vector<GraspAction> out(actions.size());
  const auto n = static_cast<long>(actions.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) out[i] = climb(actions, actions[i], bandwidth, tolerance, max_iterations);
  return out;
}

}  // namespace parallel

}  // namespace domforest::kernels
