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

namespace domforest::kernels {

// Moves every action to its flat-kernel mode; the shift always averages the original points.

namespace reference {
std::vector<GraspAction> climb_modes(std::span<const GraspAction> actions, double bandwidth,
                                     double tolerance, int max_iterations);
}  // namespace reference

namespace parallel {
std::vector<GraspAction> climb_modes(std::span<const GraspAction> actions, double bandwidth,
                                     double tolerance, int max_iterations);
}  // namespace parallel

}  // namespace domforest::kernels
