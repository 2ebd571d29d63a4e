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

#include "domforest/cloth.hpp"

#include <span>

namespace domforest::kernels {

// Elastic spring forces. Both variants overwrite `forces`.

namespace reference {
/// Serial scatter over springs.
void spring_forces(const ClothMesh& mesh, const SimParams& params, std::span<const Vec3> positions,
                   std::span<Vec3> forces);
}  // namespace reference

namespace parallel {
/// OpenMP gather over vertices through the incident-spring adjacency; no write conflicts, and
/// the per-vertex summation order is fixed, so the result does not depend on the thread count.
void spring_forces(const ClothMesh& mesh, const SimParams& params, std::span<const Vec3> positions,
                   std::span<Vec3> forces);
}  // namespace parallel

}  // namespace domforest::kernels
