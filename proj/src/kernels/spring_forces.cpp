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

#include "domforest/kernels/spring_forces.hpp"

namespace domforest::kernels {

namespace {

inline Vec3 spring_force(const Spring& s, const SimParams& params, std::span<const Vec3> x) {
  const Vec3 d = x[s.b] - x[s.a];
  const double len = d.norm();
  if (len == 0.0) return Vec3::Zero();
  return d * (params.stiffness(s.kind) * (len - s.rest) / len);
}

}  // namespace

namespace reference {

void spring_forces(const ClothMesh& mesh, const SimParams& params, std::span<const Vec3> positions,
                   std::span<Vec3> forces) {
  for (auto& f : forces) f.setZero();
  for (const auto& s : mesh.springs) {
    const Vec3 f = spring_force(s, params, positions);
    forces[s.a] += f;
    forces[s.b] -= f;
  }
}

}  // namespace reference

namespace parallel {

void spring_forces(const ClothMesh& mesh, const SimParams& params, std::span<const Vec3> positions,
                   std::span<Vec3> forces) {
  const int n = static_cast<int>(mesh.vertex_count());
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    Vec3 acc = Vec3::Zero();
    for (int k = mesh.incident_offsets[v]; k < mesh.incident_offsets[v + 1]; ++k) {
      const Spring& s = mesh.springs[mesh.incident[k]];
      const Vec3 f = spring_force(s, params, positions);
      if (s.a == v) {
        acc += f;
      } else {
        acc -= f;
      }
    }
    forces[v] = acc;
  }
}

}  // namespace parallel

}  // namespace domforest::kernels
