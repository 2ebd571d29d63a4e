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

#include <array>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace domforest {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the integrator blows up (some vertex leaves the 10 m sanity ball).
class DivergenceError : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

enum class SpringKind : int { Structural = 0, Shear = 1, Bend = 2 };

struct Spring {
  int a = 0;
  int b = 0;
  double rest = 0.0;
  SpringKind kind = SpringKind::Structural;
};

/// Rectangular vertex grid; vertex (i, j) sits at index j * nx + i, with i along x.
struct ClothMesh {
  int nx = 0;
  int ny = 0;
  double width_m = 0.0;
  double height_m = 0.0;
  std::vector<Spring> springs;
  /// Grid extremes: corners[0..1] are the robot edge (v0, v1), corners[2..3] the human edge.
  std::array<int, 4> corners{};
  /// CSR adjacency: springs touching vertex v are incident[incident_offsets[v] .. incident_offsets[v+1]).
  std::vector<int> incident_offsets;
  std::vector<int> incident;
  /// Strain-limiting schedule: spring visiting order and the share of each correction taken
  /// by endpoints a and b.
  std::vector<int> strain_order;
  std::vector<std::pair<double, double>> strain_share;

  int index(int i, int j) const { return j * nx + i; }
  std::size_t vertex_count() const { return static_cast<std::size_t>(nx) * ny; }
  bool is_corner(int v) const {
    return v == corners[0] || v == corners[1] || v == corners[2] || v == corners[3];
  }
  /// Two triangles per grid cell, counter-clockwise in the rest plane.
  std::vector<std::array<int, 3>> triangles() const;
};

struct ClothState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  double time = 0.0;

  bool operator==(const ClothState&) const = default;
};

struct SimParams {
  double dt = 0.01;
  int substeps = 16;
  double k_structural = 500.0;
  double k_shear = 250.0;
  double k_bend = 50.0;
  double damping = 2.0;
  Vec3 gravity{0.0, 0.0, -9.8};
  double max_stretch = 1.1;
  double robot_speed_limit = 0.1;
  double human_speed_limit = 0.1;
  /// Per-vertex mass (kg). Sized so the default stiffnesses stay stable at dt/substeps.
  double vertex_mass = 0.0005;
  /// Gauss-Seidel sweeps of the strain-limiting projection per substep.
  int strain_iterations = 100;

  double stiffness(SpringKind kind) const {
    switch (kind) {
      case SpringKind::Structural: return k_structural;
      case SpringKind::Shear: return k_shear;
      case SpringKind::Bend: return k_bend;
    }
    return 0.0;
  }
  void validate() const;
};

struct Corners {
  Vec3 v0, v1, v2, v3;
};

/// Flat cloth in the z = 0 plane with v0 at the origin, x along the robot edge.
std::pair<ClothMesh, ClothState> make_cloth(int nx, int ny, double width_m = 0.3,
                                            double height_m = 0.35);

/// One control interval of length params.dt. Corners are driven toward their targets with
/// per-axis displacement clamped to speed_limit * dt; everything else is integrated with
/// semi-implicit Euler plus a strain-limiting projection after each substep.
ClothState step(const ClothState& state, const ClothMesh& mesh, const SimParams& params,
                const GraspAction& robot_target, const HandPair& human_target);

Corners corner_positions(const ClothState& state, const ClothMesh& mesh);

HandPair hand_positions(const ClothState& state, const ClothMesh& mesh);

GraspAction robot_positions(const ClothState& state, const ClothMesh& mesh);

double kinetic_energy(const ClothState& state, const SimParams& params);

double elastic_energy(const ClothState& state, const ClothMesh& mesh, const SimParams& params);

/// Largest length / rest ratio over all springs.
double max_spring_strain(const ClothState& state, const ClothMesh& mesh);

}  // namespace domforest
