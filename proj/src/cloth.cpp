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

#include "domforest/cloth.hpp"

#include "domforest/kernels/spring_forces.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace domforest {

namespace {

void add_spring(ClothMesh& mesh, const std::vector<Vec3>& x, int a, int b, SpringKind kind) {
  mesh.springs.push_back(Spring{a, b, (x[b] - x[a]).norm(), kind});
}

void build_adjacency(ClothMesh& mesh) {
  const auto n = mesh.vertex_count();
  std::vector<int> counts(n, 0);
  for (const auto& s : mesh.springs) {
    ++counts[s.a];
    ++counts[s.b];
  }
  mesh.incident_offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) mesh.incident_offsets[v + 1] = mesh.incident_offsets[v] + counts[v];
  mesh.incident.assign(mesh.incident_offsets.back(), 0);
  std::vector<int> cursor(mesh.incident_offsets.begin(), mesh.incident_offsets.end() - 1);
  for (int s = 0; s < static_cast<int>(mesh.springs.size()); ++s) {
    mesh.incident[cursor[mesh.springs[s].a]++] = s;
    mesh.incident[cursor[mesh.springs[s].b]++] = s;
  }
}

Vec3 clamp_per_axis(const Vec3& delta, double limit) {
  return delta.cwiseMax(Vec3::Constant(-limit)).cwiseMin(Vec3::Constant(limit));
}

void build_strain_schedule(ClothMesh& mesh) {
  // Hop distance from the nearest driven corner; springs are then relaxed from the corners
  // inward and each correction is carried by the endpoint farther from a corner.
  const auto n = mesh.vertex_count();
  std::vector<int> hops(n, -1);
  std::vector<int> frontier(mesh.corners.begin(), mesh.corners.end());
  for (int c : frontier) hops[c] = 0;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int v : frontier) {
      for (int k = mesh.incident_offsets[v]; k < mesh.incident_offsets[v + 1]; ++k) {
        const auto& s = mesh.springs[mesh.incident[k]];
        if (s.kind == SpringKind::Bend) continue;
        const int u = s.a == v ? s.b : s.a;
        if (hops[u] < 0) {
          hops[u] = hops[v] + 1;
          next.push_back(u);
        }
      }
    }
    frontier.swap(next);
  }
  const int m = static_cast<int>(mesh.springs.size());
  mesh.strain_order.resize(m);
  mesh.strain_share.resize(m);
  for (int i = 0; i < m; ++i) {
    mesh.strain_order[i] = i;
    const auto& s = mesh.springs[i];
    const bool pa = mesh.is_corner(s.a), pb = mesh.is_corner(s.b);
    double share_a = 0.5;
    if (pa && pb) share_a = 0.0;
    else if (pa) share_a = 0.0;
    else if (pb) share_a = 1.0;
    mesh.strain_share[i] = {share_a, (pa && pb) ? 0.0 : 1.0 - share_a};
  }
  std::stable_sort(mesh.strain_order.begin(), mesh.strain_order.end(), [&](int p, int q) {
    const auto& sp = mesh.springs[p];
    const auto& sq = mesh.springs[q];
    return std::min(hops[sp.a], hops[sp.b]) < std::min(hops[sq.a], hops[sq.b]);
  });
}

void project_strain(const ClothMesh& mesh, const SimParams& params, std::vector<Vec3>& x) {
  const double slack = 1.0 + 1e-12;
  for (int iter = 0; iter < params.strain_iterations; ++iter) {
    bool violated = false;
    for (int idx : mesh.strain_order) {
      const auto& s = mesh.springs[idx];
      const Vec3 d = x[s.b] - x[s.a];
      const double limit = params.max_stretch * s.rest * slack;
      const double len2 = d.squaredNorm();
      if (len2 <= limit * limit) continue;
      const auto [wa, wb] = mesh.strain_share[idx];
      if (wa == 0.0 && wb == 0.0) continue;
      violated = true;
      const double len = std::sqrt(len2);
      const Vec3 corr = d * ((len - params.max_stretch * s.rest) / len);
      x[s.a] += wa * corr;
      x[s.b] -= wb * corr;
    }
    if (!violated) break;
  }
}

}  // namespace

std::vector<std::array<int, 3>> ClothMesh::triangles() const {
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(nx - 1) * (ny - 1) * 2);
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = index(i, j), b = index(i + 1, j), c = index(i + 1, j + 1), d = index(i, j + 1);
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  }
  return tris;
}

void SimParams::validate() const {
  std::ostringstream err;
  if (!(dt > 0.0)) err << "dt must be > 0; ";
  if (substeps < 1) err << "substeps must be >= 1; ";
  if (!(robot_speed_limit > 0.0) || !(human_speed_limit > 0.0)) err << "speed limits must be > 0; ";
  if (!(max_stretch >= 1.0)) err << "max_stretch must be >= 1; ";
  if (!(vertex_mass > 0.0)) err << "vertex_mass must be > 0; ";
  if (k_structural < 0.0 || k_shear < 0.0 || k_bend < 0.0) err << "stiffness must be >= 0; ";
  if (damping < 0.0) err << "damping must be >= 0; ";
  if (strain_iterations < 0) err << "strain_iterations must be >= 0; ";
  if (!gravity.allFinite()) err << "gravity must be finite; ";
  if (!err.str().empty()) throw std::invalid_argument("invalid SimParams: " + err.str());
}

std::pair<ClothMesh, ClothState> make_cloth(int nx, int ny, double width_m, double height_m) {
  if (nx < 2 || ny < 2) {
    throw std::invalid_argument("make_cloth: grid must be at least 2x2, got " + std::to_string(nx) +
                                "x" + std::to_string(ny));
  }
  if (!(width_m > 0.0) || !(height_m > 0.0)) {
    throw std::invalid_argument("make_cloth: cloth dimensions must be positive");
  }
  ClothMesh mesh;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.width_m = width_m;
  mesh.height_m = height_m;

  ClothState state;
  state.positions.resize(mesh.vertex_count());
  state.velocities.assign(mesh.vertex_count(), Vec3::Zero());
  for (int j = 0; j < ny; ++j) {
    const double y = (j == ny - 1) ? height_m : height_m * j / (ny - 1);
    for (int i = 0; i < nx; ++i) {
      const double x = (i == nx - 1) ? width_m : width_m * i / (nx - 1);
      state.positions[mesh.index(i, j)] = Vec3(x, y, 0.0);
    }
  }

  const auto& x = state.positions;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v = mesh.index(i, j);
      if (i + 1 < nx) add_spring(mesh, x, v, mesh.index(i + 1, j), SpringKind::Structural);
      if (j + 1 < ny) add_spring(mesh, x, v, mesh.index(i, j + 1), SpringKind::Structural);
      if (i + 1 < nx && j + 1 < ny) {
        add_spring(mesh, x, v, mesh.index(i + 1, j + 1), SpringKind::Shear);
        add_spring(mesh, x, mesh.index(i + 1, j), mesh.index(i, j + 1), SpringKind::Shear);
      }
      if (i + 2 < nx) add_spring(mesh, x, v, mesh.index(i + 2, j), SpringKind::Bend);
      if (j + 2 < ny) add_spring(mesh, x, v, mesh.index(i, j + 2), SpringKind::Bend);
    }
  }
  mesh.corners = {mesh.index(0, 0), mesh.index(nx - 1, 0), mesh.index(0, ny - 1),
                  mesh.index(nx - 1, ny - 1)};
  build_adjacency(mesh);
  build_strain_schedule(mesh);
  return {std::move(mesh), std::move(state)};
}

ClothState step(const ClothState& state, const ClothMesh& mesh, const SimParams& params,
                const GraspAction& robot_target, const HandPair& human_target) {
  const auto n = mesh.vertex_count();
  if (state.positions.size() != n || state.velocities.size() != n) {
    throw SimulationError("step: state does not match mesh vertex count");
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!state.positions[v].allFinite() || !state.velocities[v].allFinite()) {
      throw SimulationError("step: non-finite cloth state at vertex " + std::to_string(v));
    }
  }
  for (double a : robot_target.values) {
    if (!std::isfinite(a)) throw SimulationError("step: non-finite robot target");
  }
  if (!human_target.v2.allFinite() || !human_target.v3.allFinite()) {
    throw SimulationError("step: non-finite human target");
  }

  const std::array<Vec3, 4> targets = {robot_target.v0(), robot_target.v1(), human_target.v2,
                                       human_target.v3};
  const std::array<double, 4> limits = {params.robot_speed_limit, params.robot_speed_limit,
                                        params.human_speed_limit, params.human_speed_limit};
  std::array<Vec3, 4> start, delta;
  for (int c = 0; c < 4; ++c) {
    start[c] = state.positions[mesh.corners[c]];
    delta[c] = clamp_per_axis(targets[c] - start[c], limits[c] * params.dt);
  }

  ClothState next = state;
  auto& x = next.positions;
  auto& v = next.velocities;
  std::vector<Vec3> forces(n);
  std::vector<Vec3> before(n);
  const double h = params.dt / params.substeps;
  const double damp = 1.0 / (1.0 + params.damping * h);
  const double inv_mass = 1.0 / params.vertex_mass;

  for (int s = 1; s <= params.substeps; ++s) {
    kernels::parallel::spring_forces(mesh, params, x, forces);
    for (std::size_t i = 0; i < n; ++i) {
      if (mesh.is_corner(static_cast<int>(i))) continue;
      v[i] = (v[i] + h * (forces[i] * inv_mass + params.gravity)) * damp;
      x[i] += h * v[i];
    }
    const double frac = static_cast<double>(s) / params.substeps;
    for (int c = 0; c < 4; ++c) {
      x[mesh.corners[c]] = (s == params.substeps) ? Vec3(start[c] + delta[c]) : Vec3(start[c] + frac * delta[c]);
      v[mesh.corners[c]] = delta[c] / params.dt;
    }
    before = x;
    project_strain(mesh, params, x);
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] != before[i]) v[i] += (x[i] - before[i]) / h;
    }
  }
  next.time = state.time + params.dt;

  for (std::size_t i = 0; i < n; ++i) {
    if (!x[i].allFinite() || x[i].norm() > 10.0) {
      std::ostringstream msg;
      msg << "cloth simulation diverged at t=" << next.time << " s (vertex " << i
          << "); try a smaller dt (dt=" << params.dt << ", substeps=" << params.substeps
          << ") or lower stiffness (structural=" << params.k_structural
          << ", shear=" << params.k_shear << ", bend=" << params.k_bend << ")";
      throw DivergenceError(msg.str());
    }
  }
  return next;
}

Corners corner_positions(const ClothState& state, const ClothMesh& mesh) {
  return {state.positions[mesh.corners[0]], state.positions[mesh.corners[1]],
          state.positions[mesh.corners[2]], state.positions[mesh.corners[3]]};
}

HandPair hand_positions(const ClothState& state, const ClothMesh& mesh) {
  return {state.positions[mesh.corners[2]], state.positions[mesh.corners[3]]};
}

GraspAction robot_positions(const ClothState& state, const ClothMesh& mesh) {
  return GraspAction::from_corners(state.positions[mesh.corners[0]], state.positions[mesh.corners[1]]);
}

double kinetic_energy(const ClothState& state, const SimParams& params) {
  double e = 0.0;
  for (const auto& v : state.velocities) e += v.squaredNorm();
  return 0.5 * params.vertex_mass * e;
}

double elastic_energy(const ClothState& state, const ClothMesh& mesh, const SimParams& params) {
  double e = 0.0;
  for (const auto& s : mesh.springs) {
    const double ext = (state.positions[s.b] - state.positions[s.a]).norm() - s.rest;
    e += 0.5 * params.stiffness(s.kind) * ext * ext;
  }
  return e;
}

double max_spring_strain(const ClothState& state, const ClothMesh& mesh) {
  double worst = 0.0;
  for (const auto& s : mesh.springs) {
    worst = std::max(worst, (state.positions[s.b] - state.positions[s.a]).norm() / s.rest);
  }
  return worst;
}

}  // namespace domforest
