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
#include "domforest/rng.hpp"
#include "domforest/rollout.hpp"

#include <doctest.h>

#include <sstream>

using namespace domforest;

namespace {

const Vec3 kV0{0.0, 0.0, 0.0};
const Vec3 kV1{0.3, 0.0, 0.0};
const Vec3 kV2{0.0, 0.35, 0.0};
const Vec3 kV3{0.3, 0.35, 0.0};

double max_ratio(const ClothState& st, const ClothMesh& mesh) {
  double worst = 0.0;
  for (const auto& s : mesh.springs) {
    worst = std::max(worst, (st.positions[s.b] - st.positions[s.a]).norm() / s.rest);
  }
  return worst;
}

}  // namespace

TEST_SUITE("cloth-sim") {
  TEST_CASE("a 2x2 grid is exactly the four grasp corners") {
    auto [mesh, st] = make_cloth(2, 2);
    const Corners c = corner_positions(st, mesh);
    CHECK(c.v0 == kV0);
    CHECK(c.v1 == kV1);
    CHECK(c.v2 == kV2);
    CHECK(c.v3 == kV3);
  }

  TEST_CASE("the centre vertex of a 3x3 grid sits at the rest midpoint") {
    auto [mesh, st] = make_cloth(3, 3);
    const Vec3 centre = st.positions[mesh.index(1, 1)];
    CHECK(centre.x() == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(centre.y() == doctest::Approx(0.175).epsilon(1e-15));
    CHECK(centre.z() == 0.0);
  }

  TEST_CASE("fresh cloth is at rest and every rest length is positive") {
    for (auto [nx, ny] : {std::pair{2, 2}, std::pair{5, 3}, std::pair{21, 24}}) {
      auto [mesh, st] = make_cloth(nx, ny);
      for (const auto& v : st.velocities) CHECK(v == Vec3::Zero());
      for (const auto& s : mesh.springs) CHECK(s.rest > 0.0);
      const Corners c = corner_positions(st, mesh);
      CHECK(c.v0 == kV0);
      CHECK(c.v3 == kV3);
    }
  }

  TEST_CASE("grids smaller than 2x2 are rejected") {
    CHECK_THROWS_AS(make_cloth(1, 5), std::invalid_argument);
    CHECK_THROWS_AS(make_cloth(4, 0), std::invalid_argument);
  }

  TEST_CASE("robot corners are the y = 0 edge and human corners the far edge") {
    auto [mesh, st] = make_cloth(21, 24);
    const HandPair h = hand_positions(st, mesh);
    const GraspAction r = robot_positions(st, mesh);
    CHECK(r.v0() == kV0);
    CHECK(r.v1() == kV1);
    CHECK(h.v2 == kV2);
    CHECK(h.v3 == kV3);
  }

  TEST_CASE("without gravity the rest configuration is a fixed point") {
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    p.gravity = Vec3::Zero();
    ClothState s = st;
    for (int i = 0; i < 5; ++i) s = step(s, mesh, p, robot_positions(st, mesh), hand_positions(st, mesh));
    CHECK(s.positions == st.positions);
    for (const auto& v : s.velocities) CHECK(v == Vec3::Zero());
    CHECK(s.time == doctest::Approx(5 * p.dt));
  }

  TEST_CASE("a distant target moves the corner by exactly speed_limit * dt") {
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    GraspAction target = robot_positions(st, mesh);
    target[0] += 1.0;
    const ClothState next = step(st, mesh, p, target, hand_positions(st, mesh));
    const Vec3 moved = next.positions[mesh.corners[0]] - st.positions[mesh.corners[0]];
    CHECK(moved.x() == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(moved.y() == 0.0);
    CHECK(moved.z() == 0.0);
  }

  TEST_CASE("pinned cloth sags downwards under gravity") {
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    const auto r = robot_positions(st, mesh);
    const auto h = hand_positions(st, mesh);
    ClothState s = st;
    for (int i = 0; i < 100; ++i) s = step(s, mesh, p, r, h);
    CHECK(s.time == doctest::Approx(1.0));
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      if (mesh.is_corner(static_cast<int>(v))) {
        CHECK(s.positions[v] == st.positions[v]);
      } else {
        CHECK(s.positions[v].z() < 0.0);
      }
    }
  }

  TEST_CASE("after a pinned no-gravity step the corners are unchanged") {
    auto [mesh, st] = make_cloth(4, 4);
    SimParams p;
    p.gravity = Vec3::Zero();
    const ClothState next = step(st, mesh, p, robot_positions(st, mesh), hand_positions(st, mesh));
    const Corners a = corner_positions(st, mesh), b = corner_positions(next, mesh);
    CHECK(a.v0 == b.v0);
    CHECK(a.v1 == b.v1);
    CHECK(a.v2 == b.v2);
    CHECK(a.v3 == b.v3);
  }

  TEST_CASE("stepping is bit-for-bit deterministic") {
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    GraspAction target = GraspAction::from_corners({0.05, -0.02, 0.03}, {0.33, 0.01, -0.02});
    const HandPair hands{{0.02, 0.37, 0.05}, {0.31, 0.33, -0.04}};
    ClothState a = st, b = st;
    for (int i = 0; i < 30; ++i) {
      a = step(a, mesh, p, target, hands);
      b = step(b, mesh, p, target, hands);
    }
    CHECK(a == b);
  }

  TEST_CASE("corner displacement never exceeds the per-axis speed bound") {
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    Rng rng(17);
    ClothState s = st;
    for (int i = 0; i < 200; ++i) {
      GraspAction target;
      for (auto& t : target.values) t = uniform(rng, -0.2, 0.5);
      const HandPair hands{{uniform(rng, -0.1, 0.1), uniform(rng, 0.3, 0.4), uniform(rng, -0.1, 0.1)},
                           {uniform(rng, 0.2, 0.4), uniform(rng, 0.3, 0.4), uniform(rng, -0.1, 0.1)}};
      const ClothState next = step(s, mesh, p, target, hands);
      for (int c = 0; c < 4; ++c) {
        const double moved = (next.positions[mesh.corners[c]] - s.positions[mesh.corners[c]]).lpNorm<Eigen::Infinity>();
        const double limit = (c < 2 ? p.robot_speed_limit : p.human_speed_limit) * p.dt;
        CHECK(moved <= limit + 1e-12);
      }
      s = next;
    }
  }

  TEST_CASE("corners land on their targets once within reach") {
    auto [mesh, st] = make_cloth(6, 6);
    SimParams p;
    GraspAction target = robot_positions(st, mesh);
    target[1] += 0.0004;
    const ClothState next = step(st, mesh, p, target, hand_positions(st, mesh));
    CHECK(robot_positions(next, mesh) == target);
  }

  TEST_CASE("strain limiting holds whenever the corner targets are mutually reachable") {
    // Scenarios where the four driven corners never ask for more than the stretch limit.
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    const double bound = p.max_stretch * (1.0 + 1e-9);
    const GraspAction r = robot_positions(st, mesh);
    const HandPair h = hand_positions(st, mesh);
    ClothState s = st;

    SUBCASE("pinned at rest") {
      for (int i = 0; i < 200; ++i) {
        s = step(s, mesh, p, r, h);
        REQUIRE(max_ratio(s, mesh) <= bound);
      }
    }
    SUBCASE("rigid translation") {
      const Vec3 d(0.2, 0.1, -0.2);
      const GraspAction r2 = GraspAction::from_corners(r.v0() + d, r.v1() + d);
      const HandPair h2{h.v2 + d, h.v3 + d};
      for (int i = 0; i < 400; ++i) {
        s = step(s, mesh, p, r2, h2);
        REQUIRE(max_ratio(s, mesh) <= bound);
      }
    }
    SUBCASE("corners drawn together") {
      const GraspAction r2 = GraspAction::from_corners(r.v0() + Vec3(0.05, 0.05, 0.0), r.v1() + Vec3(-0.05, 0.05, 0.0));
      for (int i = 0; i < 300; ++i) {
        s = step(s, mesh, p, r2, h);
        REQUIRE(max_ratio(s, mesh) <= bound);
      }
    }
    CHECK(max_spring_strain(s, mesh) == doctest::Approx(max_ratio(s, mesh)).epsilon(1e-14));
  }

  TEST_CASE("kinetic energy never grows when released from rest without forcing") {
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    p.gravity = Vec3::Zero();
    ClothState s = st;
    double previous = kinetic_energy(s, p);
    for (int i = 0; i < 50; ++i) {
      s = step(s, mesh, p, robot_positions(st, mesh), hand_positions(st, mesh));
      const double ke = kinetic_energy(s, p);
      CHECK(ke <= previous + 1e-9);
      previous = ke;
    }
  }

  TEST_CASE("a perturbed cloth with stationary corners sheds its kinetic energy") {
    // Spring oscillation trades kinetic and elastic energy step to step, so the check is on
    // the running envelope: the peak over each window must fall below the previous peak.
    auto [mesh, st] = make_cloth(21, 24);
    SimParams p;
    p.gravity = Vec3::Zero();
    Rng rng(3);
    ClothState s = st;
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      if (!mesh.is_corner(static_cast<int>(v))) s.positions[v].z() += uniform(rng, -0.005, 0.005);
    }
    const auto r = robot_positions(st, mesh);
    const auto h = hand_positions(st, mesh);
    double previous_peak = std::numeric_limits<double>::infinity();
    double first_peak = 0.0;
    for (int window = 0; window < 8; ++window) {
      double peak = 0.0;
      for (int i = 0; i < 50; ++i) {
        s = step(s, mesh, p, r, h);
        peak = std::max(peak, kinetic_energy(s, p));
      }
      CHECK(peak < previous_peak);
      if (window == 0) first_peak = peak;
      previous_peak = peak;
    }
    CHECK(previous_peak < 1e-2 * first_peak);
  }

  TEST_CASE("non-finite input is rejected") {
    auto [mesh, st] = make_cloth(4, 4);
    SimParams p;
    GraspAction bad = robot_positions(st, mesh);
    bad[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step(st, mesh, p, bad, hand_positions(st, mesh)), SimulationError);
    ClothState broken = st;
    broken.velocities[5].x() = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(step(broken, mesh, p, robot_positions(st, mesh), hand_positions(st, mesh)), SimulationError);
  }

  TEST_CASE("an unstable configuration raises a divergence error naming dt and stiffness") {
    auto [mesh, st] = make_cloth(10, 10);
    SimParams p;
    p.substeps = 1;
    p.k_structural = 5e5;
    p.strain_iterations = 0;
    p.max_stretch = 1e6;
    ClothState s = st;
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) s.positions[v].z() += 0.001 * static_cast<double>(v % 3);
    std::string message;
    try {
      for (int i = 0; i < 200; ++i) s = step(s, mesh, p, robot_positions(st, mesh), hand_positions(st, mesh));
    } catch (const DivergenceError& e) {
      message = e.what();
    }
    REQUIRE_FALSE(message.empty());
    CHECK(message.find("dt=") != std::string::npos);
    CHECK(message.find("structural=") != std::string::npos);
  }

  TEST_CASE("invalid parameters are reported") {
    SimParams p;
    p.dt = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.max_stretch = 0.9;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.substeps = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_NOTHROW(SimParams{}.validate());
  }

  TEST_CASE("trajectory dump has a header and one row per simulation step") {
    EnvConfig cfg;
    cfg.nx = 6;
    cfg.ny = 6;
    auto extractor = std::make_shared<const FeatureExtractor>(cfg.features);
    Environment env(cfg, extractor, TaskSpec::of(TaskKind::Straight), 5);
    env.set_recording(true);
    env.advance(robot_positions(env.state(), env.mesh()));
    env.advance(robot_positions(env.state(), env.mesh()));
    REQUIRE(env.trajectory().size() == static_cast<std::size_t>(2 * cfg.sim_steps_per_control));
    std::ostringstream out;
    write_trajectory_csv(out, env.trajectory());
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("time,v0x,v0y,v0z", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) {
      CHECK(std::count(line.begin(), line.end(), ',') == 18);
      ++rows;
    }
    CHECK(rows == 2 * cfg.sim_steps_per_control);
    CHECK(env.trajectory().back().time == doctest::Approx(2 * cfg.control_period()));
  }
}
