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

#include "domforest/expert.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>

using namespace domforest;

namespace {

const Vec3 kV2{0.0, 0.35, 0.0};
const Vec3 kV3{0.3, 0.35, 0.0};

void check_vec(const Vec3& got, const Vec3& want, double tol) {
  CHECK((got - want).norm() <= tol);
}

}  // namespace

TEST_SUITE("expert") {
  TEST_CASE("straight task maps the initial hands onto the initial grasp") {
    const GraspAction a = expert_action(TaskSpec::of(TaskKind::Straight), kV2, kV3);
    check_vec(a.v0(), {0.0, 0.0, 0.0}, 1e-9);
    check_vec(a.v1(), {0.3, 0.0, 0.0}, 1e-9);
  }

  TEST_CASE("bend and twist targets for the initial hands") {
    const GraspAction bend = expert_action(TaskSpec::of(TaskKind::Bend), kV2, kV3);
    check_vec(bend.v0(), {0.0, 0.175, 0.0}, 1e-12);
    check_vec(bend.v1(), {0.3, 0.175, 0.0}, 1e-12);

    // Independent evaluation: d1 = z x e / |z x e|, d2 = e x (z x e) / |.|.
    const Vec3 z(0, 0, -1), e = kV3 - kV2;
    const Vec3 d1 = z.cross(e).normalized(), d2 = e.cross(z.cross(e)).normalized();
    const Vec3 mid = 0.5 * (kV2 + kV3);
    const GraspAction twist = expert_action(TaskSpec::of(TaskKind::Twist), kV2, kV3);
    check_vec(twist.v0(), mid + 0.31 * d1 + 0.15 * d2, 1e-12);
    check_vec(twist.v1(), mid + 0.31 * d1 - 0.15 * d2, 1e-12);
    check_vec(twist.v0(), {0.15, 0.04, -0.15}, 1e-12);
    check_vec(twist.v1(), {0.15, 0.04, 0.15}, 1e-12);
  }

  TEST_CASE("expert is equivariant under z rotation and translation") {
    Rng rng(77);
    for (int i = 0; i < 100; ++i) {
      const Vec3 v2(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.3, 0.3));
      const Vec3 v3 = v2 + Vec3(uniform(rng, 0.05, 0.3), uniform(rng, -0.2, 0.2), uniform(rng, -0.1, 0.1));
      const double phi = uniform(rng, -3.14, 3.14);
      const Eigen::Matrix3d rot = Eigen::AngleAxisd(phi, Vec3::UnitZ()).toRotationMatrix();
      const Vec3 t(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
      for (TaskKind k : {TaskKind::Straight, TaskKind::Bend, TaskKind::Twist}) {
        const TaskSpec spec = TaskSpec::of(k);
        const GraspAction base = expert_action(spec, v2, v3);
        const GraspAction rotated = expert_action(spec, rot * v2, rot * v3);
        check_vec(rotated.v0(), rot * base.v0(), 1e-9);
        check_vec(rotated.v1(), rot * base.v1(), 1e-9);
        const GraspAction moved = expert_action(spec, v2 + t, v3 + t);
        check_vec(moved.v0(), base.v0() + t, 1e-12);
        check_vec(moved.v1(), base.v1() + t, 1e-12);
        if (k != TaskKind::Twist) {
          CHECK(std::abs((base.v0() - base.v1()).norm() - (v2 - v3).norm()) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("degenerate hands are rejected") {
    const TaskSpec spec = TaskSpec::of(TaskKind::Straight);
    CHECK_THROWS_AS(expert_action(spec, kV2, kV2), DegenerateHandsError);
    CHECK_THROWS_AS(expert_action(spec, kV2, kV2 + Vec3(0, 0, 0.2)), DegenerateHandsError);
    CHECK_THROWS_AS(expert_action(spec, kV2, kV2 + Vec3(1e-7, 0, 0)), DegenerateHandsError);
    TaskSpec bad = spec;
    bad.axis = {0, 0, 2};
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("hand stepping") {
    HumanMotionModel model(HumanMotionParams{}, 5);
    const HandPair start{kV2, kV3};

    SUBCASE("a hand already at its waypoint stays put") {
      model.set_waypoint(start);
      const HandPair next = model.step(start, 0.01);
      CHECK(next.v2 == start.v2);
      CHECK(next.v3 == start.v3);
    }

    SUBCASE("a distant waypoint along x moves the hand by the speed limit") {
      const Vec3 from(0.0, 0.3, 0.0);
      const Vec3 got = clamp_step(from, from + Vec3(1.0, 0, 0), 0.1 * 0.01);
      check_vec(got, from + Vec3(0.001, 0, 0), 1e-15);
      HandPair far{kV2 + Vec3(1, 0, 0), kV3 + Vec3(1, 0, 0)};
      model.set_waypoint(far);
      const HandPair next = model.step(start, 0.01);
      check_vec(next.v2, kV2 + Vec3(0.001, 0, 0), 1e-12);
      check_vec(next.v3, kV3 + Vec3(0.001, 0, 0), 1e-12);
    }

    SUBCASE("reaching both waypoints draws a new one") {
      model.set_waypoint(start);
      model.step(start, 0.01);
      CHECK(model.waypoints_reached() == 1);
      const HandPair w = model.waypoint();
      CHECK((w.v2 - start.v2).norm() + (w.v3 - start.v3).norm() > 0.0);
    }
  }

  TEST_CASE("sampled waypoint pairs respect the separation limit and the box") {
    HumanMotionParams hp;
    HumanMotionModel model(hp, 123);
    for (int i = 0; i < 10000; ++i) {
      const HandPair w = model.sample_waypoint();
      CHECK((w.v2 - w.v3).norm() <= 0.3);
      CHECK(hp.box.contains(w.v2, 1e-12));
      CHECK(hp.box.contains(w.v3, 1e-12));
      CHECK(hp.admissible(w));
    }
  }

  TEST_CASE("walking hands never exceed the separation limit, with or without perturbation") {
    for (double sigma : {0.0, 0.02}) {
      HumanMotionParams hp;
      hp.perturb_sigma = sigma;
      HumanMotionModel model(hp, 9);
      HandPair h{kV2, kV3};
      for (int i = 0; i < 5000; ++i) {
        h = model.step(h, 0.01);
        CHECK((h.v2 - h.v3).norm() <= 0.3 + 1e-12);
      }
      CHECK(model.waypoints_reached() > 0);
    }
  }

  TEST_CASE("separation projection shrinks about the midpoint") {
    const HandPair wide{{0, 0, 0}, {0.5, 0, 0}};
    const HandPair p = clamp_separation(wide, 0.3);
    CHECK((p.v2 - p.v3).norm() == doctest::Approx(0.3));
    check_vec(0.5 * (p.v2 + p.v3), {0.25, 0, 0}, 1e-15);
    const HandPair ok = clamp_separation(HandPair{kV2, kV3}, 0.3);
    CHECK(ok.v2 == kV2);
    CHECK(ok.v3 == kV3);
  }

  TEST_CASE("synchronized stepping keeps the edge a convex combination") {
    const HandPair from{kV2, kV3};
    const HandPair to{{0.1, 0.4, 0.1}, {0.25, 0.3, -0.1}};
    HandPair h = from;
    for (int i = 0; i < 400; ++i) {
      const HandPair n = step_hands_toward(h, to, 0.001);
      CHECK((n.v2 - h.v2).cwiseAbs().maxCoeff() <= 0.001 + 1e-15);
      CHECK((n.v3 - h.v3).cwiseAbs().maxCoeff() <= 0.001 + 1e-15);
      CHECK((n.v3 - n.v2).norm() <= 0.3 + 1e-12);
      h = n;
    }
    check_vec(h.v2, to.v2, 1e-12);
    check_vec(h.v3, to.v3, 1e-12);
  }

  TEST_CASE("motion parameters are validated") {
    HumanMotionParams hp;
    hp.speed_limit = 0.0;
    CHECK_THROWS(hp.validate());
    hp = {};
    hp.waypoints = 0;
    CHECK_THROWS(hp.validate());
  }
}
