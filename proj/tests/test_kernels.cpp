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

#include "domforest/kernels/gabor.hpp"
#include "domforest/kernels/mean_shift.hpp"
#include "domforest/kernels/spring_forces.hpp"
#include "domforest/rng.hpp"

#include <doctest.h>

using namespace domforest;

TEST_SUITE("kernels") {
  TEST_CASE("parallel spring forces equal the serial scatter") {
    auto [mesh, st] = make_cloth(21, 24);
    SimParams params;
    Rng rng(1);
    for (auto& p : st.positions) p += Vec3(uniform(rng, -0.01, 0.01), uniform(rng, -0.01, 0.01), uniform(rng, -0.01, 0.01));
    std::vector<Vec3> a(st.positions.size()), b(st.positions.size());
    kernels::reference::spring_forces(mesh, params, st.positions, a);
    kernels::parallel::spring_forces(mesh, params, st.positions, b);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, (a[i] - b[i]).norm());
      scale = std::max(scale, a[i].norm());
    }
    CHECK(scale > 0.0);
    CHECK(worst <= 1e-12 * scale);
  }

  TEST_CASE("FFT gabor responses equal direct convolution") {
    const GaborBank bank(64);
    AlignedImage img(64);
    Rng rng(2);
    for (int y = 8; y < 56; ++y) for (int x = 4; x < 60; ++x) img.at(x, y) = uniform01(rng);
    const auto a = kernels::reference::gabor_patch_means(img, bank, 8);
    const auto b = kernels::parallel::gabor_patch_means(img, bank, 8);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-10);
  }

  TEST_CASE("parallel mode climbing equals the serial climb") {
    Rng rng(3);
    std::vector<GraspAction> xs(500);
    for (auto& x : xs) for (auto& v : x.values) v = uniform(rng, 0.0, 0.15);
    const auto a = kernels::reference::climb_modes(xs, 0.05, 1e-9, 200);
    const auto b = kernels::parallel::climb_modes(xs, 0.05, 1e-9, 200);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}
