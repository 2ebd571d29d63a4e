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

#include <benchmark/benchmark.h>

using namespace domforest;

namespace {

std::pair<ClothMesh, ClothState> jittered_cloth(int n) {
  auto [mesh, st] = make_cloth(n, n + 3);
  Rng rng(1);
  for (auto& p : st.positions) p.z() += uniform(rng, -0.01, 0.01);
  return {std::move(mesh), std::move(st)};
}

template <auto Kernel>
void BM_SpringForces(benchmark::State& state) {
  const auto [mesh, st] = jittered_cloth(static_cast<int>(state.range(0)));
  const SimParams params;
  std::vector<Vec3> forces(st.positions.size());
  for (auto _ : state) {
    Kernel(mesh, params, st.positions, forces);
    benchmark::DoNotOptimize(forces.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mesh.springs.size()));
}

AlignedImage noise_image(int canvas) {
  AlignedImage img(canvas);
  Rng rng(2);
  for (auto& v : img.pixels) v = uniform01(rng);
  return img;
}

template <auto Kernel>
void BM_Gabor(benchmark::State& state) {
  const int canvas = static_cast<int>(state.range(0));
  const GaborBank bank(canvas);
  const AlignedImage img = noise_image(canvas);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(img, bank, 8));
}

std::vector<GraspAction> random_actions(std::size_t n) {
  Rng rng(3);
  std::vector<GraspAction> xs(n);
  for (auto& x : xs) for (auto& v : x.values) v = uniform(rng, 0.0, 0.2);
  return xs;
}

template <auto Kernel>
void BM_MeanShift(benchmark::State& state) {
  const auto xs = random_actions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(xs, 0.03, 1e-6, 200));
}

}  // namespace

BENCHMARK(BM_SpringForces<kernels::reference::spring_forces>)->Name("spring_forces/reference")->Arg(21)->Arg(64);
BENCHMARK(BM_SpringForces<kernels::parallel::spring_forces>)->Name("spring_forces/parallel")->Arg(21)->Arg(64);
BENCHMARK(BM_Gabor<kernels::reference::gabor_patch_means>)->Name("gabor/reference")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gabor<kernels::parallel::gabor_patch_means>)->Name("gabor/parallel")->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanShift<kernels::reference::climb_modes>)->Name("mean_shift/reference")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanShift<kernels::parallel::climb_modes>)->Name("mean_shift/parallel")->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
