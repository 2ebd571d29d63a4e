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

// Acceptance runner: one PASS/FAIL line per primary criterion, exit status 1 if any fails.
#include "domforest/baselines.hpp"
#include "domforest/cloth.hpp"
#include "domforest/dataset.hpp"
#include "domforest/expert.hpp"
#include "domforest/forest.hpp"
#include "domforest/harness.hpp"
#include "domforest/imitation.hpp"
#include "domforest/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace domforest;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double max_seconds = 0.0;  // 0 means no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr int kEvalEpisodes = 10;
constexpr std::uint64_t kEvalSeed = 9001;

ImitationConfig dagger_config(std::uint64_t seed) {
  ImitationConfig cfg;
  cfg.iterations = 10;
  cfg.samples_per_iteration = 200;
  cfg.forest.trees = 25;
  cfg.early_stop = false;
  cfg.seed = seed;
  cfg.forest.seed = seed;
  return cfg;
}

// Full training runs are shared between the criteria that read them.
struct RunCache {
  std::map<std::uint64_t, TrainResult> runs;
  std::map<std::uint64_t, double> seconds;

  const TrainResult& get(std::uint64_t seed) {
    auto it = runs.find(seed);
    if (it != runs.end()) return it->second;
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult r = train(dagger_config(seed));
    seconds[seed] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "  [training run seed " << seed << " took " << fmt("%.1f", seconds[seed]) << " s]\n";
    return runs.emplace(seed, std::move(r)).first->second;
  }
} cache;

std::string forest_bytes(const RandomForest& f) {
  std::ostringstream out;
  write_forest(out, f);
  return out.str();
}

double eval_error(const EnvConfig& env, const RandomForest& forest, std::uint64_t seed) {
  const EvalConfig defaults;
  const EvalReport r = evaluate(env, forest_factory(std::make_shared<const RandomForest>(forest)),
                                TaskKind::Straight, kEvalEpisodes, defaults.max_steps, seed);
  return r.error;
}

// ---- independent oracles ---------------------------------------------------------------

double entropy_oracle(const std::vector<int>& xs) {
  std::map<int, double> counts;
  for (int x : xs) counts[x] += 1.0;
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = c / static_cast<double>(xs.size());
    h -= p * std::log2(p);
  }
  return h;
}

GraspAction brute_predict(const RandomForest& forest, std::span<const double> f, int task) {
  GraspAction sum{};
  for (const auto& tree : forest.trees) {
    int node = 0;
    while (tree.nodes[node].left >= 0) {
      const TreeNode& n = tree.nodes[node];
      node = f[n.feature] < n.threshold ? n.left : n.right;
    }
    const Leaf& leaf = tree.leaves[tree.nodes[node].leaf];
    GraspAction a = leaf.overall_mean;
    for (const auto& ta : leaf.tasks) {
      if (ta.task == task) a = ta.mean;
    }
    for (std::size_t k = 0; k < kActionDim; ++k) sum[k] += a[k];
  }
  for (auto& v : sum.values) v /= static_cast<double>(forest.trees.size());
  return sum;
}

// ---- criteria ----------------------------------------------------------------------------

Outcome forest_oracle() {
  Rng rng(11);
  const std::size_t dim = 24;
  std::vector<std::vector<double>> feats(600, std::vector<double>(dim));
  TrainingSet set;
  set.dim = dim;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    for (auto& v : feats[i]) v = uniform(rng, -1, 1);
    const int label = (feats[i][0] > 0 ? 1 : 0) + 2 * (feats[i][3] > 0.3 ? 1 : 0) + (i % 7 == 0 ? 4 : 0);
    GraspAction a;
    for (auto& v : a.values) v = uniform(rng, -1, 1);
    set.add(feats[i], a, static_cast<int>(i % 2), label);
  }
  TrainConfig cfg;
  cfg.trees = 25;
  const RandomForest forest = train_forest(set, cfg);
  double worst = 0.0;
  std::vector<double> probe(dim);
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : probe) v = uniform(rng, -1.2, 1.2);
    const int task = i % 2;
    const GraspAction got = forest.predict(probe, task).action;
    const GraspAction want = brute_predict(forest, probe, task);
    for (std::size_t k = 0; k < kActionDim; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
  }
  return {worst <= 1e-12, fmt("max |predict - brute force| = %.3g over 1000 probes", worst)};
}

Outcome information_gain() {
  const std::vector<int> parent{0, 0, 1, 1}, left{0, 0}, right{1, 1};
  const double perfect = info_gain(parent, left, right);
  Rng rng(5);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(uniform01(rng) * 40);
    const int classes = 1 + static_cast<int>(uniform01(rng) * 6);
    std::vector<int> p, l, r;
    for (int i = 0; i < n; ++i) {
      const int lab = static_cast<int>(uniform01(rng) * classes);
      p.push_back(lab);
      (uniform01(rng) < 0.5 ? l : r).push_back(lab);
    }
    if (l.empty()) std::swap(l, r);
    const double got = info_gain(p, l, r);
    const double want = entropy_oracle(p) - (l.size() / double(n)) * entropy_oracle(l) -
                        (r.empty() ? 0.0 : (r.size() / double(n)) * entropy_oracle(r));
    worst = std::max(worst, std::abs(got - want));
  }
  return {perfect == 1.0 && worst <= 1e-12,
          fmt("{A,A,B,B} gain = %.17g bits, max oracle deviation %.3g over 20 multisets", perfect, worst)};
}

Outcome expert_anchoring() {
  auto [mesh, state] = make_cloth(21, 24);
  const HandPair hands = hand_positions(state, mesh);
  const GraspAction a = expert_action(TaskSpec::of(TaskKind::Straight), hands);
  const double anchor = std::max((a.v0() - Vec3(0, 0, 0)).norm(), (a.v1() - Vec3(0.3, 0, 0)).norm());
  Rng rng(21);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 v2(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.3, 0.3));
    const Vec3 v3 = v2 + Vec3(uniform(rng, 0.05, 0.3), uniform(rng, -0.2, 0.2), uniform(rng, -0.1, 0.1));
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(uniform(rng, -3.14, 3.14), Vec3::UnitZ()).toRotationMatrix();
    const Vec3 t(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    for (TaskKind k : {TaskKind::Straight, TaskKind::Bend, TaskKind::Twist}) {
      const TaskSpec spec = TaskSpec::of(k);
      const GraspAction base = expert_action(spec, v2, v3);
      const GraspAction rotated = expert_action(spec, rot * v2, rot * v3);
      const GraspAction moved = expert_action(spec, v2 + t, v3 + t);
      worst = std::max({worst, (rotated.v0() - rot * base.v0()).norm(), (rotated.v1() - rot * base.v1()).norm(),
                        (moved.v0() - base.v0() - t).norm(), (moved.v1() - base.v1() - t).norm()});
    }
  }
  return {anchor <= 1e-9 && worst <= 1e-9,
          fmt("anchor offset %.3g m, equivariance deviation %.3g m over 100 poses", anchor, worst)};
}

Outcome action_error_formula() {
  const std::vector<GraspAction> truth{GraspAction{{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}}};
  std::vector<GraspAction> pred = truth;
  pred[0][0] += 0.06;
  const double single = mean_action_error(truth, pred);
  Rng rng(8);
  std::vector<GraspAction> x(100), y(100);
  for (int i = 0; i < 100; ++i) {
    for (std::size_t k = 0; k < kActionDim; ++k) {
      x[i][k] = uniform(rng, -1, 1);
      y[i][k] = uniform(rng, -1, 1);
    }
  }
  double oracle = 0.0;
  for (int i = 0; i < 100; ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < kActionDim; ++k) row += (x[i][k] - y[i][k]) * (x[i][k] - y[i][k]);
    oracle += row;
  }
  oracle /= 600.0;
  const double got = mean_action_error(x, y);
  const double dev = std::abs(got - oracle);
  return {std::abs(single - 6.0e-4) <= 1e-15 && dev <= 1e-12,
          fmt("single row %.17g, 100-row deviation from re-summation %.3g", single, dev)};
}

std::vector<double> probe_errors(const TrainResult& r) {
  std::vector<double> e;
  for (const auto& m : r.log.entries) e.push_back(m.err_probe);
  return e;
}

Outcome dagger_convergence() {
  const TrainResult& r = cache.get(kSeeds[0]);
  const std::vector<double> e = probe_errors(r);
  if (e.size() != 10) return {false, fmt("expected 10 iterations, got %zu", e.size())};
  const double ratio = e[9] / e[0];
  std::vector<double> avg;
  for (std::size_t k = 2; k < e.size(); ++k) avg.push_back((e[k - 2] + e[k - 1] + e[k]) / 3.0);
  int rises = 0;
  for (std::size_t k = 1; k < avg.size(); ++k) rises += avg[k] > avg[k - 1] ? 1 : 0;
  std::ostringstream d;
  d << fmt("err(10)/err(1) = %.4f (need <= 0.5), moving-average rises = %d, %.0f s; probe errors:", ratio,
           rises, cache.seconds[kSeeds[0]]);
  for (double v : e) d << fmt(" %.5f", v);
  return {ratio <= 0.5 && rises == 0 && cache.seconds[kSeeds[0]] <= 900.0, d.str()};
}

Outcome leaf_plateau() {
  const TrainResult& r = cache.get(kSeeds[0]);
  const auto& es = r.log.entries;
  if (es.size() != 10) return {false, "run did not complete 10 iterations"};
  double lo = 1e300, hi = 0.0;
  for (std::size_t k = 7; k < 10; ++k) {
    lo = std::min(lo, double(es[k].total_leaves));
    hi = std::max(hi, double(es[k].total_leaves));
  }
  const double change = (hi - lo) / double(es[7].total_leaves);
  return {change < 0.10, fmt("leaves over iterations 8-10: %zu %zu %zu, change %.2f%%", es[7].total_leaves,
                             es[8].total_leaves, es[9].total_leaves, 100.0 * change)};
}

Outcome supervised_gap() {
  const EnvConfig env;
  int wins = 0;
  std::ostringstream d;
  for (std::uint64_t s : kSeeds) {
    const TrainResult& r = cache.get(s);
    const double first = eval_error(env, r.history.front(), kEvalSeed + s);
    const double last = eval_error(env, r.history.back(), kEvalSeed + s);
    wins += first > last ? 1 : 0;
    d << fmt("seed %llu: 1-iter %.5f vs 10-iter %.5f; ", static_cast<unsigned long long>(s), first, last);
  }
  d << wins << "/3 seeds";
  return {wins == 3, d.str()};
}

Outcome controller_ordering() {
  const EnvConfig env;
  const ImitationConfig defaults;
  int wins = 0;
  std::ostringstream d;
  for (std::uint64_t s : kSeeds) {
    const Dataset data = collect_expert_dataset(env, {TaskKind::Straight}, 2000, defaults.rollout_steps, s);
    CompareOptions opts;
    opts.fractions = {20, 100};
    opts.seed = s;
    opts.forest.seed = s;
    const CompareResult c = compare_controllers(data, opts);
    const double f100 = c.test_residual("forest", 100), m100 = c.test_residual("mlp", 100);
    const double f20 = c.test_residual("forest", 20), l20 = c.test_residual("linear", 20);
    const bool ok = f100 < m100 && l20 > f20;
    wins += ok ? 1 : 0;
    d << fmt("seed %llu (%zu rows): forest %.5f vs mlp %.5f @100%%, linear %.5f vs forest %.5f @20%%; ",
             static_cast<unsigned long long>(s), data.size(), f100, m100, l20, f20);
  }
  d << wins << "/3 seeds";
  return {wins == 3, d.str()};
}

Outcome multi_task() {
  const EnvConfig env;
  const ImitationConfig defaults;
  const std::vector<TaskKind> all{TaskKind::Straight, TaskKind::Bend, TaskKind::Twist};
  const Dataset data = collect_expert_dataset(env, all, 3000, defaults.rollout_steps, 31);
  Rng rng(32);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_test = static_cast<std::size_t>(std::lround(0.2 * double(order.size())));
  const std::vector<std::size_t> test(order.begin(), order.begin() + n_test);
  const std::vector<std::size_t> pool(order.begin() + n_test, order.end());
  const RandomForest pooled = fit_forest(data, pool, defaults.forest, defaults.bandwidth);
  bool ok = true;
  std::ostringstream d;
  for (TaskKind k : all) {
    const int id = task_id(k);
    std::vector<std::size_t> own_pool, own_test;
    for (auto r : pool) if (data.task(r) == id) own_pool.push_back(r);
    for (auto r : test) if (data.task(r) == id) own_test.push_back(r);
    const RandomForest single = fit_forest(data, own_pool, defaults.forest, defaults.bandwidth);
    const double ep = task_error(data, own_test, pooled, id);
    const double es = task_error(data, own_test, single, id);
    ok = ok && ep <= 2.0 * es;
    d << fmt("%s: pooled %.5f vs single %.5f (ratio %.2f); ", std::string(task_name(k)).c_str(), ep, es, ep / es);
  }
  return {ok, d.str()};
}

Outcome noise_robustness() {
  const TrainResult& r = cache.get(kSeeds[0]);
  const EnvConfig clean;
  EnvConfig noisy;
  noisy.noise.depth_sigma = 0.005;
  noisy.noise.occluder_count = 1;
  const double trained_clean = eval_error(clean, r.history.back(), kEvalSeed);
  const double trained_noisy = eval_error(noisy, r.history.back(), kEvalSeed);
  const double first_clean = eval_error(clean, r.history.front(), kEvalSeed);
  const double first_noisy = eval_error(noisy, r.history.front(), kEvalSeed);
  const bool ok = trained_noisy <= 3.0 * trained_clean && trained_noisy < first_clean && trained_noisy < first_noisy;
  return {ok, fmt("trained: clean %.5f noisy %.5f (x%.2f); iteration 1: clean %.5f noisy %.5f", trained_clean,
                  trained_noisy, trained_noisy / trained_clean, first_clean, first_noisy)};
}

Outcome mlp_gradient() {
  Rng rng(4);
  Eigen::MatrixXd x(7, 5), y(kActionDim, 5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
  for (int i = 0; i < y.size(); ++i) y.data()[i] = uniform(rng, -1, 1);
  MlpModel m = init_mlp(x, 8, 3);
  std::vector<double> grad;
  mlp_loss(m, x, y, &grad);
  std::vector<double> p = m.parameters();
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    m.set_parameters(p);
    const double up = mlp_loss(m, x, y);
    p[i] = keep - h;
    m.set_parameters(p);
    const double down = mlp_loss(m, x, y);
    p[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - grad[i]) / std::max(1e-6, std::abs(numeric) + std::abs(grad[i])));
  }
  return {worst < 1e-4, fmt("max relative error %.3g over %zu parameters", worst, p.size())};
}

Outcome determinism() {
  const TrainResult& first = cache.get(kSeeds[0]);
  const TrainResult again = train(dagger_config(kSeeds[0]));
  const std::string a = forest_bytes(first.forest), b = forest_bytes(again.forest);
  return {a == b, fmt("forest serializations: %zu vs %zu bytes, %s", a.size(), b.size(),
                      a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"forest prediction equals brute-force route-and-average", 5.0, forest_oracle},
      {"information gain", 1.0, information_gain},
      {"expert anchoring and equivariance", 1.0, expert_anchoring},
      {"mean action error formula", 0.0, action_error_formula},
      {"MLP gradient check", 0.0, mlp_gradient},
      {"DAgger convergence", 0.0, dagger_convergence},
      {"leaf-count plateau", 0.0, leaf_plateau},
      {"determinism", 0.0, determinism},
      {"supervised vs DAgger gap", 0.0, supervised_gap},
      {"noise robustness", 0.0, noise_robustness},
      {"controller ordering", 0.0, controller_ordering},
      {"multi-task vs single-task", 0.0, multi_task},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.max_seconds > 0.0 && secs >= c.max_seconds) {
      o.pass = false;
      o.detail += fmt(" [runtime %.2f s exceeds %.0f s]", secs, c.max_seconds);
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << fmt(" (%.1f s)", secs) << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
