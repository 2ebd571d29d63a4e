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

#include "domforest/imitation.hpp"

#include "domforest/labeling.hpp"
#include "domforest/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace domforest {

double ImitationConfig::beta(int iteration) const { return std::pow(p, iteration - 1); }

void ImitationConfig::validate() const {
  std::ostringstream err;
  if (iterations < 1) err << "iterations must be >= 1; ";
  if (samples_per_iteration < 1) err << "samples_per_iteration must be >= 1; ";
  if (!(p > 0.0 && p <= 1.0)) err << "p must lie in (0, 1]; ";
  if (rollout_steps < 1) err << "rollout_steps must be >= 1; ";
  if (tasks.empty()) err << "at least one task is required; ";
  if (!(bandwidth > 0.0)) err << "bandwidth must be > 0; ";
  if (!(probe_fraction >= 0.0 && probe_fraction < 1.0)) err << "probe_fraction must lie in [0, 1); ";
  if (!(convergence_tol > 0.0)) err << "convergence_tol must be > 0; ";
  if (convergence_window < 2) err << "convergence_window must be >= 2; ";
  if (!err.str().empty()) throw std::invalid_argument("invalid imitation config: " + err.str());
  forest.validate();
  env.validate();
}

bool MetricsEntry::same_outcome(const MetricsEntry& o) const {
  return iteration == o.iteration && err_aggregate == o.err_aggregate && err_probe == o.err_probe &&
         total_leaves == o.total_leaves && leaf_counts == o.leaf_counts && dataset_size == o.dataset_size &&
         skipped == o.skipped && degraded == o.degraded && clusters == o.clusters &&
         expert_fraction == o.expert_fraction;
}

void MetricsLog::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "iteration,err_aggregate,err_probe,total_leaves,dataset_size,wall_ms\n";
  for (const auto& e : entries) {
    out << e.iteration << ',' << e.err_aggregate << ',' << e.err_probe << ',' << e.total_leaves << ','
        << e.dataset_size << ',' << e.wall_ms << '\n';
  }
  out.precision(old);
}

MetricsLog MetricsLog::read_csv(std::istream& in) {
  MetricsLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("iteration", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    MetricsEntry e;
    if (!(row >> e.iteration >> e.err_aggregate >> e.err_probe >> e.total_leaves >> e.dataset_size >> e.wall_ms)) {
      throw std::runtime_error("metrics csv: malformed row '" + line + "'");
    }
    log.entries.push_back(e);
  }
  return log;
}

double mean_action_error(std::span<const GraspAction> expected, std::span<const GraspAction> predicted) {
  if (expected.size() != predicted.size()) throw std::invalid_argument("mean_action_error: size mismatch");
  if (expected.empty()) throw std::invalid_argument("mean_action_error: no rows");
  const double scale = 1.0 / (static_cast<double>(kActionDim) * static_cast<double>(expected.size()));
  double err = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) err += scale * squared_distance(expected[i], predicted[i]);
  return err;
}

double mean_action_error(const Dataset& data, std::span<const std::size_t> rows, const RandomForest& forest) {
  std::vector<GraspAction> expected, predicted;
  expected.reserve(rows.size());
  predicted.reserve(rows.size());
  for (auto r : rows) {
    expected.push_back(data.action(r));
    predicted.push_back(forest.predict(data.features(r), data.task(r)).action);
  }
  return mean_action_error(expected, predicted);
}

double mean_action_error(const Dataset& data, const RandomForest& forest) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  return mean_action_error(data, rows, forest);
}

RandomForest fit_forest(const Dataset& data, std::span<const std::size_t> rows, const TrainConfig& cfg,
                        double bandwidth, std::size_t* clusters) {
  if (rows.empty()) throw std::invalid_argument("fit_forest: no training rows");
  std::vector<GraspAction> actions;
  std::vector<int> tasks;
  for (auto r : rows) {
    actions.push_back(data.action(r));
    tasks.push_back(data.task(r));
  }
  const JointLabels labels = label_by_task(actions, tasks, bandwidth);
  if (clusters) *clusters = static_cast<std::size_t>(labels.count);
  return train_forest(data.training_view(rows, labels.labels), cfg);
}

namespace {

struct RolloutRows {
  Dataset rows{0};
  std::vector<std::uint8_t> trace;
  std::size_t skipped = 0;
  std::size_t degraded = 0;
};

// The last round(fraction * rollouts) rollouts of iteration 1, at least one when fraction > 0.
bool is_probe_rollout(int r, int rollouts, double fraction) {
  if (fraction <= 0.0) return false;
  const int count = std::clamp(static_cast<int>(std::lround(fraction * rollouts)), 1, std::max(1, rollouts - 1));
  return r >= rollouts - count;
}

}  // namespace

std::uint64_t rollout_seed(std::uint64_t seed, int n, int r) {
  return derive_seed(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
}

std::uint64_t mixing_seed(std::uint64_t rollout_seed) { return derive_seed(rollout_seed, 0x6d6978); }

IterationResult run_iteration(int n, const ImitationConfig& cfg, Dataset& data, const RandomForest* forest,
                              std::shared_ptr<const FeatureExtractor> extractor) {
  if (n < 1) throw std::invalid_argument("run_iteration: iteration index must be >= 1");
  if (n > 1 && !forest) throw std::invalid_argument("run_iteration: a forest is required after iteration 1");
  const auto start = std::chrono::steady_clock::now();
  const double beta = forest ? cfg.beta(n) : 1.0;
  const int rollouts = (cfg.samples_per_iteration + cfg.rollout_steps - 1) / cfg.rollout_steps;
  std::shared_ptr<const RandomForest> shared_forest;
  if (forest) shared_forest = std::shared_ptr<const RandomForest>(forest, [](const RandomForest*) {});

  std::vector<RolloutRows> collected(rollouts);
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < rollouts; ++r) {
    try {
      RolloutRows& out = collected[r];
      out.rows = Dataset(extractor->dimension());
      const int steps = std::min(cfg.rollout_steps, cfg.samples_per_iteration - r * cfg.rollout_steps);
      const TaskKind kind = cfg.tasks[static_cast<std::size_t>(r) % cfg.tasks.size()];
      const bool probe = n == 1 && is_probe_rollout(r, rollouts, cfg.probe_fraction);
      const std::uint64_t seed = rollout_seed(cfg.seed, n, r);
      Environment env(cfg.env, extractor, TaskSpec::of(kind), seed);
      Rng mix(mixing_seed(seed));
      std::optional<ForestController> learner;
      if (shared_forest) learner.emplace(shared_forest);
      for (int s = 0; s < steps; ++s) {
        const auto obs = env.observe();
        if (obs.features) {
          out.rows.add(*obs.features, obs.expert, task_id(kind), n, probe);
        } else {
          ++out.skipped;
        }
        const bool use_expert = uniform01(mix) < beta;
        out.trace.push_back(use_expert ? 1 : 0);
        GraspAction executed = obs.expert;
        if (!use_expert) {
          StepContext ctx{obs.features ? &*obs.features : nullptr, obs.hands, obs.robot, obs.expert, task_id(kind)};
          executed = learner->act(ctx);
        }
        env.advance(executed);
      }
      if (learner) out.degraded = learner->degraded();
    } catch (const std::exception& e) {
#pragma omp critical(domforest_rollout_failure)
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw SimulationError("iteration " + std::to_string(n) + ": " + failure);

  IterationResult result;
  std::size_t skipped = 0, degraded = 0, expert_steps = 0;
  for (auto& c : collected) {
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      data.add(c.rows.features(i), c.rows.action(i), c.rows.task(i), c.rows.iteration(i), c.rows.probe(i));
    }
    skipped += c.skipped;
    degraded += c.degraded;
    expert_steps += static_cast<std::size_t>(std::count(c.trace.begin(), c.trace.end(), 1));
    result.expert_trace.insert(result.expert_trace.end(), c.trace.begin(), c.trace.end());
  }

  const auto train_rows = data.rows_where(false);
  const auto probe_rows = data.rows_where(true);
  std::size_t clusters = 0;
  result.forest = fit_forest(data, train_rows, cfg.forest, cfg.bandwidth, &clusters);

  MetricsEntry& m = result.metrics;
  m.iteration = n;
  m.err_aggregate = mean_action_error(data, train_rows, result.forest);
  m.err_probe = probe_rows.empty() ? 0.0 : mean_action_error(data, probe_rows, result.forest);
  m.leaf_counts = result.forest.leaf_counts();
  m.total_leaves = result.forest.total_leaves();
  m.dataset_size = data.size();
  m.skipped = skipped;
  m.degraded = degraded;
  m.clusters = clusters;
  m.expert_fraction = result.expert_trace.empty()
                          ? 0.0
                          : static_cast<double>(expert_steps) / static_cast<double>(result.expert_trace.size());
  m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

bool has_converged(const MetricsLog& log, double tol, int window) {
  if (static_cast<int>(log.entries.size()) < window) return false;
  const auto first = log.entries.end() - window;
  auto spread = [&](auto get) {
    double lo = get(*first), hi = lo;
    for (auto it = first; it != log.entries.end(); ++it) {
      lo = std::min(lo, get(*it));
      hi = std::max(hi, get(*it));
    }
    return hi > 0 ? (hi - lo) / hi : 0.0;
  };
  const double leaves = spread([](const MetricsEntry& e) { return static_cast<double>(e.total_leaves); });
  const double err = spread([](const MetricsEntry& e) { return e.err_probe > 0 ? e.err_probe : e.err_aggregate; });
  return leaves < tol && err < tol;
}

TrainResult train(const ImitationConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  auto extractor = std::make_shared<const FeatureExtractor>(cfg.env.features);
  TrainResult result;
  result.data = Dataset(extractor->dimension());
  for (int n = 1; n <= cfg.iterations; ++n) {
    const RandomForest* current = result.history.empty() ? nullptr : &result.history.back();
    IterationResult it = run_iteration(n, cfg, result.data, current, extractor);
    if (on_iteration) on_iteration(it);
    result.log.entries.push_back(it.metrics);
    result.history.push_back(std::move(it.forest));
    if (cfg.early_stop && has_converged(result.log, cfg.convergence_tol, cfg.convergence_window)) {
      result.converged = true;
      break;
    }
  }
  result.forest = result.history.back();
  return result;
}

}  // namespace domforest
