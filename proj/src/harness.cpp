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

#include "domforest/harness.hpp"

#include "domforest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace domforest {

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return in;
}

}  // namespace

void write_checkpoint(const std::string& dir, const RunConfig& cfg, const TrainResult& result) {
  const fs::path root(dir);
  fs::create_directories(root);
  save_forest((root / "forest.rfcl").string(), result.forest);
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    save_forest((root / ("forest_iter_" + std::to_string(i + 1) + ".rfcl")).string(), result.history[i]);
  }
  save_dataset_csv((root / "dataset.csv").string(), result.data);
  {
    auto out = open_out(root / "dataset_meta.csv");
    write_dataset_meta(out, result.data);
  }
  {
    auto out = open_out(root / "metrics.csv");
    result.log.write_csv(out);
  }
  save_config((root / "config.yaml").string(), cfg);
}

Checkpoint load_checkpoint(const std::string& dir, bool with_dataset) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw std::runtime_error("checkpoint directory not found: " + dir);
  Checkpoint cp;
  cp.dir = dir;
  cp.config = load_config((root / "config.yaml").string());
  cp.forest = load_forest((root / "forest.rfcl").string());
  if (fs::exists(root / "metrics.csv")) {
    auto in = open_in(root / "metrics.csv");
    cp.log = MetricsLog::read_csv(in);
  }
  if (with_dataset) {
    cp.data = load_dataset_csv((root / "dataset.csv").string());
    if (fs::exists(root / "dataset_meta.csv")) {
      auto in = open_in(root / "dataset_meta.csv");
      apply_dataset_meta(in, *cp.data);
    }
  }
  return cp;
}

RandomForest load_iteration_forest(const std::string& dir, int n) {
  return load_forest((fs::path(dir) / ("forest_iter_" + std::to_string(n) + ".rfcl")).string());
}

std::string run_training(const RunConfig& cfg, const std::string& out, std::ostream* progress) {
  const fs::path dir = fs::path(out) / cfg.run_id;
  auto report = [&](const IterationResult& it) {
    if (!progress) return;
    const auto& m = it.metrics;
    *progress << "iteration " << m.iteration << ": err_aggregate=" << m.err_aggregate << " err_probe=" << m.err_probe
              << " leaves=" << m.total_leaves << " rows=" << m.dataset_size << " clusters=" << m.clusters
              << " expert_fraction=" << m.expert_fraction << " skipped=" << m.skipped << " wall_ms=" << std::fixed
              << std::setprecision(0) << m.wall_ms << std::defaultfloat << std::setprecision(6) << '\n';
  };
  TrainResult result = train(cfg.imitation, report);
  if (progress && result.converged) *progress << "converged after " << result.log.entries.size() << " iterations\n";
  write_checkpoint(dir.string(), cfg, result);
  return dir.string();
}

void fit_checkpoint_baselines(const std::string& dir, std::ostream* progress) {
  const Checkpoint cp = load_checkpoint(dir, true);
  const auto rows = cp.data->rows_where(false);
  if (rows.empty()) throw std::runtime_error("checkpoint " + dir + " has no training rows");
  const LinearModel linear = fit_linear(*cp.data, rows, cp.config.linear_ridge);
  {
    auto out = open_out(fs::path(dir) / "linear.linm");
    write_linear(out, linear);
  }
  if (progress) *progress << "linear baseline fitted on " << rows.size() << " rows\n";
  const MlpModel mlp = fit_mlp(*cp.data, rows, cp.config.mlp);
  {
    auto out = open_out(fs::path(dir) / "mlp.mlpm");
    write_mlp(out, mlp);
  }
  if (progress) *progress << "mlp baseline fitted (" << mlp.parameter_count() << " parameters)\n";
}

// ---- evaluation -----------------------------------------------------------------------

ControllerFactory forest_factory(std::shared_ptr<const RandomForest> forest) {
  return [forest] { return std::make_unique<ForestController>(forest); };
}

ControllerFactory expert_factory() {
  return [] { return std::make_unique<ExpertController>(); };
}

EvalReport evaluate(const EnvConfig& env_cfg, const ControllerFactory& make_controller, TaskKind task,
                    int episodes, int max_steps, std::uint64_t seed) {
  if (episodes < 1 || max_steps < 1) throw std::invalid_argument("evaluate: episodes and max_steps must be >= 1");
  env_cfg.validate();
  auto extractor = std::make_shared<const FeatureExtractor>(env_cfg.features);
  EvalReport report;
  report.task = task;
  report.episodes.resize(static_cast<std::size_t>(episodes));
  std::vector<std::vector<GraspAction>> expected(episodes), predicted(episodes);
  std::vector<std::string> names(episodes);
  std::string failure;

#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < episodes; ++e) {
    try {
      Environment env(env_cfg, extractor, TaskSpec::of(task), derive_seed(seed, 0x6576616c, static_cast<std::uint64_t>(e)));
      auto controller = make_controller();
      names[e] = controller->name();
      EpisodeRecord& rec = report.episodes[e];
      rec.episode = e;
      while (rec.steps < static_cast<std::size_t>(max_steps) && !env.human_finished()) {
        const auto obs = env.observe();
        if (!obs.features) ++rec.skipped;
        StepContext ctx{obs.features ? &*obs.features : nullptr, obs.hands, obs.robot, obs.expert, task_id(task)};
        const GraspAction action = controller->act(ctx);
        expected[e].push_back(obs.expert);
        predicted[e].push_back(action);
        env.advance(action);
        ++rec.steps;
      }
      rec.completed = env.human_finished();
      rec.error = mean_action_error(expected[e], predicted[e]);
      if (auto* fc = dynamic_cast<ForestController*>(controller.get())) rec.degraded = fc->degraded();
    } catch (const std::exception& ex) {
#pragma omp critical(domforest_eval_failure)
      if (failure.empty()) failure = ex.what();
    }
  }
  if (!failure.empty()) throw SimulationError("evaluation failed: " + failure);

  std::vector<GraspAction> all_expected, all_predicted;
  for (int e = 0; e < episodes; ++e) {
    all_expected.insert(all_expected.end(), expected[e].begin(), expected[e].end());
    all_predicted.insert(all_predicted.end(), predicted[e].begin(), predicted[e].end());
  }
  report.controller = names.front();
  report.steps = all_expected.size();
  report.error = mean_action_error(all_expected, all_predicted);
  return report;
}

void write_eval_csv(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& variants) {
  const auto old = out.precision(17);
  out << "variant,record,controller,task,steps,skipped,degraded,completed,err\n";
  for (const auto& [variant, r] : variants) {
    for (const auto& e : r.episodes) {
      out << variant << ",episode_" << e.episode << ',' << r.controller << ',' << task_name(r.task) << ',' << e.steps
          << ',' << e.skipped << ',' << e.degraded << ',' << (e.completed ? 1 : 0) << ',' << e.error << '\n';
    }
    std::size_t skipped = 0, degraded = 0, completed = 0;
    for (const auto& e : r.episodes) {
      skipped += e.skipped;
      degraded += e.degraded;
      completed += e.completed ? 1 : 0;
    }
    out << variant << ",summary," << r.controller << ',' << task_name(r.task) << ',' << r.steps << ',' << skipped << ','
        << degraded << ',' << completed << ',' << r.error << '\n';
  }
  out.precision(old);
}

// ---- comparison -----------------------------------------------------------------------

double CompareResult::test_residual(const std::string& model, int fraction) const {
  const auto m = std::find(models.begin(), models.end(), model);
  const auto f = std::find(fractions.begin(), fractions.end(), fraction);
  if (m == models.end() || f == fractions.end()) throw std::out_of_range("no cell for " + model + "@" + std::to_string(fraction));
  return test[m - models.begin()][f - fractions.begin()];
}

namespace {

void shuffle_rows(std::vector<std::size_t>& rows, Rng& rng) {
  for (std::size_t i = rows.size(); i > 1; --i) {
    const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
    std::swap(rows[i - 1], rows[j]);
  }
}

template <class Predict>
double residual(const Dataset& data, std::span<const std::size_t> rows, Predict&& predict) {
  std::vector<GraspAction> expected, predicted;
  for (auto r : rows) {
    expected.push_back(data.action(r));
    predicted.push_back(predict(r));
  }
  return mean_action_error(expected, predicted);
}

}  // namespace

CompareResult compare_controllers(const Dataset& data, const CompareOptions& opts) {
  if (data.size() < 100) throw std::invalid_argument("compare: dataset needs at least 100 rows, got " + std::to_string(data.size()));
  if (opts.fractions.empty()) throw std::invalid_argument("compare: no fractions given");
  for (int f : opts.fractions) {
    if (f < 1 || f > 100) throw std::invalid_argument("compare: fractions must lie in [1, 100]");
  }
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(derive_seed(opts.seed, 0x73706c74));
  shuffle_rows(rows, rng);
  const auto n_test = static_cast<std::size_t>(std::llround(opts.test_fraction * static_cast<double>(rows.size())));
  const std::vector<std::size_t> test(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
  const std::vector<std::size_t> pool(rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());

  CompareResult result;
  result.models = opts.models;
  result.fractions = opts.fractions;
  result.test.assign(opts.models.size(), std::vector<double>(opts.fractions.size()));
  result.train = result.test;
  result.test_rows = test.size();
  result.pool_rows = pool.size();

  for (std::size_t fi = 0; fi < opts.fractions.size(); ++fi) {
    const auto n_train = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(opts.fractions[fi] / 100.0 * static_cast<double>(pool.size()))));
    std::vector<std::size_t> train_rows(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(train_rows.begin(), train_rows.end());
    for (std::size_t mi = 0; mi < opts.models.size(); ++mi) {
      const std::string& model = opts.models[mi];
      std::function<GraspAction(std::size_t)> predict;
      std::shared_ptr<void> keep;
      if (model == "forest") {
        auto f = std::make_shared<RandomForest>(fit_forest(data, train_rows, opts.forest, opts.bandwidth));
        predict = [f, &data](std::size_t r) { return f->predict(data.features(r), data.task(r)).action; };
      } else if (model == "mlp") {
        auto m = std::make_shared<MlpModel>(fit_mlp(data, train_rows, opts.mlp));
        predict = [m, &data](std::size_t r) { return m->predict(data.features(r)); };
      } else if (model == "linear") {
        auto m = std::make_shared<LinearModel>(fit_linear(data, train_rows, opts.linear_ridge));
        predict = [m, &data](std::size_t r) { return m->predict(data.features(r)); };
      } else {
        throw std::invalid_argument("compare: unknown model '" + model + "'");
      }
      result.test[mi][fi] = residual(data, test, predict);
      result.train[mi][fi] = residual(data, train_rows, predict);
    }
  }
  return result;
}

void write_compare_table(std::ostream& out, const CompareResult& r) {
  const auto old = out.precision(9);
  out << "model";
  for (int f : r.fractions) out << ",test_" << f << "%";
  for (int f : r.fractions) out << ",train_" << f << "%";
  out << '\n';
  for (std::size_t m = 0; m < r.models.size(); ++m) {
    out << r.models[m];
    for (double v : r.test[m]) out << ',' << v;
    for (double v : r.train[m]) out << ',' << v;
    out << '\n';
  }
  out.precision(old);
}

std::vector<int> parse_fractions(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    item = first == std::string::npos ? std::string() : item.substr(first, item.find_last_not_of(" \t") - first + 1);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 1 || v > 100) {
      throw std::invalid_argument("fractions: expected comma-separated percentages in [1, 100], got '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("fractions: empty list");
  return out;
}

double task_error(const Dataset& data, std::span<const std::size_t> rows, const RandomForest& forest, int task) {
  std::vector<std::size_t> selected;
  for (auto r : rows) {
    if (data.task(r) == task) selected.push_back(r);
  }
  if (selected.empty()) throw std::invalid_argument("task_error: no rows for task " + std::to_string(task));
  return mean_action_error(data, selected, forest);
}

Dataset collect_expert_dataset(const EnvConfig& env_cfg, const std::vector<TaskKind>& tasks, int rows,
                               int rollout_steps, std::uint64_t seed) {
  if (tasks.empty() || rows < 1 || rollout_steps < 1) throw std::invalid_argument("collect: invalid arguments");
  auto extractor = std::make_shared<const FeatureExtractor>(env_cfg.features);
  const int rollouts = (rows + rollout_steps - 1) / rollout_steps;
  std::vector<Dataset> parts(rollouts, Dataset(extractor->dimension()));
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < rollouts; ++r) {
    try {
      const TaskKind kind = tasks[static_cast<std::size_t>(r) % tasks.size()];
      Environment env(env_cfg, extractor, TaskSpec::of(kind), derive_seed(seed, 0x636f6c6c, static_cast<std::uint64_t>(r)));
      const int steps = std::min(rollout_steps, rows - r * rollout_steps);
      for (int s = 0; s < steps; ++s) {
        const auto obs = env.observe();
        if (obs.features) parts[r].add(*obs.features, obs.expert, task_id(kind), r);
        env.advance(obs.expert);
      }
    } catch (const std::exception& e) {
#pragma omp critical(domforest_collect_failure)
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw SimulationError("collection failed: " + failure);
  Dataset out(extractor->dimension());
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) out.add(p.features(i), p.action(i), p.task(i), p.iteration(i));
  }
  return out;
}

}  // namespace domforest
