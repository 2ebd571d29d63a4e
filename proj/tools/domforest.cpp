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
#include "domforest/labeling.hpp"
#include "domforest/server.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace domforest;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig read_config(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  RunConfig cfg = load_config(path);
  if (apply_env_overrides(cfg)) std::cerr << "seed overridden by DOMFOREST_SEED: " << cfg.imitation.seed << '\n';
  return cfg;
}

void print_clusters(const Dataset& data, double bandwidth) {
  const auto rows = data.rows_where(false);
  std::vector<GraspAction> actions;
  std::vector<int> tasks;
  for (auto r : rows) {
    actions.push_back(data.action(r));
    tasks.push_back(data.task(r));
  }
  if (actions.empty()) return;
  std::vector<int> task_ids(tasks);
  std::sort(task_ids.begin(), task_ids.end());
  task_ids.erase(std::unique(task_ids.begin(), task_ids.end()), task_ids.end());
  for (int t : task_ids) {
    std::vector<GraspAction> sub;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (tasks[i] == t) sub.push_back(actions[i]);
    }
    const auto ms = mean_shift(sub, bandwidth);
    std::vector<std::size_t> order(ms.modes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ms.sizes[a] > ms.sizes[b]; });
    std::cout << "task " << task_name(task_from_id(t)) << ": " << ms.modes.size() << " clusters over " << sub.size()
              << " actions (bandwidth " << bandwidth << ")\n";
    for (std::size_t k = 0; k < std::min<std::size_t>(order.size(), 5); ++k) {
      const auto& m = ms.modes[order[k]];
      std::cout << "  cluster " << order[k] << " size " << ms.sizes[order[k]] << " mode (";
      for (std::size_t d = 0; d < kActionDim; ++d) std::cout << (d ? ", " : "") << m[d];
      std::cout << ")\n";
    }
    if (order.size() > 5) std::cout << "  ... " << order.size() - 5 << " more\n";
  }
}

int cmd_train(const std::string& config_path, const std::string& out, bool baselines) {
  RunConfig cfg = read_config(config_path);
  const std::string dest = out.empty() ? cfg.output_dir : out;
  const auto dir = run_training(cfg, dest, &std::cout);
  const Checkpoint cp = load_checkpoint(dir, true);
  print_clusters(*cp.data, cfg.imitation.bandwidth);
  if (baselines) fit_checkpoint_baselines(dir, &std::cout);
  std::cout << "checkpoint written to " << dir << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& task_text, int episodes, int iteration,
             const std::string& controller, const std::string& out) {
  const Checkpoint cp = load_checkpoint(checkpoint);
  const TaskKind task = parse_task(task_text);
  if (!cp.forest.has_task(task_id(task))) {
    throw std::runtime_error("task '" + task_text + "' was not part of the checkpoint's training tasks");
  }
  RunConfig cfg = cp.config;
  apply_env_overrides(cfg);
  if (episodes <= 0) episodes = cfg.eval.episodes;

  ControllerFactory factory;
  if (controller == "expert") {
    factory = expert_factory();
  } else if (controller == "forest") {
    auto forest = std::make_shared<const RandomForest>(iteration > 0 ? load_iteration_forest(checkpoint, iteration)
                                                                     : cp.forest);
    factory = forest_factory(forest);
  } else {
    throw UsageError("unknown controller '" + controller + "' (expected forest|expert)");
  }

  EnvConfig env = cfg.imitation.env;
  env.noise = {};
  const std::uint64_t seed = derive_seed(cfg.imitation.seed, 0x6576616c);
  std::vector<std::pair<std::string, EvalReport>> variants;
  variants.emplace_back("noiseless", evaluate(env, factory, task, episodes, cfg.eval.max_steps, seed));
  if (!cfg.eval.noise.is_zero()) {
    env.noise = cfg.eval.noise;
    variants.emplace_back("noisy", evaluate(env, factory, task, episodes, cfg.eval.max_steps, seed));
  }
  for (const auto& [name, r] : variants) {
    std::cout << name << ": controller=" << r.controller << " task=" << task_name(r.task) << " episodes="
              << r.episodes.size() << " steps=" << r.steps << " err=" << r.error << '\n';
  }
  fs::create_directories(out);
  const auto path = fs::path(out) / ("eval_" + std::string(task_name(task)) + ".csv");
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  write_eval_csv(file, variants);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_compare(const std::string& dataset, const std::string& fractions, const std::string& config_path,
                std::uint64_t seed, const std::string& out) {
  if (!fs::exists(dataset)) throw UsageError("dataset not found: " + dataset);
  CompareOptions opts;
  opts.fractions = parse_fractions(fractions);
  if (!config_path.empty()) {
    const RunConfig cfg = read_config(config_path);
    opts.forest = cfg.imitation.forest;
    opts.bandwidth = cfg.imitation.bandwidth;
    opts.mlp = cfg.mlp;
    opts.linear_ridge = cfg.linear_ridge;
  } else {
    const ImitationConfig defaults;
    opts.forest = defaults.forest;
    opts.bandwidth = defaults.bandwidth;
  }
  opts.seed = seed;
  const Dataset data = load_dataset_csv(dataset);
  const CompareResult r = compare_controllers(data, opts);
  write_compare_table(std::cout, r);
  fs::create_directories(out);
  const auto path = fs::path(out) / "compare.csv";
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  write_compare_table(file, r);
  std::cout << "test rows " << r.test_rows << ", pool rows " << r.pool_rows << "; wrote " << path.string() << '\n';
  return 0;
}

int cmd_serve(const std::string& checkpoint, int port, const std::string& address, const std::string& static_dir) {
  const Checkpoint cp = load_checkpoint(checkpoint);
  SessionConfig sc;
  sc.env = cp.config.imitation.env;
  sc.env.noise = {};
  sc.seed = cp.config.imitation.seed;
  auto session = std::make_unique<Session>(sc, std::make_shared<const RandomForest>(cp.forest));
  const fs::path dir(checkpoint);
  if (fs::exists(dir / "linear.linm")) {
    std::ifstream in(dir / "linear.linm", std::ios::binary);
    auto m = std::make_shared<LinearModel>(read_linear(in));
    session->add_controller(std::make_unique<FunctionController>(
        "linear", [m](std::span<const double> f, int) { return m->predict(f); }));
  }
  if (fs::exists(dir / "mlp.mlpm")) {
    std::ifstream in(dir / "mlp.mlpm", std::ios::binary);
    auto m = std::make_shared<MlpModel>(read_mlp(in));
    session->add_controller(std::make_unique<FunctionController>(
        "mlp", [m](std::span<const double> f, int) { return m->predict(f); }));
  }
  if (port < 0 || port > 65535) throw UsageError("port must be in [0, 65535]");
  ServerOptions opts;
  opts.address = address;
  opts.port = static_cast<std::uint16_t>(port);
  opts.static_dir = static_dir;
  const auto names = session->controller_names();
  LiveServer server(std::move(session), opts);
  server.start();
  std::cout << "serving on http://" << address << ':' << server.port() << " (websocket /ws), controllers:";
  for (const auto& n : names) std::cout << ' ' << n;
  std::cout << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  std::cout << "stopped after " << server.ticks() << " ticks\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloth co-manipulation controllers learned by imitation"};
  app.require_subcommand(1);

  std::string config_path, out = "runs", checkpoint, task = "straight", dataset, fractions = "20,40,60,80,100";
  std::string controller = "forest", static_dir, address = "127.0.0.1", compare_config;
  int episodes = 0, iteration = 0, port = 8080;
  std::uint64_t seed = 1;
  bool baselines = false;

  auto* train = app.add_subcommand("train", "Run imitation training and write a checkpoint");
  train->add_option("--config", config_path, "YAML run configuration")->required();
  train->add_option("--out", out, "Output directory (defaults to the config's output_dir)");
  train->add_flag("--baselines", baselines, "Also fit the linear and MLP baselines");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on fresh episodes");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--task", task, "straight | bend | twist");
  eval->add_option("--episodes", episodes, "Episodes (defaults to the checkpoint config)");
  eval->add_option("--iteration", iteration, "Evaluate the forest saved after this iteration");
  eval->add_option("--controller", controller, "forest | expert");
  eval->add_option("--out", out, "Output directory");

  auto* compare = app.add_subcommand("compare", "Compare forest, MLP and linear controllers on a dataset");
  compare->add_option("--dataset", dataset, "Dataset CSV")->required();
  compare->add_option("--fractions", fractions, "Training fractions in percent");
  compare->add_option("--config", compare_config, "Optional YAML configuration for model settings");
  compare->add_option("--seed", seed, "Split seed");
  compare->add_option("--out", out, "Output directory");

  auto* serve = app.add_subcommand("serve", "Run the live session server");
  serve->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--static", static_dir, "Directory of static UI assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(config_path, train->count("--out") ? out : "", baselines);
    if (*eval) return cmd_eval(checkpoint, task, episodes, iteration, controller, out);
    if (*compare) return cmd_compare(dataset, fractions, compare_config, seed, out);
    if (*serve) return cmd_serve(checkpoint, port, address, static_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
