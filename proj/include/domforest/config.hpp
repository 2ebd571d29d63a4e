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

#include "domforest/baselines.hpp"
#include "domforest/imitation.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace domforest {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalConfig {
  int episodes = 10;
  int max_steps = 3000;  // control steps per episode before it is cut short
  NoiseSpec noise;       // noise-robustness variant; all zero disables it
};

struct RunConfig {
  std::string run_id = "run";
  std::string output_dir = "runs";
  ImitationConfig imitation;
  EvalConfig eval;
  MlpConfig mlp;
  double linear_ridge = 0.0;

  void validate() const;
};

/// Parses a YAML document. Unknown keys and invalid values raise ConfigError naming the key path.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);

/// Applies DOMFOREST_SEED when set. Returns true if the seed was overridden.
bool apply_env_overrides(RunConfig& cfg);

}  // namespace domforest
