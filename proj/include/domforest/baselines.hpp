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

#include "domforest/dataset.hpp"
#include "domforest/types.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <span>
#include <string>

namespace domforest {

/// Affine controller x* = W f + b.
struct LinearModel {
  Eigen::MatrixXd weights;  // kActionDim x dim
  Eigen::VectorXd bias;     // kActionDim

  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }
  GraspAction predict(std::span<const double> f) const;
};

/// Minimum-norm least squares over `rows` (all rows when empty). `ridge` > 0 adds
/// Tikhonov damping on the weights but not the bias.
LinearModel fit_linear(const Dataset& data, std::span<const std::size_t> rows = {}, double ridge = 0.0);

struct MlpConfig {
  int hidden = 128;
  int epochs = 500;
  int batch = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;
};

/// One rectified hidden layer over standardized inputs.
struct MlpModel {
  Eigen::VectorXd input_mean;   // dim
  Eigen::VectorXd input_scale;  // dim, reciprocal standard deviations
  Eigen::MatrixXd w1;           // hidden x dim
  Eigen::VectorXd b1;           // hidden
  Eigen::MatrixXd w2;           // kActionDim x hidden
  Eigen::VectorXd b2;           // kActionDim

  std::size_t dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
  GraspAction predict(std::span<const double> f) const;
  /// Batch forward pass; `x` holds one standardized-or-raw sample per column (raw here).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);
};

class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Freshly initialized network with input statistics taken from `x` (dim x n).
MlpModel init_mlp(const Eigen::MatrixXd& x, int hidden, std::uint64_t seed);

/// Mean over samples and output dimensions of the squared error, with the gradient with
/// respect to `parameters()` order when `grad` is non-null.
double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                std::vector<double>* grad = nullptr);

MlpModel fit_mlp(const Dataset& data, std::span<const std::size_t> rows, const MlpConfig& cfg);
MlpModel fit_mlp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const MlpConfig& cfg);

/// Column-per-sample matrices gathered from `rows` of a dataset.
Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> rows);
Eigen::MatrixXd action_matrix(const Dataset& data, std::span<const std::size_t> rows);

void write_linear(std::ostream& out, const LinearModel& m);
LinearModel read_linear(std::istream& in);
void write_mlp(std::ostream& out, const MlpModel& m);
MlpModel read_mlp(std::istream& in);

}  // namespace domforest
