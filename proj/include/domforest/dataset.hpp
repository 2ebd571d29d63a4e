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

#include "domforest/forest.hpp"
#include "domforest/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace domforest {

/// Append-only table of expert-labeled observations stored column-wise with contiguous
/// features (row-major, `dim` values per row).
class Dataset {
 public:
  explicit Dataset(std::size_t dim = kFeatureDim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return actions_.size(); }
  bool empty() const { return actions_.empty(); }

  /// Appends a row; ids default to one past the previous row's id.
  void add(std::span<const double> features, const GraspAction& action, int task, int iteration = 0,
           bool probe = false, std::optional<std::int64_t> id = std::nullopt);
  void set_meta(std::size_t row, int iteration, bool probe);
  void append(const Dataset& other);

  std::span<const double> features(std::size_t row) const { return {features_.data() + row * dim_, dim_}; }
  const GraspAction& action(std::size_t row) const { return actions_[row]; }
  int task(std::size_t row) const { return tasks_[row]; }
  int iteration(std::size_t row) const { return iterations_[row]; }
  bool probe(std::size_t row) const { return probe_[row] != 0; }
  std::int64_t id(std::size_t row) const { return ids_[row]; }

  const std::vector<GraspAction>& actions() const { return actions_; }
  const std::vector<int>& tasks() const { return tasks_; }

  /// Rows selected by index, in the given order; ids are preserved.
  Dataset subset(std::span<const std::size_t> rows) const;
  std::vector<std::size_t> rows_where(bool probe_rows) const;

  /// Builds a training view over `rows` with `labels` (one per selected row). The view
  /// borrows this dataset's storage and is invalidated by later appends.
  TrainingSet training_view(std::span<const std::size_t> rows, std::span<const int> labels) const;

 private:
  std::size_t dim_;
  std::vector<double> features_;
  std::vector<GraspAction> actions_;
  std::vector<int> tasks_;
  std::vector<int> iterations_;
  std::vector<std::uint8_t> probe_;
  std::vector<std::int64_t> ids_;
};

/// Exchange format: `id,task,f0..f{dim-1},a0..a5` with an optional header row.
void write_dataset_csv(std::ostream& out, const Dataset& data, bool header = true);
Dataset read_dataset_csv(std::istream& in);
void save_dataset_csv(const std::string& path, const Dataset& data);
Dataset load_dataset_csv(const std::string& path);

/// Side table with the per-row iteration stamp and probe flag: `id,iteration,probe`.
void write_dataset_meta(std::ostream& out, const Dataset& data);
void apply_dataset_meta(std::istream& in, Dataset& data);

}  // namespace domforest
