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

#include "domforest/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace domforest {

void Dataset::add(std::span<const double> f, const GraspAction& action, int task, int iteration, bool probe,
                  std::optional<std::int64_t> id) {
  if (f.size() != dim_) {
    throw std::invalid_argument("Dataset: feature dimension " + std::to_string(f.size()) + " != " +
                                std::to_string(dim_));
  }
  features_.insert(features_.end(), f.begin(), f.end());
  actions_.push_back(action);
  tasks_.push_back(task);
  iterations_.push_back(iteration);
  probe_.push_back(probe ? 1 : 0);
  ids_.push_back(id ? *id : (ids_.empty() ? 0 : ids_.back() + 1));
}

void Dataset::set_meta(std::size_t row, int iteration, bool probe) {
  iterations_.at(row) = iteration;
  probe_.at(row) = probe ? 1 : 0;
}

void Dataset::append(const Dataset& other) {
  if (other.dim_ != dim_) throw std::invalid_argument("Dataset: dimension mismatch on append");
  for (std::size_t r = 0; r < other.size(); ++r) {
    add(other.features(r), other.action(r), other.task(r), other.iteration(r), other.probe(r), other.id(r));
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(dim_);
  for (auto r : rows) {
    out.add(features(r), actions_[r], tasks_[r], iterations_[r], probe_[r] != 0, ids_[r]);
  }
  return out;
}

std::vector<std::size_t> Dataset::rows_where(bool probe_rows) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < size(); ++r) {
    if ((probe_[r] != 0) == probe_rows) out.push_back(r);
  }
  return out;
}

TrainingSet Dataset::training_view(std::span<const std::size_t> rows, std::span<const int> labels) const {
  if (labels.size() != rows.size()) throw std::invalid_argument("training_view: one label per row required");
  TrainingSet ts;
  ts.dim = dim_;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ts.add(features(rows[i]), actions_[rows[i]], tasks_[rows[i]], labels[i]);
  }
  return ts;
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_field(std::string_view s, std::size_t line_no) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("dataset csv line " + std::to_string(line_no) + ": cannot parse '" + std::string(s) +
                             "'");
  }
  return v;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data, bool header) {
  if (header) {
    out << "id,task";
    for (std::size_t i = 0; i < data.dim(); ++i) out << ",f" << i;
    for (std::size_t i = 0; i < kActionDim; ++i) out << ",a" << i;
    out << '\n';
  }
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.id(r) << ',' << data.task(r);
    for (double v : data.features(r)) {
      out << ',';
      put_double(out, v);
    }
    for (double v : data.action(r).values) {
      out << ',';
      put_double(out, v);
    }
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<Dataset> data;
  std::vector<double> f;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line.rfind("id,", 0) == 0) continue;
    const auto fields = split_commas(line);
    if (fields.size() < 2 + kActionDim + 1) {
      throw std::runtime_error("dataset csv line " + std::to_string(line_no) + ": too few columns");
    }
    const std::size_t dim = fields.size() - 2 - kActionDim;
    if (!data) data.emplace(dim);
    if (dim != data->dim()) {
      throw std::runtime_error("dataset csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(data->dim() + 2 + kActionDim) + " columns");
    }
    const auto id = parse_field<std::int64_t>(fields[0], line_no);
    const int task = parse_field<int>(fields[1], line_no);
    f.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) f[i] = parse_field<double>(fields[2 + i], line_no);
    GraspAction a;
    for (std::size_t i = 0; i < kActionDim; ++i) a[i] = parse_field<double>(fields[2 + dim + i], line_no);
    data->add(f, a, task, 0, false, id);
  }
  if (!data) return Dataset{};
  return *data;
}

void save_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset_csv(out, data);
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  return read_dataset_csv(in);
}

void write_dataset_meta(std::ostream& out, const Dataset& data) {
  out << "id,iteration,probe\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.id(r) << ',' << data.iteration(r) << ',' << (data.probe(r) ? 1 : 0) << '\n';
  }
}

void apply_dataset_meta(std::istream& in, Dataset& data) {
  std::unordered_map<std::int64_t, std::size_t> row_of;
  for (std::size_t r = 0; r < data.size(); ++r) row_of[data.id(r)] = r;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("id,", 0) == 0) continue;
    const auto fields = split_commas(line);
    if (fields.size() != 3) throw std::runtime_error("dataset meta line " + std::to_string(line_no) + ": expected 3 columns");
    const auto id = parse_field<std::int64_t>(fields[0], line_no);
    auto it = row_of.find(id);
    if (it == row_of.end()) throw std::runtime_error("dataset meta line " + std::to_string(line_no) + ": unknown id");
    data.set_meta(it->second, parse_field<int>(fields[1], line_no), parse_field<int>(fields[2], line_no) != 0);
  }
}

}  // namespace domforest
