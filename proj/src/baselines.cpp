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

#define EIGEN_DONT_PARALLELIZE
#include "domforest/baselines.hpp"

#include "domforest/binary_io.hpp"
#include "domforest/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <sstream>

namespace domforest {

namespace {

std::vector<std::size_t> all_rows_if_empty(const Dataset& data, std::span<const std::size_t> rows) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::size_t> out(data.size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

GraspAction to_action(const Eigen::VectorXd& v) {
  GraspAction a;
  for (std::size_t k = 0; k < kActionDim; ++k) a[k] = v(static_cast<Eigen::Index>(k));
  return a;
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> f) {
  return {f.data(), static_cast<Eigen::Index>(f.size())};
}

}  // namespace

Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.dim()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = as_vector(data.features(rows[i]));
  return x;
}

Eigen::MatrixXd action_matrix(const Dataset& data, std::span<const std::size_t> rows) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(kActionDim), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < kActionDim; ++k) y(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = data.action(rows[i])[k];
  }
  return y;
}

GraspAction LinearModel::predict(std::span<const double> f) const {
  if (f.size() != dim()) throw std::invalid_argument("LinearModel: feature dimension mismatch");
  return to_action(weights * as_vector(f) + bias);
}

LinearModel fit_linear(const Dataset& data, std::span<const std::size_t> rows_in, double ridge) {
  if (data.empty()) throw std::invalid_argument("fit_linear: empty dataset");
  if (!(ridge >= 0.0)) throw std::invalid_argument("fit_linear: ridge must be >= 0");
  const auto rows = all_rows_if_empty(data, rows_in);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(data.dim());
  const Eigen::Index extra = ridge > 0.0 ? d : 0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + extra, d + 1);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + extra, static_cast<Eigen::Index>(kActionDim));
  a.topLeftCorner(n, d) = feature_matrix(data, rows).transpose();
  a.topRightCorner(n, 1).setOnes();
  b.topRows(n) = action_matrix(data, rows).transpose();
  if (ridge > 0.0) a.bottomLeftCorner(d, d).diagonal().setConstant(std::sqrt(ridge));

  const Eigen::MatrixXd sol = a.completeOrthogonalDecomposition().solve(b);  // (d+1) x 6
  LinearModel m;
  m.weights = sol.topRows(d).transpose();
  m.bias = sol.row(d).transpose();
  if (!m.weights.allFinite() || !m.bias.allFinite()) throw std::runtime_error("fit_linear: non-finite solution");
  return m;
}

void MlpConfig::validate() const {
  std::ostringstream err;
  if (hidden < 1) err << "hidden must be >= 1; ";
  if (epochs < 0) err << "epochs must be >= 0; ";
  if (batch < 1) err << "batch must be >= 1; ";
  if (!(lr > 0.0)) err << "lr must be > 0; ";
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) err << "Adam betas must lie in [0, 1); ";
  if (!(eps > 0.0)) err << "eps must be > 0; ";
  if (!err.str().empty()) throw std::invalid_argument("invalid MLP config: " + err.str());
}

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd xs = (x.colwise() - input_mean).array().colwise() * input_scale.array();
  const Eigen::MatrixXd h = ((w1 * xs).colwise() + b1).cwiseMax(0.0);
  return (w2 * h).colwise() + b2;
}

GraspAction MlpModel::predict(std::span<const double> f) const {
  if (f.size() != dim()) throw std::invalid_argument("MlpModel: feature dimension mismatch");
  const Eigen::VectorXd xs = (as_vector(f) - input_mean).cwiseProduct(input_scale);
  const Eigen::VectorXd h = (w1 * xs + b1).cwiseMax(0.0);
  return to_action(w2 * h + b2);
}

std::size_t MlpModel::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  p.insert(p.end(), w1.data(), w1.data() + w1.size());
  p.insert(p.end(), b1.data(), b1.data() + b1.size());
  p.insert(p.end(), w2.data(), w2.data() + w2.size());
  p.insert(p.end(), b2.data(), b2.data() + b2.size());
  return p;
}

void MlpModel::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw std::invalid_argument("MlpModel: parameter count mismatch");
  const double* src = p.data();
  std::copy_n(src, w1.size(), w1.data());
  src += w1.size();
  std::copy_n(src, b1.size(), b1.data());
  src += b1.size();
  std::copy_n(src, w2.size(), w2.data());
  src += w2.size();
  std::copy_n(src, b2.size(), b2.data());
}

MlpModel init_mlp(const Eigen::MatrixXd& x, int hidden, std::uint64_t seed) {
  if (x.cols() < 1) throw std::invalid_argument("init_mlp: no samples");
  if (hidden < 1) throw std::invalid_argument("init_mlp: hidden must be >= 1");
  const auto d = x.rows();
  MlpModel m;
  m.input_mean = x.rowwise().mean();
  const Eigen::VectorXd var = (x.colwise() - m.input_mean).array().square().rowwise().mean();
  // Dimensions that barely vary in the fit set would otherwise blow up unseen inputs.
  const double floor = std::max(1e-3 * var.mean(), 1e-16);
  m.input_scale.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    m.input_scale(i) = var(i) > 1e-16 ? 1.0 / std::sqrt(std::max(var(i), floor)) : 0.0;
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  m.w1.resize(hidden, d);
  const double s1 = std::sqrt(2.0 / static_cast<double>(d));
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = s1 * normal(rng);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.w2.resize(static_cast<Eigen::Index>(kActionDim), hidden);
  const double s2 = std::sqrt(1.0 / static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = s2 * normal(rng);
  m.b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kActionDim));
  return m;
}

double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::vector<double>* grad) {
  const double n = static_cast<double>(x.cols());
  const double scale = 1.0 / (n * static_cast<double>(y.rows()));
  const Eigen::MatrixXd xs = (x.colwise() - m.input_mean).array().colwise() * m.input_scale.array();
  const Eigen::MatrixXd z1 = (m.w1 * xs).colwise() + m.b1;
  const Eigen::MatrixXd h = z1.cwiseMax(0.0);
  const Eigen::MatrixXd out = (m.w2 * h).colwise() + m.b2;
  const Eigen::MatrixXd diff = out - y;
  const double loss = scale * diff.squaredNorm();
  if (!grad) return loss;

  const Eigen::MatrixXd d_out = (2.0 * scale) * diff;
  const Eigen::MatrixXd g_w2 = d_out * h.transpose();
  const Eigen::VectorXd g_b2 = d_out.rowwise().sum();
  const Eigen::MatrixXd d_z1 = (m.w2.transpose() * d_out).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  const Eigen::MatrixXd g_w1 = d_z1 * xs.transpose();
  const Eigen::VectorXd g_b1 = d_z1.rowwise().sum();

  grad->clear();
  grad->reserve(m.parameter_count());
  grad->insert(grad->end(), g_w1.data(), g_w1.data() + g_w1.size());
  grad->insert(grad->end(), g_b1.data(), g_b1.data() + g_b1.size());
  grad->insert(grad->end(), g_w2.data(), g_w2.data() + g_w2.size());
  grad->insert(grad->end(), g_b2.data(), g_b2.data() + g_b2.size());
  return loss;
}

MlpModel fit_mlp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const MlpConfig& cfg) {
  cfg.validate();
  if (x.cols() != y.cols() || x.cols() < 1) throw std::invalid_argument("fit_mlp: need matching, non-empty x and y");
  MlpModel m = init_mlp(x, cfg.hidden, cfg.seed);
  m.b2 = y.rowwise().mean();

  std::vector<double> params = m.parameters();
  std::vector<double> first(params.size(), 0.0), second(params.size(), 0.0), grad;
  const auto n = static_cast<std::size_t>(x.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 0x626174));
  std::int64_t t = 0;
  Eigen::MatrixXd bx, by;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), n - start);
      bx.resize(x.rows(), static_cast<Eigen::Index>(count));
      by.resize(y.rows(), static_cast<Eigen::Index>(count));
      for (std::size_t k = 0; k < count; ++k) {
        bx.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(order[start + k]));
        by.col(static_cast<Eigen::Index>(k)) = y.col(static_cast<Eigen::Index>(order[start + k]));
      }
      const double loss = mlp_loss(m, bx, by, &grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "MLP training diverged at epoch " << epoch << " (loss " << loss << "); reduce lr (lr=" << cfg.lr << ")";
        throw TrainingDivergence(msg.str());
      }
      ++t;
      const double c1 = 1.0 / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
      const double c2 = 1.0 / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
      for (std::size_t p = 0; p < params.size(); ++p) {
        first[p] = cfg.beta1 * first[p] + (1.0 - cfg.beta1) * grad[p];
        second[p] = cfg.beta2 * second[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
        params[p] -= cfg.lr * (first[p] * c1) / (std::sqrt(second[p] * c2) + cfg.eps);
      }
      m.set_parameters(params);
    }
  }
  return m;
}

MlpModel fit_mlp(const Dataset& data, std::span<const std::size_t> rows_in, const MlpConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("fit_mlp: empty dataset");
  const auto rows = all_rows_if_empty(data, rows_in);
  return fit_mlp(feature_matrix(data, rows), action_matrix(data, rows), cfg);
}

namespace {

constexpr std::uint32_t kModelVersion = 1;

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  binio::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  binio::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) binio::put_f64(out, m.data()[i]);
}

Eigen::MatrixXd get_matrix(std::istream& in) {
  const auto rows = binio::get_u32(in);
  const auto cols = binio::get_u32(in);
  if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 28)) throw binio::FormatError("model matrix too large");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = binio::get_f64(in);
  return m;
}

void expect_version(std::istream& in, const char* what) {
  const auto v = binio::get_u32(in);
  if (v != kModelVersion) throw binio::FormatError(std::string(what) + ": unsupported version " + std::to_string(v));
}

}  // namespace

void write_linear(std::ostream& out, const LinearModel& m) {
  binio::put_magic(out, "LINM");
  binio::put_u32(out, kModelVersion);
  put_matrix(out, m.weights);
  put_matrix(out, m.bias);
}

LinearModel read_linear(std::istream& in) {
  binio::expect_magic(in, "LINM");
  expect_version(in, "LINM");
  LinearModel m;
  m.weights = get_matrix(in);
  m.bias = get_matrix(in);
  if (m.bias.rows() != m.weights.rows()) throw binio::FormatError("LINM: bias/weight shape mismatch");
  return m;
}

void write_mlp(std::ostream& out, const MlpModel& m) {
  binio::put_magic(out, "MLPM");
  binio::put_u32(out, kModelVersion);
  for (const Eigen::MatrixXd& part : {Eigen::MatrixXd(m.input_mean), Eigen::MatrixXd(m.input_scale), m.w1,
                                      Eigen::MatrixXd(m.b1), m.w2, Eigen::MatrixXd(m.b2)}) {
    put_matrix(out, part);
  }
}

MlpModel read_mlp(std::istream& in) {
  binio::expect_magic(in, "MLPM");
  expect_version(in, "MLPM");
  MlpModel m;
  m.input_mean = get_matrix(in);
  m.input_scale = get_matrix(in);
  m.w1 = get_matrix(in);
  m.b1 = get_matrix(in);
  m.w2 = get_matrix(in);
  m.b2 = get_matrix(in);
  if (m.w1.cols() != m.input_mean.rows() || m.b1.rows() != m.w1.rows() || m.w2.cols() != m.w1.rows() ||
      m.b2.rows() != m.w2.rows()) {
    throw binio::FormatError("MLPM: inconsistent layer shapes");
  }
  return m;
}

}  // namespace domforest
