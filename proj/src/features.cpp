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

#include "domforest/features.hpp"

#include "domforest/kernels/gabor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace domforest {

std::size_t ForegroundMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

GaborFilter make_gabor(double orientation, double wavelength, double sigma_ratio, double aspect) {
  GaborFilter g;
  g.orientation = orientation;
  g.wavelength = wavelength;
  g.sigma = sigma_ratio * wavelength;
  g.aspect = aspect;
  g.size = static_cast<int>(std::ceil(6.0 * g.sigma));
  if (g.size % 2 == 0) ++g.size;
  const int r = g.radius();
  const double c = std::cos(orientation), s = std::sin(orientation);
  std::vector<double> carrier(static_cast<std::size_t>(g.size) * g.size);
  std::vector<double> envelope(carrier.size());
  double carrier_sum = 0.0, envelope_sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double xr = dx * c + dy * s;
      const double yr = -dx * s + dy * c;
      const double env = std::exp(-(xr * xr + aspect * aspect * yr * yr) / (2.0 * g.sigma * g.sigma));
      const auto k = static_cast<std::size_t>(dy + r) * g.size + (dx + r);
      envelope[k] = env;
      carrier[k] = env * std::cos(2.0 * std::numbers::pi * xr / wavelength);
      carrier_sum += carrier[k];
      envelope_sum += env;
    }
  }
  const double dc = carrier_sum / envelope_sum;
  g.taps.resize(carrier.size());
  double l1 = 0.0;
  for (std::size_t k = 0; k < carrier.size(); ++k) {
    g.taps[k] = carrier[k] - dc * envelope[k];
    l1 += std::abs(g.taps[k]);
  }
  for (auto& t : g.taps) t /= l1;
  // Re-center: removes the rounding residue left by the subtraction above.
  double residue = 0.0;
  for (double t : g.taps) residue += t;
  double env_total = 0.0;
  for (double e : envelope) env_total += e;
  for (std::size_t k = 0; k < carrier.size(); ++k) g.taps[k] -= residue * envelope[k] / env_total;
  return g;
}

namespace {

std::vector<GaborFilter> default_filters() {
  std::vector<GaborFilter> filters;
  for (int o = 0; o < 4; ++o) {
    for (double wavelength : {4.0, 8.0, 16.0}) {
      filters.push_back(make_gabor(o * std::numbers::pi / 4.0, wavelength));
    }
  }
  return filters;
}

}  // namespace

GaborBank::GaborBank(int canvas) : GaborBank(default_filters(), canvas) {}

GaborBank::GaborBank(std::vector<GaborFilter> filters, int canvas)
    : filters_(std::move(filters)),
      canvas_(canvas),
      spectra_(std::make_shared<kernels::GaborSpectra>(filters_, canvas)) {}

int GaborBank::max_radius() const {
  int r = 0;
  for (const auto& f : filters_) r = std::max(r, f.radius());
  return r;
}

void FeatureConfig::validate() const {
  if (canvas < 8) throw std::invalid_argument("features: canvas must be >= 8");
  if (grid < 1 || canvas % grid != 0) throw std::invalid_argument("features: grid must divide canvas");
  if (!(fill > 0.0) || fill > 1.0) throw std::invalid_argument("features: fill must lie in (0, 1]");
  if (!(far_threshold > 0.0)) throw std::invalid_argument("features: far_threshold must be > 0");
}

ForegroundMask foreground_mask(const DepthImage& img, double far_threshold) {
  ForegroundMask mask{img.width, img.height, std::vector<std::uint8_t>(img.depth.size(), 0)};
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    const float d = img.depth[i];
    mask.bits[i] = (!DepthImage::is_background(d) && d < far_threshold) ? 1 : 0;
  }
  return mask;
}

AlignedImage align(const DepthImage& img, const ForegroundMask& mask, int canvas, double fill) {
  if (mask.width != img.width || mask.height != img.height) {
    throw std::invalid_argument("align: mask and image dimensions differ");
  }
  int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
      dmin = std::min(dmin, static_cast<double>(img.at(x, y)));
      dmax = std::max(dmax, static_cast<double>(img.at(x, y)));
    }
  }
  if (x1 < 0) throw AlignmentError("align: empty foreground mask");

  std::vector<double> norm(img.depth.size(), 0.0);
  const double range = dmax - dmin;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    if (!mask.bits[i]) continue;
    norm[i] = range > 0.0 ? (img.depth[i] - dmin) / range : 0.5;
  }
  auto sample = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
    return norm[static_cast<std::size_t>(y) * img.width + x];
  };

  const double box = std::max(x1 - x0 + 1, y1 - y0 + 1);
  const double scale = fill * canvas / box;
  const double cx = 0.5 * (x0 + x1 + 1), cy = 0.5 * (y0 + y1 + 1);
  AlignedImage out(canvas);
  for (int v = 0; v < canvas; ++v) {
    const double sy = cy + (v + 0.5 - 0.5 * canvas) / scale - 0.5;
    const int iy = static_cast<int>(std::floor(sy));
    const double fy = sy - iy;
    for (int u = 0; u < canvas; ++u) {
      const double sx = cx + (u + 0.5 - 0.5 * canvas) / scale - 0.5;
      const int ix = static_cast<int>(std::floor(sx));
      const double fx = sx - ix;
      double value = (1.0 - fx) * (1.0 - fy) * sample(ix, iy);
      if (fx > 0.0) value += fx * (1.0 - fy) * sample(ix + 1, iy);
      if (fy > 0.0) value += (1.0 - fx) * fy * sample(ix, iy + 1);
      if (fx > 0.0 && fy > 0.0) value += fx * fy * sample(ix + 1, iy + 1);
      out.at(u, v) = value;
    }
  }
  return out;
}

FeatureVector how_features(const AlignedImage& img, const GaborBank& bank, int grid) {
  if (img.size != bank.canvas()) throw std::invalid_argument("how_features: canvas size mismatch");
  return kernels::parallel::gabor_patch_means(img, bank, grid);
}

FeatureExtractor::FeatureExtractor(FeatureConfig cfg) : cfg_(cfg), bank_((cfg.validate(), cfg.canvas)) {}

FeatureVector FeatureExtractor::extract(const DepthImage& img) const {
  const auto mask = foreground_mask(img, cfg_.far_threshold);
  return how_features(align(img, mask, cfg_.canvas, cfg_.fill), bank_, cfg_.grid);
}

}  // namespace domforest
