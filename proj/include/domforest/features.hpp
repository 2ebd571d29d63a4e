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

#include "domforest/observation.hpp"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace domforest {

namespace kernels {
class GaborSpectra;
}

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForegroundMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

/// Square canvas holding the centered, rescaled, normalized foreground. Background is 0.
struct AlignedImage {
  int size = 0;
  std::vector<double> pixels;

  AlignedImage() = default;
  explicit AlignedImage(int s) : size(s), pixels(static_cast<std::size_t>(s) * s, 0.0) {}
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * size + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * size + x]; }
};

/// Even (cosine) Gabor kernel, made DC-free by subtracting a scaled copy of its envelope.
struct GaborFilter {
  double orientation = 0.0;  // radians; 0 responds to intensity varying along x
  double wavelength = 4.0;   // pixels
  double sigma = 2.24;
  double aspect = 0.5;
  int size = 15;             // odd
  std::vector<double> taps;  // size*size, row-major, center at (size/2, size/2)

  int radius() const { return size / 2; }
  double tap(int dx, int dy) const { return taps[static_cast<std::size_t>(dy + radius()) * size + dx + radius()]; }
};

GaborFilter make_gabor(double orientation, double wavelength, double sigma_ratio = 0.56, double aspect = 0.5);

/// 4 orientations x 3 wavelengths, stored orientation-major.
class GaborBank {
 public:
  explicit GaborBank(int canvas = 128);
  GaborBank(std::vector<GaborFilter> filters, int canvas);

  const std::vector<GaborFilter>& filters() const { return filters_; }
  std::size_t size() const { return filters_.size(); }
  int canvas() const { return canvas_; }
  int max_radius() const;
  const kernels::GaborSpectra& spectra() const { return *spectra_; }

 private:
  std::vector<GaborFilter> filters_;
  int canvas_;
  std::shared_ptr<const kernels::GaborSpectra> spectra_;
};

using FeatureVector = std::vector<double>;

struct FeatureConfig {
  int canvas = 128;
  int grid = 8;
  double fill = 0.8;
  double far_threshold = 2.0;

  void validate() const;
};

/// Foreground iff depth is not background and closer than `far_threshold`.
ForegroundMask foreground_mask(const DepthImage& img, double far_threshold = 2.0);

/// Centers the foreground bounding box on the canvas and scales it so its longer side spans
/// `fill * canvas` pixels; depths are min-max normalized over the foreground. Throws
/// AlignmentError on an empty mask.
AlignedImage align(const DepthImage& img, const ForegroundMask& mask, int canvas = 128, double fill = 0.8);

/// Mean Gabor magnitude per patch of a grid x grid partition, patch-major then filter.
FeatureVector how_features(const AlignedImage& img, const GaborBank& bank, int grid = 8);

/// The whole observation-to-feature transform.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureConfig cfg = {});

  const FeatureConfig& config() const { return cfg_; }
  const GaborBank& bank() const { return bank_; }
  std::size_t dimension() const { return static_cast<std::size_t>(cfg_.grid) * cfg_.grid * bank_.size(); }

  FeatureVector extract(const DepthImage& img) const;

 private:
  FeatureConfig cfg_;
  GaborBank bank_;
};

}  // namespace domforest
