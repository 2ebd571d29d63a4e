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

#include "domforest/features.hpp"

#include <complex>
#include <vector>

namespace domforest::kernels {

/// Pre-transformed filter bank for FFT convolution on a replicate-padded canvas.
class GaborSpectra {
 public:
  GaborSpectra(const std::vector<GaborFilter>& filters, int canvas);
  ~GaborSpectra();
  GaborSpectra(const GaborSpectra&) = delete;
  GaborSpectra& operator=(const GaborSpectra&) = delete;

  int padded() const { return padded_; }
  int margin() const { return margin_; }
  int canvas() const { return canvas_; }
  std::size_t spectrum_size() const { return static_cast<std::size_t>(padded_) * (padded_ / 2 + 1); }
  const std::complex<double>* filter(std::size_t f) const { return spectra_[f].data(); }
  void* forward_plan() const { return forward_; }
  void* inverse_plan() const { return inverse_; }

 private:
  int canvas_;
  int margin_;
  int padded_;
  std::vector<std::vector<std::complex<double>>> spectra_;
  void* forward_ = nullptr;
  void* inverse_ = nullptr;
};

// Per-patch mean |response| for every filter; layout matches how_features.

namespace reference {
/// Direct spatial convolution with clamp-to-edge borders.
std::vector<double> gabor_patch_means(const AlignedImage& img, const GaborBank& bank, int grid);
}  // namespace reference

namespace parallel {
/// FFT convolution, one OpenMP task per filter.
std::vector<double> gabor_patch_means(const AlignedImage& img, const GaborBank& bank, int grid);
}  // namespace parallel

}  // namespace domforest::kernels
