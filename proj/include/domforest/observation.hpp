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

#include "domforest/cloth.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace domforest {

/// Single-view depth observation, row-major, meters along the view axis.
struct DepthImage {
  static constexpr float kBackground = std::numeric_limits<float>::infinity();
  /// Value the background takes in serialized form.
  static constexpr float kSerializedBackground = 1e9f;

  int width = 0;
  int height = 0;
  std::vector<float> depth;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), depth(static_cast<std::size_t>(w) * h, kBackground) {}

  float& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
  static bool is_background(float d) { return !(d < kSerializedBackground); }
  std::size_t foreground_count() const;

  bool operator==(const DepthImage&) const = default;
};

struct CameraModel {
  Vec3 position{0.15, 0.175, 0.8};
  Vec3 look_at{0.15, 0.175, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double fov_y = 60.0 * 3.14159265358979323846 / 180.0;
  double near_m = 0.05;
  double far_m = 3.0;
  int width = 160;
  int height = 120;

  void validate() const;
};

struct NoiseSpec {
  double depth_sigma = 0.0;
  int occluder_count = 0;
  int occluder_min_px = 6;
  int occluder_max_px = 16;
  double dropout_prob = 0.0;
  /// Closest depth an occluder may take.
  double occluder_min_depth = 0.1;

  bool is_zero() const { return depth_sigma == 0.0 && occluder_count == 0 && dropout_prob == 0.0; }
  void validate() const;
};

/// Z-buffered perspective rasterization of the cloth grid (two triangles per cell).
DepthImage render_depth(const ClothState& state, const ClothMesh& mesh, const CameraModel& cam);

/// Rasterizes arbitrary triangles; the cloth renderer is a thin wrapper around this.
DepthImage render_triangles(const std::vector<Vec3>& vertices,
                            const std::vector<std::array<int, 3>>& triangles, const CameraModel& cam);

/// Gaussian depth jitter on foreground, interposed rectangular occluders, then per-pixel dropout.
DepthImage apply_noise(const DepthImage& img, const NoiseSpec& spec, std::uint64_t seed);

// "DIMG" binary: magic, u32 width, u32 height, width*height little-endian f32 (background = 1e9).
void write_dimg(std::ostream& out, const DepthImage& img);
DepthImage read_dimg(std::istream& in);
void save_dimg(const std::string& path, const DepthImage& img);
DepthImage load_dimg(const std::string& path);

/// Plain-text PGM-style dump; values printed with 9 significant digits so floats round-trip.
void write_depth_text(std::ostream& out, const DepthImage& img);
DepthImage read_depth_text(std::istream& in);

}  // namespace domforest
