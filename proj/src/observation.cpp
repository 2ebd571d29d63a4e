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

#include "domforest/observation.hpp"

#include "domforest/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace domforest {

std::size_t DepthImage::foreground_count() const {
  return static_cast<std::size_t>(
      std::count_if(depth.begin(), depth.end(), [](float d) { return !is_background(d); }));
}

void CameraModel::validate() const {
  if (!(near_m > 0.0) || !(near_m < far_m)) throw std::invalid_argument("camera: need 0 < near < far");
  if (!(fov_y > 0.0) || !(fov_y < 3.14159265358979323846)) {
    throw std::invalid_argument("camera: fov must lie in (0, pi)");
  }
  if (width < 8 || height < 8) throw std::invalid_argument("camera: image must be at least 8x8");
  if ((look_at - position).norm() < 1e-12) {
    throw std::invalid_argument("camera: degenerate camera (position equals look-at)");
  }
  if ((look_at - position).normalized().cross(up).norm() < 1e-9) {
    throw std::invalid_argument("camera: up vector is parallel to the view direction");
  }
}

void NoiseSpec::validate() const {
  if (depth_sigma < 0.0 || occluder_count < 0 || occluder_min_px < 0 || dropout_prob < 0.0) {
    throw std::invalid_argument("noise: all fields must be >= 0");
  }
  if (dropout_prob > 1.0) throw std::invalid_argument("noise: dropout_prob must be <= 1");
  if (occluder_max_px < occluder_min_px) throw std::invalid_argument("noise: occluder size range is empty");
}

DepthImage render_triangles(const std::vector<Vec3>& vertices,
                            const std::vector<std::array<int, 3>>& triangles, const CameraModel& cam) {
  cam.validate();
  const Vec3 forward = (cam.look_at - cam.position).normalized();
  const Vec3 right = forward.cross(cam.up).normalized();
  const Vec3 up = right.cross(forward);
  const double tan_half = std::tan(cam.fov_y / 2.0);
  const double aspect = static_cast<double>(cam.width) / cam.height;
  const double fy = cam.height / (2.0 * tan_half);
  const double fx = cam.width / (2.0 * tan_half * aspect);
  const double cx = cam.width / 2.0, cy = cam.height / 2.0;

  struct Projected {
    double sx, sy, depth;
  };
  std::vector<Projected> proj(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3 rel = vertices[i] - cam.position;
    const double z = rel.dot(forward);
    const double safe = z > 0.0 ? z : 1.0;
    proj[i] = {cx + fx * rel.dot(right) / safe, cy - fy * rel.dot(up) / safe, z};
  }

  DepthImage img(cam.width, cam.height);
  for (const auto& tri : triangles) {
    const Projected& a = proj[tri[0]];
    const Projected& b = proj[tri[1]];
    const Projected& c = proj[tri[2]];
    // Near-plane clipping is not implemented; drop triangles that cross it.
    if (a.depth <= cam.near_m || b.depth <= cam.near_m || c.depth <= cam.near_m) continue;
    const double area = (b.sx - a.sx) * (c.sy - a.sy) - (b.sy - a.sy) * (c.sx - a.sx);
    if (std::abs(area) < 1e-14) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.sx, b.sx, c.sx}))));
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max({a.sx, b.sx, c.sx}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.sy, b.sy, c.sy}))));
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max({a.sy, b.sy, c.sy}))));
    const double inv_a = 1.0 / a.depth, inv_b = 1.0 / b.depth, inv_c = 1.0 / c.depth;
    for (int py = y0; py <= y1; ++py) {
      const double y = py + 0.5;
      for (int px = x0; px <= x1; ++px) {
        const double x = px + 0.5;
        // Barycentric weights from edge functions; inclusive on edges.
        const double w0 = ((b.sx - x) * (c.sy - y) - (b.sy - y) * (c.sx - x)) / area;
        const double w1 = ((c.sx - x) * (a.sy - y) - (c.sy - y) * (a.sx - x)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        // Perspective-correct depth: 1/z is affine in screen space.
        const double depth = 1.0 / (w0 * inv_a + w1 * inv_b + w2 * inv_c);
        if (depth <= cam.near_m || depth >= cam.far_m) continue;
        float& dst = img.at(px, py);
        if (depth < dst) dst = static_cast<float>(depth);
      }
    }
  }
  return img;
}

DepthImage render_depth(const ClothState& state, const ClothMesh& mesh, const CameraModel& cam) {
  return render_triangles(state.positions, mesh.triangles(), cam);
}

DepthImage apply_noise(const DepthImage& img, const NoiseSpec& spec, std::uint64_t seed) {
  spec.validate();
  DepthImage out = img;
  if (spec.is_zero()) return out;
  Rng rng(seed);

  float fg_min = DepthImage::kBackground;
  int bx0 = out.width, by0 = out.height, bx1 = -1, by1 = -1;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const float d = out.at(x, y);
      if (DepthImage::is_background(d)) continue;
      fg_min = std::min(fg_min, d);
      bx0 = std::min(bx0, x), bx1 = std::max(bx1, x);
      by0 = std::min(by0, y), by1 = std::max(by1, y);
    }
  }

  if (spec.depth_sigma > 0.0) {
    std::normal_distribution<double> gauss(0.0, spec.depth_sigma);
    for (auto& d : out.depth) {
      if (DepthImage::is_background(d)) continue;
      d = static_cast<float>(std::max(spec.occluder_min_depth * 0.5, d + gauss(rng)));
    }
  }

  // Occluders sit between the camera and the cloth, centered somewhere over its bounding box.
  if (bx1 < 0) {
    bx0 = by0 = 0;
    bx1 = out.width - 1;
    by1 = out.height - 1;
  }
  const double nearest = std::isfinite(fg_min) ? static_cast<double>(fg_min) : 1.0;
  for (int k = 0; k < spec.occluder_count; ++k) {
    const int w = spec.occluder_min_px +
                  static_cast<int>(uniform01(rng) * (spec.occluder_max_px - spec.occluder_min_px + 1));
    const int h = spec.occluder_min_px +
                  static_cast<int>(uniform01(rng) * (spec.occluder_max_px - spec.occluder_min_px + 1));
    const int cxp = bx0 + static_cast<int>(uniform01(rng) * (bx1 - bx0 + 1));
    const int cyp = by0 + static_cast<int>(uniform01(rng) * (by1 - by0 + 1));
    const double lo = std::min(spec.occluder_min_depth, nearest);
    const float depth = static_cast<float>(uniform(rng, lo, nearest));
    for (int y = std::max(0, cyp - h / 2); y < std::min(out.height, cyp - h / 2 + h); ++y) {
      for (int x = std::max(0, cxp - w / 2); x < std::min(out.width, cxp - w / 2 + w); ++x) {
        out.at(x, y) = depth;
      }
    }
  }

  if (spec.dropout_prob > 0.0) {
    for (auto& d : out.depth) {
      if (uniform01(rng) < spec.dropout_prob) d = DepthImage::kBackground;
    }
  }
  return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("DIMG: truncated input");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_dimg(std::ostream& out, const DepthImage& img) {
  out.write("DIMG", 4);
  put_u32(out, static_cast<std::uint32_t>(img.width));
  put_u32(out, static_cast<std::uint32_t>(img.height));
  for (float d : img.depth) {
    const float stored = DepthImage::is_background(d) ? DepthImage::kSerializedBackground : d;
    put_u32(out, std::bit_cast<std::uint32_t>(stored));
  }
}

DepthImage read_dimg(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "DIMG", 4) != 0) {
    throw std::runtime_error("DIMG: bad magic");
  }
  const auto w = get_u32(in);
  const auto h = get_u32(in);
  if (w < 1 || h < 1 || w > 1u << 15 || h > 1u << 15) throw std::runtime_error("DIMG: bad dimensions");
  DepthImage img(static_cast<int>(w), static_cast<int>(h));
  for (auto& d : img.depth) {
    const float v = std::bit_cast<float>(get_u32(in));
    d = DepthImage::is_background(v) ? DepthImage::kBackground : v;
  }
  return img;
}

void save_dimg(const std::string& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dimg(out, img);
}

DepthImage load_dimg(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dimg(in);
}

void write_depth_text(std::ostream& out, const DepthImage& img) {
  out << "P2F\n# depth in meters, background " << DepthImage::kSerializedBackground << "\n"
      << img.width << ' ' << img.height << '\n';
  out << std::setprecision(9);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float d = img.at(x, y);
      out << (DepthImage::is_background(d) ? DepthImage::kSerializedBackground : d)
          << (x + 1 == img.width ? '\n' : ' ');
    }
  }
}

DepthImage read_depth_text(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic != "P2F") throw std::runtime_error("depth text: bad magic '" + magic + "'");
  in >> std::ws;
  while (in.peek() == '#') {
    std::string comment;
    std::getline(in, comment);
  }
  int w = 0, h = 0;
  if (!(in >> w >> h) || w < 1 || h < 1) throw std::runtime_error("depth text: bad dimensions");
  DepthImage img(w, h);
  for (auto& d : img.depth) {
    float v;
    if (!(in >> v)) throw std::runtime_error("depth text: truncated input");
    d = DepthImage::is_background(v) ? DepthImage::kBackground : v;
  }
  return img;
}

}  // namespace domforest
