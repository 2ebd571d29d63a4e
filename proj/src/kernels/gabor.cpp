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

#include "domforest/kernels/gabor.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace domforest::kernels {

namespace {

// FFTW's planner is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int smooth_size(int n) {
  for (int p = n;; ++p) {
    int r = p;
    for (int f : {2, 3, 5}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return p;
  }
}

struct FftwReal {
  double* p;
  explicit FftwReal(std::size_t n) : p(fftw_alloc_real(n)) {
    if (!p) throw std::bad_alloc();
  }
  ~FftwReal() { fftw_free(p); }
  FftwReal(const FftwReal&) = delete;
  FftwReal& operator=(const FftwReal&) = delete;
};

struct FftwComplex {
  fftw_complex* p;
  explicit FftwComplex(std::size_t n) : p(fftw_alloc_complex(n)) {
    if (!p) throw std::bad_alloc();
  }
  ~FftwComplex() { fftw_free(p); }
  FftwComplex(const FftwComplex&) = delete;
  FftwComplex& operator=(const FftwComplex&) = delete;
};

void check_grid(const AlignedImage& img, int grid) {
  if (grid < 1 || img.size % grid != 0) throw std::invalid_argument("gabor: grid must divide the canvas");
}

}  // namespace

GaborSpectra::GaborSpectra(const std::vector<GaborFilter>& filters, int canvas) : canvas_(canvas) {
  margin_ = 0;
  for (const auto& f : filters) margin_ = std::max(margin_, f.radius());
  padded_ = smooth_size(canvas + 2 * margin_);
  const int p = padded_;
  const std::size_t real_n = static_cast<std::size_t>(p) * p;
  FftwReal in(real_n);
  FftwComplex out(spectrum_size());
  {
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_2d(p, p, in.p, out.p, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_2d(p, p, out.p, in.p, FFTW_ESTIMATE);
  }
  const double norm = 1.0 / static_cast<double>(real_n);
  spectra_.reserve(filters.size());
  for (const auto& f : filters) {
    std::fill(in.p, in.p + real_n, 0.0);
    const int r = f.radius();
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const int row = (dy + p) % p, col = (dx + p) % p;
        in.p[static_cast<std::size_t>(row) * p + col] = f.tap(dx, dy);
      }
    }
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), in.p, out.p);
    std::vector<std::complex<double>> spec(spectrum_size());
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = {out.p[k][0] * norm, out.p[k][1] * norm};
    spectra_.push_back(std::move(spec));
  }
}

GaborSpectra::~GaborSpectra() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (inverse_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_));
}

namespace reference {

std::vector<double> gabor_patch_means(const AlignedImage& img, const GaborBank& bank, int grid) {
  check_grid(img, grid);
  const int n = img.size;
  const int patch = n / grid;
  const std::size_t nf = bank.size();
  std::vector<double> out(static_cast<std::size_t>(grid) * grid * nf, 0.0);
  auto px = [&](int x, int y) { return img.at(std::clamp(x, 0, n - 1), std::clamp(y, 0, n - 1)); };
  for (std::size_t f = 0; f < nf; ++f) {
    const GaborFilter& g = bank.filters()[f];
    const int r = g.radius();
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) acc += g.tap(dx, dy) * px(x + dx, y + dy);
        }
        const auto cell = static_cast<std::size_t>(y / patch) * grid + x / patch;
        out[cell * nf + f] += std::abs(acc);
      }
    }
  }
  const double inv = 1.0 / (static_cast<double>(patch) * patch);
  for (auto& v : out) v *= inv;
  return out;
}

}  // namespace reference

namespace parallel {

std::vector<double> gabor_patch_means(const AlignedImage& img, const GaborBank& bank, int grid) {
  check_grid(img, grid);
  const GaborSpectra& spec = bank.spectra();
  if (spec.canvas() != img.size) throw std::invalid_argument("gabor: canvas size mismatch");
  const int n = img.size;
  const int p = spec.padded();
  const int m = spec.margin();
  const int patch = n / grid;
  const std::size_t nf = bank.size();
  const std::size_t real_n = static_cast<std::size_t>(p) * p;
  const std::size_t cplx_n = spec.spectrum_size();

  // Replicate-padded canvas; everything past canvas + 2 * margin is never read back.
  FftwReal padded(real_n);
  std::fill(padded.p, padded.p + real_n, 0.0);
  const int extent = n + 2 * m;
  for (int y = 0; y < extent; ++y) {
    const int sy = std::clamp(y - m, 0, n - 1);
    for (int x = 0; x < extent; ++x) {
      padded.p[static_cast<std::size_t>(y) * p + x] = img.at(std::clamp(x - m, 0, n - 1), sy);
    }
  }
  FftwComplex image_spec(cplx_n);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(spec.forward_plan()), padded.p, image_spec.p);

  std::vector<double> out(static_cast<std::size_t>(grid) * grid * nf, 0.0);
  const double inv = 1.0 / (static_cast<double>(patch) * patch);
  const int nfi = static_cast<int>(nf);
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < nfi; ++f) {
    FftwComplex prod(cplx_n);
    FftwReal response(real_n);
    const std::complex<double>* k = spec.filter(static_cast<std::size_t>(f));
    for (std::size_t i = 0; i < cplx_n; ++i) {
      const std::complex<double> a(image_spec.p[i][0], image_spec.p[i][1]);
      const std::complex<double> c = a * k[i];
      prod.p[i][0] = c.real();
      prod.p[i][1] = c.imag();
    }
    fftw_execute_dft_c2r(static_cast<fftw_plan>(spec.inverse_plan()), prod.p, response.p);
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        double acc = 0.0;
        for (int y = gy * patch; y < (gy + 1) * patch; ++y) {
          const double* row = response.p + static_cast<std::size_t>(y + m) * p + m;
          for (int x = gx * patch; x < (gx + 1) * patch; ++x) acc += std::abs(row[x]);
        }
        out[(static_cast<std::size_t>(gy) * grid + gx) * nf + f] = acc * inv;
      }
    }
  }
  return out;
}

}  // namespace parallel

}  // namespace domforest::kernels
