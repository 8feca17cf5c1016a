/*
 * Copyright 2026 The ckptleak Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "test_support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <numbers>
#include <stdexcept>

namespace ckptleak::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return CKPTLEAK_FIXTURE_DIR; }

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "ckptleak-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Bytes random_bytes(Rng& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next());
  return out;
}

std::string random_key(Rng& rng, std::size_t max_len) {
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789._/-";
  const std::size_t len = 1 + rng.below(max_len);
  std::string key;
  for (std::size_t i = 0; i < len; ++i) key += kAlphabet[rng.below(kAlphabet.size())];
  if (rng.below(8) == 0) key += "\xc3\xa9";  // multi-byte UTF-8
  return key;
}

TensorEntry random_entry(Rng& rng, std::string key, std::uint64_t max_elements) {
  static constexpr DType kTypes[] = {DType::F32, DType::F64, DType::U8, DType::I64};
  const DType dtype = kTypes[rng.below(4)];
  const std::size_t ndim = rng.below(5);
  std::vector<std::uint64_t> shape;
  std::uint64_t elems = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint64_t cap = std::max<std::uint64_t>(1, max_elements / elems);
    const std::uint64_t d = rng.below(std::min<std::uint64_t>(cap, 64) + 1);
    shape.push_back(d);
    elems *= std::max<std::uint64_t>(d, 1);
  }
  std::uint64_t count = 1;
  for (auto d : shape) count *= d;
  return make_entry(std::move(key), dtype, shape, random_bytes(rng, count * dtype_width(dtype)));
}

Checkpoint random_checkpoint(Rng& rng, std::size_t max_entries, std::uint64_t max_elements) {
  Checkpoint c;
  const std::size_t n = rng.below(max_entries + 1);
  while (c.size() < n) {
    std::string key = random_key(rng);
    if (c.contains(key)) continue;
    c.add(random_entry(rng, std::move(key), max_elements));
  }
  return c;
}

std::vector<float> smooth_image(Rng& rng, std::uint32_t h, std::uint32_t w) {
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::vector<Wave> waves(4);
  for (auto& wv : waves)
    wv = {rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 2 * std::numbers::pi), rng.uniform(0.05, 0.2)};
  std::vector<float> img(std::size_t{h} * w);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      double v = 0.5;
      for (const auto& wv : waves)
        v += wv.amp * std::cos(2 * std::numbers::pi * (wv.fy * y / h + wv.fx * x / w) + wv.phase);
      img[std::size_t{y} * w + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  return img;
}

MaskVolume random_mask(Rng& rng, Dims dims, double fill, Spacing spacing) {
  MaskVolume m{dims, std::vector<std::uint8_t>(dims.count()), spacing};
  for (auto& v : m.voxels) v = rng.uniform() < fill ? 1 : 0;
  return m;
}

Phantom suite_phantom(std::uint64_t seed) { return generate_phantom(seed, kSuiteDims, kSuiteEllipsoids); }

CodecRun codec_round_trip(const Volume& v, TilingMode mode, int q, unsigned threads) {
  CodecRun r;
  r.code = encode_volume(v.normalized ? v : normalize_minmax(v), mode, q, threads);
  r.decoded = decode_volume(r.code, threads);
  const double range = double(v.intensity_max) - v.intensity_min;
  r.psnr = ckptleak::psnr(v, r.decoded, range > 0 ? range : 1.0);
  return r;
}

std::filesystem::path codec_floor_path() { return fixture_dir() / "codec_floor.json"; }

namespace oracle {

double mse(std::span<const float> a, std::span<const float> b) {
  long double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
    sum += d * d;
  }
  return static_cast<double>(sum / a.size());
}

double psnr(std::span<const float> a, std::span<const float> b, double peak) {
  const double m = mse(a, b);
  return m == 0 ? INFINITY : 10.0 * std::log10(peak * peak / m);
}

namespace {

struct Img {
  std::uint32_t h, w;
  std::vector<double> v;
  double at(std::uint32_t y, std::uint32_t x) const { return v[std::size_t{y} * w + x]; }
};

Img pool(const Img& in) {
  Img out{in.h / 2, in.w / 2, {}};
  for (std::uint32_t y = 0; y < out.h; ++y)
    for (std::uint32_t x = 0; x < out.w; ++x)
      out.v.push_back((in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) + in.at(2 * y + 1, 2 * x) +
                       in.at(2 * y + 1, 2 * x + 1)) / 4);
  return out;
}

}  // namespace

double ms_ssim(const std::vector<double>& a, const std::vector<double>& b, std::uint32_t h,
               std::uint32_t w, double data_range) {
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  std::array<std::array<double, kWin>, kWin> g{};
  double total = 0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) total += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * kSigma * kSigma));
  for (auto& row : g)
    for (auto& v : row) v /= total;
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);

  Img x{h, w, a}, y{h, w, b};
  double result = 1;
  for (int s = 0; s < 5; ++s) {
    double cs_sum = 0, ssim_sum = 0;
    std::size_t n = 0;
    for (std::uint32_t r = 0; r + kWin <= x.h; ++r)
      for (std::uint32_t c = 0; c + kWin <= x.w; ++c) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            const double gx = x.at(r + i, c + j), gy = y.at(r + i, c + j), wt = g[i][j];
            mx += wt * gx;
            my += wt * gy;
            sxx += wt * gx * gx;
            syy += wt * gy * gy;
            sxy += wt * gx * gy;
          }
        const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
        const double cs = (2 * cov + c2) / (vx + vy + c2);
        cs_sum += cs;
        ssim_sum += cs * (2 * mx * my + c1) / (mx * mx + my * my + c1);
        ++n;
      }
    const double term = s == 4 ? ssim_sum / n : cs_sum / n;
    result *= std::pow(std::clamp(term, 0.0, 1.0), kWeights[s]);
    x = pool(x);
    y = pool(y);
  }
  return result;
}

OverlapMetrics overlap(const MaskVolume& p, const MaskVolume& g) {
  double np = 0, ng = 0, both = 0, either = 0;
  for (std::size_t i = 0; i < p.voxels.size(); ++i) {
    np += p.voxels[i];
    ng += g.voxels[i];
    both += p.voxels[i] && g.voxels[i];
    either += p.voxels[i] || g.voxels[i];
  }
  if (either == 0) return {1, 0, 0};
  return {2 * both / (np + ng), 1 - both / either, ng == 0 ? INFINITY : (np - ng) / ng};
}

namespace {

std::vector<std::array<double, 3>> surface_points(const MaskVolume& m) {
  const Dims d = m.dims;
  auto inside = [&](long z, long y, long x) {
    return z >= 0 && y >= 0 && x >= 0 && z < long(d.depth) && y < long(d.height) && x < long(d.width) &&
           m.voxels[(std::size_t(z) * d.height + y) * d.width + x];
  };
  std::vector<std::array<double, 3>> pts;
  for (long z = 0; z < long(d.depth); ++z)
    for (long y = 0; y < long(d.height); ++y)
      for (long x = 0; x < long(d.width); ++x) {
        if (!inside(z, y, x)) continue;
        const bool border = !inside(z - 1, y, x) || !inside(z + 1, y, x) || !inside(z, y - 1, x) ||
                            !inside(z, y + 1, x) || !inside(z, y, x - 1) || !inside(z, y, x + 1);
        if (border) pts.push_back({z * m.spacing.z, y * m.spacing.y, x * m.spacing.x});
      }
  return pts;
}

}  // namespace

SurfaceMetrics surface(const MaskVolume& p, const MaskVolume& g) {
  const auto sp = surface_points(p), sg = surface_points(g);
  std::vector<double> dists;
  auto directed = [&](const auto& from, const auto& to) {
    for (const auto& a : from) {
      double best = INFINITY;
      for (const auto& b : to)
        best = std::min(best, std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]));
      dists.push_back(best);
    }
  };
  directed(sp, sg);
  directed(sg, sp);
  double sum = 0, sq = 0, mx = 0;
  for (double d : dists) {
    sum += d;
    sq += d * d;
    mx = std::max(mx, d);
  }
  return {sum / dists.size(), mx, std::sqrt(sq / dists.size())};
}

double entropy(ByteSpan bytes) {
  std::map<std::uint8_t, std::size_t> counts;
  for (auto b : bytes) ++counts[b];
  double h = 0;
  for (const auto& [_, c] : counts) {
    const double p = double(c) / bytes.size();
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace oracle
}  // namespace ckptleak::testing
