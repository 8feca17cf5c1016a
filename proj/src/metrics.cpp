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

#include "ckptleak/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ckptleak {
namespace {

void require_same(Dims a, Dims b) {
  if (a != b) throw Error(Errc::DimensionMismatch, "inputs have different dimensions");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  double sum = 0;
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) sum += k[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
  for (auto& v : k) v /= sum;
  return k;
}

struct Image {
  std::uint32_t h = 0, w = 0;
  std::vector<double> px;
};

// Valid-mode separable filtering.
Image filter_valid(const Image& in, const std::vector<double>& k) {
  const std::uint32_t n = static_cast<std::uint32_t>(k.size());
  Image tmp{in.h, in.w - n + 1, {}};
  tmp.px.resize(std::size_t{tmp.h} * tmp.w);
  for (std::uint32_t y = 0; y < tmp.h; ++y)
    for (std::uint32_t x = 0; x < tmp.w; ++x) {
      double s = 0;
      for (std::uint32_t i = 0; i < n; ++i) s += k[i] * in.px[std::size_t{y} * in.w + x + i];
      tmp.px[std::size_t{y} * tmp.w + x] = s;
    }
  Image out{in.h - n + 1, tmp.w, {}};
  out.px.resize(std::size_t{out.h} * out.w);
  for (std::uint32_t y = 0; y < out.h; ++y)
    for (std::uint32_t x = 0; x < out.w; ++x) {
      double s = 0;
      for (std::uint32_t i = 0; i < n; ++i) s += k[i] * tmp.px[std::size_t{y + i} * tmp.w + x];
      out.px[std::size_t{y} * out.w + x] = s;
    }
  return out;
}

Image product(const Image& a, const Image& b) {
  Image out{a.h, a.w, std::vector<double>(a.px.size())};
  for (std::size_t i = 0; i < a.px.size(); ++i) out.px[i] = a.px[i] * b.px[i];
  return out;
}

Image downsample2(const Image& in) {
  Image out{in.h / 2, in.w / 2, {}};
  out.px.resize(std::size_t{out.h} * out.w);
  for (std::uint32_t y = 0; y < out.h; ++y)
    for (std::uint32_t x = 0; x < out.w; ++x) {
      const std::size_t i = std::size_t{2 * y} * in.w + 2 * x;
      out.px[std::size_t{y} * out.w + x] =
          0.25 * (in.px[i] + in.px[i + 1] + in.px[i + in.w] + in.px[i + in.w + 1]);
    }
  return out;
}

// Mean contrast-structure term and mean full SSIM at one scale.
std::pair<double, double> ssim_terms(const Image& a, const Image& b, const std::vector<double>& k,
                                     double c1, double c2) {
  const Image mu_a = filter_valid(a, k), mu_b = filter_valid(b, k);
  const Image aa = filter_valid(product(a, a), k), bb = filter_valid(product(b, b), k),
              ab = filter_valid(product(a, b), k);
  double cs_sum = 0, ssim_sum = 0;
  for (std::size_t i = 0; i < mu_a.px.size(); ++i) {
    const double ma = mu_a.px[i], mb = mu_b.px[i];
    const double va = aa.px[i] - ma * ma, vb = bb.px[i] - mb * mb, cov = ab.px[i] - ma * mb;
    const double cs = (2 * cov + c2) / (va + vb + c2);
    const double lum = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    cs_sum += cs;
    ssim_sum += lum * cs;
  }
  const double n = static_cast<double>(mu_a.px.size());
  return {cs_sum / n, ssim_sum / n};
}

// Squared Euclidean distance transform along one axis (Felzenszwalb &
// Huttenlocher lower envelope), with sample spacing `step`.
void edt_1d(std::vector<double>& f, double step, std::vector<double>& out,
            std::vector<std::size_t>& v, std::vector<double>& z) {
  const std::size_t n = f.size();
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q)
    if (std::isfinite(f[q])) { first = q; break; }
  if (first == n) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (std::size_t q = first + 1; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    const double xq = q * step;
    auto meet = [&](std::size_t u) {
      const double xu = u * step;
      return ((f[q] + xq * xq) - (f[u] + xu * xu)) / (2 * (xq - xu));
    };
    double s = meet(v[k]);
    while (s <= z[k]) s = meet(v[--k]);  // z[0] = -inf stops the walk
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double xq = q * step;
    while (z[k + 1] < xq) ++k;
    const double d = xq - v[k] * step;
    out[q] = d * d + f[v[k]];
  }
}

// Squared distance from every voxel to the nearest feature voxel.
std::vector<double> squared_distance_map(const MaskVolume& shape, const std::vector<std::size_t>& features) {
  const Dims d = shape.dims;
  std::vector<double> dist(d.count(), kInf);
  for (auto i : features) dist[i] = 0.0;

  const std::uint32_t longest = std::max({d.depth, d.height, d.width});
  std::vector<double> f(longest), out(longest), z(longest + 1);
  std::vector<std::size_t> v(longest);
  auto run = [&](std::uint32_t n, std::size_t stride, std::size_t base, double step) {
    f.resize(n);
    out.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) f[i] = dist[base + i * stride];
    edt_1d(f, step, out, v, z);
    for (std::uint32_t i = 0; i < n; ++i) dist[base + i * stride] = out[i];
  };
  const std::size_t plane = std::size_t{d.height} * d.width;
  for (std::uint32_t z0 = 0; z0 < d.depth; ++z0)
    for (std::uint32_t y = 0; y < d.height; ++y) run(d.width, 1, z0 * plane + std::size_t{y} * d.width, shape.spacing.x);
  for (std::uint32_t z0 = 0; z0 < d.depth; ++z0)
    for (std::uint32_t x = 0; x < d.width; ++x) run(d.height, d.width, z0 * plane + x, shape.spacing.y);
  for (std::uint32_t y = 0; y < d.height; ++y)
    for (std::uint32_t x = 0; x < d.width; ++x) run(d.depth, plane, std::size_t{y} * d.width + x, shape.spacing.z);
  return dist;
}

void check_mask(const MaskVolume& m) {
  if (m.voxels.size() != m.dims.count())
    throw Error(Errc::DimensionMismatch, "mask voxel count does not match dimensions");
  if (!(m.spacing.z > 0 && m.spacing.y > 0 && m.spacing.x > 0))
    throw Error(Errc::InvalidArgument, "voxel spacing must be positive");
}

}  // namespace

std::uint64_t MaskVolume::count() const {
  std::uint64_t n = 0;
  for (auto v : voxels) n += v != 0;
  return n;
}

MaskVolume mask_from_volume(const Volume& v, Spacing spacing) {
  v.validate();
  MaskVolume m{v.dims(), std::vector<std::uint8_t>(v.voxels.size()), spacing};
  for (std::size_t i = 0; i < v.voxels.size(); ++i) m.voxels[i] = v.voxels[i] > 0.5f ? 1 : 0;
  return m;
}

double psnr(std::span<const float> a, std::span<const float> b, double peak) {
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "psnr inputs differ in size");
  if (a.empty()) throw Error(Errc::InvalidArgument, "psnr of empty input");
  if (!(peak > 0)) throw Error(Errc::InvalidArgument, "psnr peak must be positive");
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return kInf;
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const Volume& a, const Volume& b, double peak) {
  require_same(a.dims(), b.dims());
  return psnr(std::span<const float>(a.voxels), std::span<const float>(b.voxels), peak);
}

double ms_ssim(std::span<const float> a, std::span<const float> b, std::uint32_t height,
               std::uint32_t width, const SsimParams& params) {
  if (a.size() != std::size_t{height} * width || b.size() != a.size())
    throw Error(Errc::DimensionMismatch, "ms_ssim inputs do not match the given size");
  const std::size_t scales = params.weights.size();
  std::uint32_t h = height, w = width;
  for (std::size_t s = 1; s < scales; ++s) h /= 2, w /= 2;
  if (h < static_cast<std::uint32_t>(params.window) || w < static_cast<std::uint32_t>(params.window))
    throw Error(Errc::UnsupportedSize, "ms_ssim needs at least " +
                                           std::to_string(params.window << (scales - 1)) +
                                           " pixels per side, got " + std::to_string(height) + "x" +
                                           std::to_string(width));
  const auto k = gaussian_kernel(params.window, params.sigma);
  const double c1 = std::pow(params.k1 * params.data_range, 2);
  const double c2 = std::pow(params.k2 * params.data_range, 2);

  Image x{height, width, std::vector<double>(a.begin(), a.end())};
  Image y{height, width, std::vector<double>(b.begin(), b.end())};
  double result = 1.0;
  for (std::size_t s = 0; s < scales; ++s) {
    const auto [cs, ssim] = ssim_terms(x, y, k, c1, c2);
    const double term = s + 1 == scales ? ssim : cs;
    result *= std::pow(std::clamp(term, 0.0, 1.0), params.weights[s]);
    if (s + 1 < scales) {
      x = downsample2(x);
      y = downsample2(y);
    }
  }
  return result;
}

double ms_ssim(const Volume& a, const Volume& b, const SsimParams& params) {
  require_same(a.dims(), b.dims());
  double sum = 0;
  for (std::uint32_t z = 0; z < a.depth; ++z)
    sum += ms_ssim(a.slice(z), b.slice(z), a.height, a.width, params);
  return sum / a.depth;
}

OverlapMetrics overlap_metrics(const MaskVolume& p, const MaskVolume& g) {
  check_mask(p);
  check_mask(g);
  require_same(p.dims, g.dims);
  std::uint64_t np = 0, ng = 0, inter = 0;
  for (std::size_t i = 0; i < p.voxels.size(); ++i) {
    const bool a = p.voxels[i] != 0, b = g.voxels[i] != 0;
    np += a;
    ng += b;
    inter += a && b;
  }
  if (np == 0 && ng == 0) return {1.0, 0.0, 0.0};
  const double uni = double(np + ng - inter);
  OverlapMetrics m;
  m.dice = 2.0 * inter / double(np + ng);
  m.voe = 1.0 - inter / uni;
  m.rvd = ng == 0 ? kInf : (double(np) - double(ng)) / double(ng);
  return m;
}

std::vector<std::size_t> surface_voxels(const MaskVolume& m) {
  check_mask(m);
  const Dims d = m.dims;
  std::vector<std::size_t> out;
  auto bg = [&](std::int64_t z, std::int64_t y, std::int64_t x) {
    if (z < 0 || y < 0 || x < 0 || z >= d.depth || y >= d.height || x >= d.width) return true;
    return m.voxels[m.index(std::uint32_t(z), std::uint32_t(y), std::uint32_t(x))] == 0;
  };
  for (std::uint32_t z = 0; z < d.depth; ++z)
    for (std::uint32_t y = 0; y < d.height; ++y)
      for (std::uint32_t x = 0; x < d.width; ++x) {
        const std::size_t i = m.index(z, y, x);
        if (!m.voxels[i]) continue;
        const std::int64_t Z = z, Y = y, X = x;
        if (bg(Z - 1, Y, X) || bg(Z + 1, Y, X) || bg(Z, Y - 1, X) || bg(Z, Y + 1, X) ||
            bg(Z, Y, X - 1) || bg(Z, Y, X + 1))
          out.push_back(i);
      }
  return out;
}

SurfaceMetrics surface_metrics(const MaskVolume& p, const MaskVolume& g) {
  check_mask(p);
  check_mask(g);
  require_same(p.dims, g.dims);
  if (p.spacing.z != g.spacing.z || p.spacing.y != g.spacing.y || p.spacing.x != g.spacing.x)
    throw Error(Errc::InvalidArgument, "masks have different voxel spacing");
  const auto sp = surface_voxels(p);
  const auto sg = surface_voxels(g);
  if (sp.empty() || sg.empty()) throw Error(Errc::NoSurface, "surface metrics need two non-empty masks");

  double sum = 0, sum_sq = 0, max_d = 0;
  auto accumulate = [&](const std::vector<std::size_t>& from, const std::vector<double>& dist) {
    for (auto i : from) {
      const double d2 = dist[i];
      const double d = std::sqrt(d2);
      sum += d;
      sum_sq += d2;
      max_d = std::max(max_d, d);
    }
  };
  accumulate(sp, squared_distance_map(g, sg));
  accumulate(sg, squared_distance_map(p, sp));
  const double n = static_cast<double>(sp.size() + sg.size());
  return {sum / n, max_d, std::sqrt(sum_sq / n)};
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  auto value = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (!v || std::isnan(*v)) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
  };
  nlohmann::ordered_json j;
  j["psnr"] = value(r.psnr);
  j["ms_ssim"] = value(r.ms_ssim);
  j["dice"] = value(r.dice);
  j["voe"] = value(r.voe);
  j["rvd"] = value(r.rvd);
  j["assd"] = value(r.assd);
  j["msd"] = value(r.msd);
  j["rmsd"] = value(r.rmsd);
  return j;
}

}  // namespace ckptleak
