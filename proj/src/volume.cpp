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

#include "ckptleak/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "ckptleak/rng.hpp"

namespace ckptleak {
namespace {

std::uint64_t checked_count(std::uint64_t d, std::uint64_t h, std::uint64_t w) {
  if (d == 0 || h == 0 || w == 0)
    throw Error(Errc::DimensionMismatch, "volume dimensions must be positive");
  if (h > kMaxVoxels / d || w > kMaxVoxels / (d * h))
    throw Error(Errc::LengthOverflow, "volume has more than 2^34 voxels");
  return d * h * w;
}

void check_range(float lo, float hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
    throw Error(Errc::MalformedHeader, "intensity range [" + std::to_string(lo) + ", " +
                                           std::to_string(hi) + "] is invalid");
}

Volume from_payload(std::uint32_t d, std::uint32_t h, std::uint32_t w, float lo, float hi,
                    std::uint32_t bits, ByteSpan payload) {
  const std::uint64_t n = checked_count(d, h, w);
  check_range(lo, hi);
  if (bits == 0) throw Error(Errc::MalformedHeader, "source_bits_per_voxel must be positive");
  if (payload.size() < n * 4)
    throw Error(Errc::Truncated, "payload has " + std::to_string(payload.size()) +
                                     " bytes, dimensions need " + std::to_string(n * 4));
  if (payload.size() != n * 4)
    throw Error(Errc::LengthMismatch, "payload has " + std::to_string(payload.size()) +
                                          " bytes, dimensions need " + std::to_string(n * 4));
  Volume v;
  v.depth = d;
  v.height = h;
  v.width = w;
  v.intensity_min = lo;
  v.intensity_max = hi;
  v.source_bits_per_voxel = bits;
  v.voxels.resize(static_cast<std::size_t>(n));
  std::memcpy(v.voxels.data(), payload.data(), payload.size());
  return v;
}

}  // namespace

Volume Volume::zeros(Dims dims) {
  Volume v;
  v.depth = dims.depth;
  v.height = dims.height;
  v.width = dims.width;
  v.voxels.assign(static_cast<std::size_t>(checked_count(dims.depth, dims.height, dims.width)),
                  0.0f);
  return v;
}

void Volume::validate() const {
  if (voxels.size() != checked_count(depth, height, width))
    throw Error(Errc::DimensionMismatch, "voxel count does not match dimensions");
  check_range(intensity_min, intensity_max);
}

Bytes serialize_rvol(const Volume& v) {
  v.validate();
  Bytes out;
  out.reserve(kRvolHeaderSize + v.voxels.size() * 4);
  ByteWriter w(out);
  w.raw(std::string_view("RVOL"));
  w.u32(1);
  w.u32(v.depth);
  w.u32(v.height);
  w.u32(v.width);
  w.f32(v.intensity_min);
  w.f32(v.intensity_max);
  w.u32(v.source_bits_per_voxel);
  w.raw(ByteSpan(reinterpret_cast<const std::uint8_t*>(v.voxels.data()), v.voxels.size() * 4));
  return out;
}

Volume parse_rvol(ByteSpan data) {
  ByteReader r(data, "rvol");
  r.expect_magic("RVOL");
  const std::uint32_t version = r.u32();
  if (version != 1) throw Error(Errc::UnsupportedVersion, "rvol version " + std::to_string(version));
  const std::uint32_t d = r.u32(), h = r.u32(), w = r.u32();
  const float lo = r.f32(), hi = r.f32();
  const std::uint32_t bits = r.u32();
  return from_payload(d, h, w, lo, hi, bits, data.subspan(r.position()));
}

std::filesystem::path sidecar_path(const std::filesystem::path& raw) {
  return std::filesystem::path(raw.string() + ".json");
}

Volume load_volume(const std::filesystem::path& path, VolumeFormat format) {
  if (format == VolumeFormat::RVOL) return parse_rvol(read_file(path));

  const Bytes payload = read_file(path);
  const auto side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) throw Error(Errc::Io, "cannot open sidecar " + side.string());
  nlohmann::json j;
  try {
    in >> j;
    return from_payload(j.at("depth").get<std::uint32_t>(), j.at("height").get<std::uint32_t>(),
                        j.at("width").get<std::uint32_t>(), j.at("intensity_min").get<float>(),
                        j.at("intensity_max").get<float>(),
                        j.at("source_bits_per_voxel").get<std::uint32_t>(), payload);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedHeader, "sidecar " + side.string() + ": " + e.what());
  }
}

void save_volume(const Volume& v, const std::filesystem::path& path, VolumeFormat format) {
  if (format == VolumeFormat::RVOL) {
    write_file(path, serialize_rvol(v));
    return;
  }
  v.validate();
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(v.voxels.data()),
                            v.voxels.size() * 4));
  nlohmann::ordered_json j;
  j["depth"] = v.depth;
  j["height"] = v.height;
  j["width"] = v.width;
  j["intensity_min"] = v.intensity_min;
  j["intensity_max"] = v.intensity_max;
  j["source_bits_per_voxel"] = v.source_bits_per_voxel;
  const std::string text = j.dump(2) + "\n";
  write_file(sidecar_path(path), as_span(text));
}

Phantom generate_phantom(std::uint64_t seed, Dims dims, std::uint32_t n_ellipsoids) {
  if (dims.depth < 8 || dims.height < 8 || dims.width < 8)
    throw Error(Errc::InvalidArgument, "phantom dimensions must be >= 8 on every axis");

  struct Ellipsoid {
    double c[3], a[3], value;
  };
  Rng rng(seed);
  const double extent[3] = {double(dims.depth), double(dims.height), double(dims.width)};
  std::vector<Ellipsoid> shapes(n_ellipsoids);
  for (auto& e : shapes) {
    for (int k = 0; k < 3; ++k) {
      e.c[k] = rng.uniform(0.25, 0.75) * extent[k];
      e.a[k] = std::max(2.0, rng.uniform(0.08, 0.25) * extent[k]);
    }
    e.value = rng.uniform(150.0, 900.0);
  }

  Phantom p{Volume::zeros(dims), Volume::zeros(dims)};
  // Background: gentle ramp in HU-like units.
  for (std::uint32_t z = 0; z < dims.depth; ++z)
    for (std::uint32_t y = 0; y < dims.height; ++y)
      for (std::uint32_t x = 0; x < dims.width; ++x)
        p.volume.at(z, y, x) = static_cast<float>(
            -100.0 + 200.0 * (0.5 * y / dims.height + 0.3 * x / dims.width + 0.2 * z / dims.depth));

  constexpr double kEdgeVoxels = 2.0;
  for (const auto& e : shapes) {
    const double edge = kEdgeVoxels / std::min({e.a[0], e.a[1], e.a[2]});
    std::uint32_t lo[3], hi[3];
    for (int k = 0; k < 3; ++k) {
      const double reach = e.a[k] * (1.0 + edge) + 1.0;
      lo[k] = static_cast<std::uint32_t>(std::max(0.0, std::floor(e.c[k] - reach)));
      hi[k] = static_cast<std::uint32_t>(std::min(extent[k], std::ceil(e.c[k] + reach)));
    }
    for (std::uint32_t z = lo[0]; z < hi[0]; ++z)
      for (std::uint32_t y = lo[1]; y < hi[1]; ++y)
        for (std::uint32_t x = lo[2]; x < hi[2]; ++x) {
          const double dz = (z + 0.5 - e.c[0]) / e.a[0];
          const double dy = (y + 0.5 - e.c[1]) / e.a[1];
          const double dx = (x + 0.5 - e.c[2]) / e.a[2];
          const double r = std::sqrt(dz * dz + dy * dy + dx * dx);
          if (r <= 1.0) p.mask.at(z, y, x) = 1.0f;
          // smoothstep falloff across [1 - edge, 1 + edge]
          double t = std::clamp((1.0 + edge - r) / (2.0 * edge), 0.0, 1.0);
          t = t * t * (3.0 - 2.0 * t);
          if (t > 0.0) p.volume.at(z, y, x) += static_cast<float>(e.value * t);
        }
  }

  const auto [mn, mx] = std::minmax_element(p.volume.voxels.begin(), p.volume.voxels.end());
  p.volume.intensity_min = *mn;
  p.volume.intensity_max = *mx;
  p.volume.source_bits_per_voxel = 16;
  p.mask.intensity_min = 0.0f;
  p.mask.intensity_max = n_ellipsoids > 0 ? 1.0f : 0.0f;
  p.mask.source_bits_per_voxel = 8;
  return p;
}

Volume normalize_minmax(const Volume& v) {
  v.validate();
  Volume out = v;
  const auto [mn, mx] = std::minmax_element(v.voxels.begin(), v.voxels.end());
  const double lo = *mn, hi = *mx;
  out.intensity_min = *mn;
  out.intensity_max = *mx;
  out.normalized = true;
  out.degenerate = !(hi > lo);
  if (out.degenerate) {
    std::fill(out.voxels.begin(), out.voxels.end(), 0.0f);
    return out;
  }
  const double scale = 1.0 / (hi - lo);
  for (auto& x : out.voxels) x = static_cast<float>(std::clamp((x - lo) * scale, 0.0, 1.0));
  return out;
}

Volume denormalize(const Volume& v) {
  if (!v.normalized)
    throw Error(Errc::MissingRange, "volume carries no normalization range to invert");
  v.validate();
  Volume out = v;
  out.normalized = false;
  const double lo = v.intensity_min, span = double(v.intensity_max) - v.intensity_min;
  for (auto& x : out.voxels) x = static_cast<float>(lo + span * x);
  out.degenerate = false;
  return out;
}

}  // namespace ckptleak
