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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ckptleak/bytes.hpp"

namespace ckptleak {

struct Dims {
  std::uint32_t depth = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::uint64_t count() const { return std::uint64_t{depth} * height * width; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Scalar 3-D image, slice-major then row-major. intensity_min/max carry the
// physical range; after normalize_minmax the voxels live in [0,1] and the
// range fields remember where they came from.
struct Volume {
  std::uint32_t depth = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> voxels;
  float intensity_min = 0.0f;
  float intensity_max = 0.0f;
  std::uint32_t source_bits_per_voxel = 32;
  bool normalized = false;
  bool degenerate = false;  // set by normalize_minmax when min == max

  static Volume zeros(Dims dims);

  Dims dims() const { return {depth, height, width}; }
  std::size_t voxel_count() const { return voxels.size(); }
  std::size_t slice_size() const { return std::size_t{height} * width; }

  float& at(std::uint32_t z, std::uint32_t y, std::uint32_t x) {
    return voxels[(std::size_t{z} * height + y) * width + x];
  }
  float at(std::uint32_t z, std::uint32_t y, std::uint32_t x) const {
    return voxels[(std::size_t{z} * height + y) * width + x];
  }
  std::span<const float> slice(std::uint32_t z) const {
    return std::span<const float>(voxels).subspan(z * slice_size(), slice_size());
  }
  std::span<float> slice(std::uint32_t z) {
    return std::span<float>(voxels).subspan(z * slice_size(), slice_size());
  }

  // Throws DimensionMismatch if voxels.size() != depth*height*width or any
  // dimension is zero; MalformedHeader if intensity_min > intensity_max.
  void validate() const;
};

// --- files ---------------------------------------------------------------
//   RVOL: "RVOL" u32 version=1 u32 depth u32 height u32 width
//         f32 intensity_min f32 intensity_max u32 source_bits_per_voxel
//         then depth*height*width f32 voxels
//   RAW+sidecar: the bare f32 payload plus <path>.json holding the header fields.
enum class VolumeFormat { RVOL, RawSidecar };

inline constexpr std::size_t kRvolHeaderSize = 32;
inline constexpr std::uint64_t kMaxVoxels = std::uint64_t{1} << 34;

Bytes serialize_rvol(const Volume& v);
Volume parse_rvol(ByteSpan data);

Volume load_volume(const std::filesystem::path& path, VolumeFormat format = VolumeFormat::RVOL);
void save_volume(const Volume& v, const std::filesystem::path& path,
                 VolumeFormat format = VolumeFormat::RVOL);
std::filesystem::path sidecar_path(const std::filesystem::path& raw);

// --- synthetic data ------------------------------------------------------
struct Phantom {
  Volume volume;
  Volume mask;  // voxels in {0,1}
};

// Smooth background ramp plus n soft-edged ellipsoids. A pure function of
// its arguments; dims must be >= 8 on every axis.
Phantom generate_phantom(std::uint64_t seed, Dims dims, std::uint32_t n_ellipsoids);

// --- intensity mapping ---------------------------------------------------
Volume normalize_minmax(const Volume& v);
Volume denormalize(const Volume& v);

}  // namespace ckptleak
