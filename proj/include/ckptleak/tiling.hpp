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

// Conversion between volume slices and the fixed 256x256x3 encoder input:
//   Low  - bilinear resize of the whole slice to 256x256 (2x down for 512)
//   High - overlapping 256x256 patches at stride 128 (3x3 for 512), blended
//          back with separable linear ramps
//   Pad  - edge-replicating pad up to 256x256 (240 -> 256), cropped back
// Channels 0/2 of a stack hold the slices below/above the center slice; at
// the volume boundary the center slice is replicated.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ckptleak/volume.hpp"

namespace ckptleak {

inline constexpr std::uint32_t kPatchSize = 256;
inline constexpr std::uint32_t kPatchStride = 128;
inline constexpr std::size_t kPatchPixels = std::size_t{kPatchSize} * kPatchSize;

enum class TilingMode : std::uint8_t { Low = 0, High = 1, Pad = 2 };

std::string_view tiling_mode_name(TilingMode m);
TilingMode parse_tiling_mode(std::string_view name);  // "low" | "high" | "pad"

struct PatchPos {
  std::int32_t row = 0;  // offset of the patch origin in the slice (negative for Pad)
  std::int32_t col = 0;
  friend bool operator==(const PatchPos&, const PatchPos&) = default;
};

class TilingPlan {
 public:
  // Throws UnsupportedSize if the in-plane size does not fit the mode:
  // Low/High need both sides >= 256, Pad needs both sides <= 256.
  static TilingPlan make(TilingMode mode, Dims dims);

  TilingMode mode() const { return mode_; }
  Dims dims() const { return dims_; }
  std::size_t patches_per_slice() const { return patches_.size(); }
  const std::vector<PatchPos>& patches() const { return patches_; }

  // Normalized High blend weight of patch p at patch-local (r, c).
  double weight(std::size_t p, std::uint32_t r, std::uint32_t c) const;
  std::vector<float> weight_map(std::size_t p) const;

 private:
  TilingMode mode_ = TilingMode::Low;
  Dims dims_;
  std::vector<PatchPos> patches_;
  std::size_t grid_cols_ = 1;
  // High only: per-axis weights, one 256-vector per row/column position.
  std::vector<std::vector<double>> row_weights_;
  std::vector<std::vector<double>> col_weights_;
};

struct SliceStack {
  std::vector<float> data;  // 3 x 256 x 256, channel-major
  std::uint32_t center_slice_index = 0;
  TilingMode mode = TilingMode::Low;
  std::uint16_t patch_index = 0;
  PatchPos position;

  std::span<const float> channel(int c) const {
    return std::span<const float>(data).subspan(c * kPatchPixels, kPatchPixels);
  }
  std::span<const float> center() const { return channel(1); }
};

std::vector<SliceStack> make_slice_stacks(const Volume& v, const TilingPlan& plan);
std::vector<SliceStack> make_slice_stacks_at(const Volume& v, const TilingPlan& plan,
                                             std::uint32_t z);

// Accumulates center-channel patches (in any order) back into a normalized
// volume.
class SliceAssembler {
 public:
  explicit SliceAssembler(TilingPlan plan);

  void add(std::uint32_t z, std::size_t patch_index, std::span<const float> patch);
  // Throws MissingPatch if any (slice, patch) pair was never added.
  Volume finish() &&;

 private:
  TilingPlan plan_;
  Volume out_;
  std::vector<std::uint8_t> seen_;
};

Volume reassemble_slices(std::span<const SliceStack> stacks, const TilingPlan& plan);

// Bilinear resize with half-pixel centers and edge clamping.
std::vector<float> resize_bilinear(std::span<const float> src, std::uint32_t src_h,
                                   std::uint32_t src_w, std::uint32_t dst_h, std::uint32_t dst_w);

}  // namespace ckptleak
