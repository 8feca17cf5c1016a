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

// Deterministic lossy slice codec producing the "image codes" that get
// hidden in checkpoints, plus the lossless ZIP path and the rate accounting
// (bits per pixel, practical ratio).
//
// Slice pipeline: 8x8 orthonormal DCT-II -> uniform quantization with step
// quant_step(q, k) for zigzag index k -> zigzag scan -> signed-to-unsigned
// zigzag mapping -> LEB128 varints -> raw DEFLATE.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ckptleak/bytes.hpp"
#include "ckptleak/tiling.hpp"
#include "ckptleak/volume.hpp"

namespace ckptleak {

inline constexpr int kMinQuality = 1;
inline constexpr int kMaxQuality = 100;
inline constexpr std::size_t kSliceCodeHeaderSize = 12;
inline constexpr std::size_t kVolumeCodeHeaderSize = 34;

// (2 (101 - q) / 100) (1 + k / 8): strictly decreasing in q, growing with
// zigzag frequency index k.
double quant_step(int q, int k);

// Zigzag-ordered quantized coefficients of a 256x256 slice, 64 per block,
// blocks in raster order. Values outside [0,1] are clamped first; the number
// of clamped pixels is written to *clamped when given.
std::vector<std::int32_t> quantize_slice(std::span<const float> pixels, int q,
                                         std::uint32_t* clamped = nullptr);

struct SliceCode {
  TilingMode mode = TilingMode::Low;
  std::uint8_t q = 50;
  std::uint16_t patch_index = 0;
  Bytes bytes;                     // complete record: header + DEFLATE payload
  std::uint32_t clamped_inputs = 0;  // encoder warning count, not serialized

  std::size_t size() const { return bytes.size(); }
};

//   "SC01" u8 mode u8 q u16 patch_index u32 deflate_len, DEFLATE payload
SliceCode encode_slice(std::span<const float> pixels, int q, TilingMode mode = TilingMode::Low,
                       std::uint16_t patch_index = 0);
std::vector<float> decode_slice(const SliceCode& code);

// Parses one SliceCode record from the front of data; *consumed receives its
// length. Without `consumed` the record must span all of data.
SliceCode parse_slice_code(ByteSpan data, std::size_t* consumed = nullptr);

struct VolumeCode {
  Dims dims;
  float intensity_min = 0.0f;
  float intensity_max = 0.0f;
  TilingMode mode = TilingMode::Low;
  std::uint8_t q = 50;
  std::vector<SliceCode> codes;  // slice-major, patch index within slice

  std::uint64_t total_bytes() const;
  std::uint32_t clamped_inputs() const;
};

std::size_t expected_code_count(TilingMode mode, Dims dims);

// v must be normalized. Slices are encoded on up to `threads` workers; the
// result is identical for every thread count.
VolumeCode encode_volume(const Volume& v, TilingMode mode, int q, unsigned threads = 1);
Volume decode_volume(const VolumeCode& vc, unsigned threads = 1);

//   "VC01" u32 version=1 u32 depth u32 height u32 width f32 min f32 max
//   u8 mode u8 q u32 code_count, then the SliceCode records back to back
Bytes serialize_volume_code(const VolumeCode& vc);
VolumeCode parse_volume_code(ByteSpan data);
std::uint64_t write_volume_code(const VolumeCode& vc, const std::filesystem::path& path);
VolumeCode read_volume_code(const std::filesystem::path& path);

// Lossless path: single-member ZIP ("volume.rvol", DEFLATE level 9) of the
// RVOL serialization.
inline constexpr const char* kZipVolumeMember = "volume.rvol";
Bytes zip_volume(const Volume& v);
Volume unzip_volume(ByteSpan archive);

double bpp(std::uint64_t byte_count, std::uint64_t voxel_count);
// Bits per voxel of the origin data: the on-disk size when known, else the
// declared source bit width.
double bpp_input(const Volume& v, std::optional<std::uint64_t> origin_bytes = std::nullopt);
double practical_ratio(std::uint64_t lossy_bytes, std::uint64_t zip_bytes);

}  // namespace ckptleak
