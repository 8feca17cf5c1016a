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

#include "ckptleak/codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <thread>

#include "ckptleak/compress.hpp"
#include "ckptleak/zip.hpp"

namespace ckptleak {
namespace {

constexpr int kBlock = 8;
constexpr std::uint32_t kBlocksPerRow = kPatchSize / kBlock;
constexpr std::size_t kCoefficients = kPatchPixels;
constexpr std::size_t kMaxVarintBytes = 5;

constexpr std::array<std::uint8_t, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

struct DctBasis {
  double c[kBlock][kBlock];  // c[u][x]
  DctBasis() {
    for (int u = 0; u < kBlock; ++u)
      for (int x = 0; x < kBlock; ++x) {
        const double a = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
        c[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / (2 * kBlock));
      }
  }
};
const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

void forward_dct(const double in[64], double out[64]) {
  const auto& c = basis().c;
  double tmp[64];
  for (int y = 0; y < kBlock; ++y)
    for (int u = 0; u < kBlock; ++u) {
      double s = 0;
      for (int x = 0; x < kBlock; ++x) s += c[u][x] * in[y * kBlock + x];
      tmp[y * kBlock + u] = s;
    }
  for (int v = 0; v < kBlock; ++v)
    for (int u = 0; u < kBlock; ++u) {
      double s = 0;
      for (int y = 0; y < kBlock; ++y) s += c[v][y] * tmp[y * kBlock + u];
      out[v * kBlock + u] = s;
    }
}

void inverse_dct(const double in[64], double out[64]) {
  const auto& c = basis().c;
  double tmp[64];
  for (int v = 0; v < kBlock; ++v)
    for (int x = 0; x < kBlock; ++x) {
      double s = 0;
      for (int u = 0; u < kBlock; ++u) s += c[u][x] * in[v * kBlock + u];
      tmp[v * kBlock + x] = s;
    }
  for (int y = 0; y < kBlock; ++y)
    for (int x = 0; x < kBlock; ++x) {
      double s = 0;
      for (int v = 0; v < kBlock; ++v) s += c[v][y] * tmp[v * kBlock + x];
      out[y * kBlock + x] = s;
    }
}

void check_quality(int q) {
  if (q < kMinQuality || q > kMaxQuality)
    throw Error(Errc::InvalidArgument, "quality " + std::to_string(q) + " outside [1,100]");
}

void put_varint(Bytes& out, std::uint32_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t zigzag_encode(std::int32_t v) {
  return (static_cast<std::uint32_t>(v) << 1) ^ static_cast<std::uint32_t>(v >> 31);
}
std::int32_t zigzag_decode(std::uint32_t v) {
  return static_cast<std::int32_t>(v >> 1) ^ -static_cast<std::int32_t>(v & 1);
}

TilingMode mode_from_byte(std::uint8_t b) {
  if (b > 2) throw Error(Errc::MalformedHeader, "unknown tiling mode " + std::to_string(b));
  return static_cast<TilingMode>(b);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double quant_step(int q, int k) {
  check_quality(q);
  return (2.0 * (101 - q) / 100.0) * (1.0 + k / 8.0);
}

std::vector<std::int32_t> quantize_slice(std::span<const float> pixels, int q,
                                         std::uint32_t* clamped) {
  check_quality(q);
  if (pixels.size() != kPatchPixels)
    throw Error(Errc::DimensionMismatch, "codec input must be 256x256");
  double steps[64];
  for (int k = 0; k < 64; ++k) steps[k] = quant_step(q, k);

  std::uint32_t n_clamped = 0;
  std::vector<std::int32_t> out(kCoefficients);
  double block[64], coef[64];
  for (std::uint32_t by = 0; by < kBlocksPerRow; ++by)
    for (std::uint32_t bx = 0; bx < kBlocksPerRow; ++bx) {
      for (int y = 0; y < kBlock; ++y)
        for (int x = 0; x < kBlock; ++x) {
          double p = pixels[(by * kBlock + y) * kPatchSize + bx * kBlock + x];
          if (!(p >= 0.0 && p <= 1.0)) {
            ++n_clamped;
            p = std::isnan(p) ? 0.0 : std::clamp(p, 0.0, 1.0);
          }
          block[y * kBlock + x] = p;
        }
      forward_dct(block, coef);
      std::int32_t* dst = out.data() + (by * kBlocksPerRow + bx) * 64;
      for (int k = 0; k < 64; ++k)
        dst[k] = static_cast<std::int32_t>(std::lround(coef[kZigzag[k]] / steps[k]));
    }
  if (clamped) *clamped = n_clamped;
  return out;
}

SliceCode encode_slice(std::span<const float> pixels, int q, TilingMode mode,
                       std::uint16_t patch_index) {
  SliceCode code;
  const auto coefficients = quantize_slice(pixels, q, &code.clamped_inputs);
  Bytes stream;
  stream.reserve(kCoefficients * 2);
  for (auto c : coefficients) put_varint(stream, zigzag_encode(c));
  const Bytes packed = deflate_raw(stream, kDeflateMaxLevel);

  code.mode = mode;
  code.q = static_cast<std::uint8_t>(q);
  code.patch_index = patch_index;
  ByteWriter w(code.bytes);
  w.raw(std::string_view("SC01"));
  w.u8(static_cast<std::uint8_t>(mode));
  w.u8(code.q);
  w.u16(patch_index);
  w.u32(static_cast<std::uint32_t>(packed.size()));
  w.raw(packed);
  return code;
}

SliceCode parse_slice_code(ByteSpan data, std::size_t* consumed) {
  ByteReader r(data, "slice code");
  r.expect_magic("SC01");
  SliceCode code;
  code.mode = mode_from_byte(r.u8());
  code.q = r.u8();
  if (code.q < kMinQuality || code.q > kMaxQuality)
    throw Error(Errc::MalformedHeader, "slice code quality " + std::to_string(code.q));
  code.patch_index = r.u16();
  const std::uint32_t len = r.u32();
  r.take(len);
  const std::size_t total = kSliceCodeHeaderSize + len;
  if (consumed) *consumed = total;
  else if (total != data.size())
    throw Error(Errc::TrailingData, "bytes after slice code payload");
  code.bytes.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(total));
  return code;
}

std::vector<float> decode_slice(const SliceCode& code) {
  const SliceCode parsed = parse_slice_code(code.bytes);
  const Bytes stream =
      inflate_raw(ByteSpan(parsed.bytes).subspan(kSliceCodeHeaderSize), kCoefficients * kMaxVarintBytes);

  std::vector<std::int32_t> coefficients;
  coefficients.reserve(kCoefficients);
  std::uint32_t value = 0;
  int shift = 0;
  for (std::uint8_t b : stream) {
    if (shift == 28 && (b & 0xF0))
      throw Error(Errc::CoefficientCountMismatch, "varint exceeds 32 bits");
    value |= std::uint32_t(b & 0x7F) << shift;
    if (b & 0x80) {
      shift += 7;
      continue;
    }
    if (coefficients.size() == kCoefficients)
      throw Error(Errc::CoefficientCountMismatch, "more than 65536 coefficients");
    coefficients.push_back(zigzag_decode(value));
    value = 0;
    shift = 0;
  }
  if (shift != 0 || coefficients.size() != kCoefficients)
    throw Error(Errc::CoefficientCountMismatch,
                "decoded " + std::to_string(coefficients.size()) + " of 65536 coefficients");

  double steps[64];
  for (int k = 0; k < 64; ++k) steps[k] = quant_step(parsed.q, k);
  std::vector<float> out(kPatchPixels);
  double coef[64], block[64];
  for (std::uint32_t by = 0; by < kBlocksPerRow; ++by)
    for (std::uint32_t bx = 0; bx < kBlocksPerRow; ++bx) {
      const std::int32_t* src = coefficients.data() + (by * kBlocksPerRow + bx) * 64;
      for (int k = 0; k < 64; ++k) coef[kZigzag[k]] = src[k] * steps[k];
      inverse_dct(coef, block);
      for (int y = 0; y < kBlock; ++y)
        for (int x = 0; x < kBlock; ++x)
          out[(by * kBlock + y) * kPatchSize + bx * kBlock + x] =
              static_cast<float>(std::clamp(block[y * kBlock + x], 0.0, 1.0));
    }
  return out;
}

std::uint64_t VolumeCode::total_bytes() const {
  std::uint64_t total = kVolumeCodeHeaderSize;
  for (const auto& c : codes) total += c.size();
  return total;
}

std::uint32_t VolumeCode::clamped_inputs() const {
  std::uint32_t n = 0;
  for (const auto& c : codes) n += c.clamped_inputs;
  return n;
}

std::size_t expected_code_count(TilingMode mode, Dims dims) {
  auto along = [](std::uint32_t extent) -> std::uint64_t {
    if (extent <= kPatchSize) return 1;
    return (extent - kPatchSize + kPatchStride - 1) / kPatchStride + 1;
  };
  const std::uint64_t per_slice = mode == TilingMode::High ? along(dims.height) * along(dims.width) : 1;
  return static_cast<std::size_t>(per_slice * dims.depth);
}

VolumeCode encode_volume(const Volume& v, TilingMode mode, int q, unsigned threads) {
  check_quality(q);
  if (!v.normalized) throw Error(Errc::MissingRange, "encode_volume expects a normalized volume");
  v.validate();
  const TilingPlan plan = TilingPlan::make(mode, v.dims());
  const std::size_t per_slice = plan.patches_per_slice();

  VolumeCode vc;
  vc.dims = v.dims();
  vc.intensity_min = v.intensity_min;
  vc.intensity_max = v.intensity_max;
  vc.mode = mode;
  vc.q = static_cast<std::uint8_t>(q);
  vc.codes.resize(std::size_t{v.depth} * per_slice);
  parallel_for(v.depth, threads, [&](std::size_t z) {
    const auto stacks = make_slice_stacks_at(v, plan, static_cast<std::uint32_t>(z));
    for (std::size_t p = 0; p < per_slice; ++p)
      vc.codes[z * per_slice + p] =
          encode_slice(stacks[p].center(), q, mode, static_cast<std::uint16_t>(p));
  });
  return vc;
}

Volume decode_volume(const VolumeCode& vc, unsigned threads) {
  const TilingPlan plan = TilingPlan::make(vc.mode, vc.dims);
  const std::size_t per_slice = plan.patches_per_slice();
  if (vc.codes.size() != std::size_t{vc.dims.depth} * per_slice)
    throw Error(Errc::InconsistentPlan, "volume code has " + std::to_string(vc.codes.size()) +
                                            " slice codes, plan needs " +
                                            std::to_string(vc.dims.depth * per_slice));
  std::vector<std::vector<float>> patches(vc.codes.size());
  parallel_for(vc.codes.size(), threads, [&](std::size_t i) { patches[i] = decode_slice(vc.codes[i]); });

  SliceAssembler assembler(plan);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (vc.codes[i].patch_index != i % per_slice || vc.codes[i].mode != vc.mode)
      throw Error(Errc::InconsistentPlan, "slice code " + std::to_string(i) + " is out of order");
    assembler.add(static_cast<std::uint32_t>(i / per_slice), i % per_slice, patches[i]);
    patches[i] = {};
  }
  Volume normalized = std::move(assembler).finish();
  normalized.intensity_min = vc.intensity_min;
  normalized.intensity_max = vc.intensity_max;
  return denormalize(normalized);
}

Bytes serialize_volume_code(const VolumeCode& vc) {
  Bytes out;
  out.reserve(static_cast<std::size_t>(vc.total_bytes()));
  ByteWriter w(out);
  w.raw(std::string_view("VC01"));
  w.u32(1);
  w.u32(vc.dims.depth);
  w.u32(vc.dims.height);
  w.u32(vc.dims.width);
  w.f32(vc.intensity_min);
  w.f32(vc.intensity_max);
  w.u8(static_cast<std::uint8_t>(vc.mode));
  w.u8(vc.q);
  w.u32(static_cast<std::uint32_t>(vc.codes.size()));
  for (const auto& c : vc.codes) w.raw(c.bytes);
  return out;
}

VolumeCode parse_volume_code(ByteSpan data) {
  ByteReader r(data, "volume code");
  r.expect_magic("VC01");
  const std::uint32_t version = r.u32();
  if (version != 1) throw Error(Errc::UnsupportedVersion, "volume code version " + std::to_string(version));
  VolumeCode vc;
  vc.dims.depth = r.u32();
  vc.dims.height = r.u32();
  vc.dims.width = r.u32();
  vc.intensity_min = r.f32();
  vc.intensity_max = r.f32();
  vc.mode = mode_from_byte(r.u8());
  vc.q = r.u8();
  const std::uint32_t count = r.u32();
  if (vc.dims.depth == 0 || vc.dims.height == 0 || vc.dims.width == 0)
    throw Error(Errc::DimensionMismatch, "volume code has an empty dimension");
  if (vc.q < kMinQuality || vc.q > kMaxQuality)
    throw Error(Errc::MalformedHeader, "volume code quality " + std::to_string(vc.q));
  if (!std::isfinite(vc.intensity_min) || !std::isfinite(vc.intensity_max) ||
      vc.intensity_min > vc.intensity_max)
    throw Error(Errc::MalformedHeader, "volume code intensity range is invalid");
  if (count != expected_code_count(vc.mode, vc.dims))
    throw Error(Errc::InconsistentPlan, "code count " + std::to_string(count) +
                                            " does not match dimensions and mode");
  if (count > r.remaining() / kSliceCodeHeaderSize)
    throw Error(Errc::Truncated, "volume code shorter than its declared slice codes");

  const std::size_t per_slice = count / vc.dims.depth;
  vc.codes.reserve(count);
  std::size_t offset = r.position();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::size_t used = 0;
    SliceCode c = parse_slice_code(data.subspan(offset), &used);
    if (c.mode != vc.mode || c.q != vc.q || c.patch_index != i % per_slice)
      throw Error(Errc::InconsistentPlan, "slice code " + std::to_string(i) + " disagrees with header");
    offset += used;
    vc.codes.push_back(std::move(c));
  }
  if (offset != data.size())
    throw Error(Errc::TrailingData, std::to_string(data.size() - offset) + " bytes after last slice code");
  return vc;
}

std::uint64_t write_volume_code(const VolumeCode& vc, const std::filesystem::path& path) {
  const Bytes bytes = serialize_volume_code(vc);
  write_file(path, bytes);
  return bytes.size();
}

VolumeCode read_volume_code(const std::filesystem::path& path) {
  return parse_volume_code(read_file(path));
}

Bytes zip_volume(const Volume& v) {
  const ZipMember member{kZipVolumeMember, serialize_rvol(v)};
  return write_zip(std::span(&member, 1), ZipMethod::Deflate, kDeflateMaxLevel);
}

Volume unzip_volume(ByteSpan archive) {
  const auto members = read_zip(archive);
  if (members.size() != 1 || members[0].name != kZipVolumeMember)
    throw Error(Errc::MalformedZip, "expected a single volume.rvol member");
  return parse_rvol(members[0].data);
}

double bpp(std::uint64_t byte_count, std::uint64_t voxel_count) {
  if (voxel_count == 0) throw Error(Errc::InvalidArgument, "bpp of zero voxels");
  return 8.0 * static_cast<double>(byte_count) / static_cast<double>(voxel_count);
}

double bpp_input(const Volume& v, std::optional<std::uint64_t> origin_bytes) {
  if (origin_bytes) return bpp(*origin_bytes, v.voxel_count());
  if (v.voxel_count() == 0) throw Error(Errc::InvalidArgument, "bpp of zero voxels");
  return static_cast<double>(v.source_bits_per_voxel);
}

double practical_ratio(std::uint64_t lossy_bytes, std::uint64_t zip_bytes) {
  if (zip_bytes == 0) throw Error(Errc::InvalidArgument, "practical ratio with zero ZIP bytes");
  return static_cast<double>(lossy_bytes) / static_cast<double>(zip_bytes);
}

}  // namespace ckptleak
