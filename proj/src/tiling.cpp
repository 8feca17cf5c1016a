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

#include "ckptleak/tiling.hpp"

#include <algorithm>
#include <cmath>

namespace ckptleak {
namespace {

std::vector<std::int32_t> patch_starts(std::uint32_t extent) {
  std::vector<std::int32_t> starts;
  const std::uint32_t last = extent - kPatchSize;
  for (std::uint32_t s = 0;; s += kPatchStride) {
    starts.push_back(static_cast<std::int32_t>(std::min(s, last)));
    if (s >= last) break;
  }
  return starts;
}

// Per-axis ramps: weight 1 except within kPatchStride of an edge that some
// other patch overlaps, then normalized so the weights at every position sum
// to one.
std::vector<std::vector<double>> axis_weights(const std::vector<std::int32_t>& starts,
                                              std::uint32_t extent) {
  std::vector<std::vector<double>> w(starts.size(), std::vector<double>(kPatchSize));
  for (std::size_t p = 0; p < starts.size(); ++p) {
    const bool open_lo = starts[p] > 0;
    const bool open_hi = starts[p] + kPatchSize < extent;
    for (std::uint32_t t = 0; t < kPatchSize; ++t) {
      double v = 1.0;
      if (open_lo) v = std::min(v, (t + 0.5) / kPatchStride);
      if (open_hi) v = std::min(v, (kPatchSize - t - 0.5) / kPatchStride);
      w[p][t] = v;
    }
  }
  std::vector<double> sum(extent, 0.0);
  for (std::size_t p = 0; p < starts.size(); ++p)
    for (std::uint32_t t = 0; t < kPatchSize; ++t) sum[starts[p] + t] += w[p][t];
  for (std::size_t p = 0; p < starts.size(); ++p)
    for (std::uint32_t t = 0; t < kPatchSize; ++t) w[p][t] /= sum[starts[p] + t];
  return w;
}

std::uint32_t clamp_index(std::int64_t i, std::uint32_t n) {
  return static_cast<std::uint32_t>(std::clamp<std::int64_t>(i, 0, n - 1));
}

// Writes one channel of a stack from the given source slice.
void fill_channel(const TilingPlan& plan, std::span<const float> slice, std::size_t patch,
                  std::span<float> dst) {
  const Dims d = plan.dims();
  const PatchPos pos = plan.patches()[patch];
  switch (plan.mode()) {
    case TilingMode::Low: {
      auto small = resize_bilinear(slice, d.height, d.width, kPatchSize, kPatchSize);
      std::copy(small.begin(), small.end(), dst.begin());
      break;
    }
    case TilingMode::High:
    case TilingMode::Pad:
      for (std::uint32_t r = 0; r < kPatchSize; ++r) {
        const std::uint32_t sy = clamp_index(std::int64_t{pos.row} + r, d.height);
        for (std::uint32_t c = 0; c < kPatchSize; ++c) {
          const std::uint32_t sx = clamp_index(std::int64_t{pos.col} + c, d.width);
          dst[r * kPatchSize + c] = slice[std::size_t{sy} * d.width + sx];
        }
      }
      break;
  }
}

}  // namespace

std::string_view tiling_mode_name(TilingMode m) {
  switch (m) {
    case TilingMode::Low: return "low";
    case TilingMode::High: return "high";
    case TilingMode::Pad: return "pad";
  }
  return "?";
}

TilingMode parse_tiling_mode(std::string_view name) {
  for (auto m : {TilingMode::Low, TilingMode::High, TilingMode::Pad})
    if (tiling_mode_name(m) == name) return m;
  throw Error(Errc::InvalidArgument, "unknown tiling mode '" + std::string(name) + "'");
}

TilingPlan TilingPlan::make(TilingMode mode, Dims dims) {
  if (dims.depth == 0 || dims.height == 0 || dims.width == 0)
    throw Error(Errc::DimensionMismatch, "tiling needs a non-empty volume");
  TilingPlan plan;
  plan.mode_ = mode;
  plan.dims_ = dims;
  const std::string size =
      std::to_string(dims.height) + "x" + std::to_string(dims.width);
  switch (mode) {
    case TilingMode::Low:
      if (dims.height < kPatchSize || dims.width < kPatchSize)
        throw Error(Errc::UnsupportedSize, "low mode needs slices of at least 256x256, got " + size);
      plan.patches_ = {PatchPos{0, 0}};
      break;
    case TilingMode::Pad:
      if (dims.height > kPatchSize || dims.width > kPatchSize)
        throw Error(Errc::UnsupportedSize, "pad mode needs slices of at most 256x256, got " + size);
      plan.patches_ = {PatchPos{-static_cast<std::int32_t>((kPatchSize - dims.height) / 2),
                                -static_cast<std::int32_t>((kPatchSize - dims.width) / 2)}};
      break;
    case TilingMode::High: {
      if (dims.height < kPatchSize || dims.width < kPatchSize)
        throw Error(Errc::UnsupportedSize, "high mode needs slices of at least 256x256, got " + size);
      const auto rows = patch_starts(dims.height);
      const auto cols = patch_starts(dims.width);
      for (auto r : rows)
        for (auto c : cols) plan.patches_.push_back({r, c});
      plan.grid_cols_ = cols.size();
      plan.row_weights_ = axis_weights(rows, dims.height);
      plan.col_weights_ = axis_weights(cols, dims.width);
      break;
    }
  }
  return plan;
}

double TilingPlan::weight(std::size_t p, std::uint32_t r, std::uint32_t c) const {
  if (mode_ != TilingMode::High) return 1.0;
  return row_weights_[p / grid_cols_][r] * col_weights_[p % grid_cols_][c];
}

std::vector<float> TilingPlan::weight_map(std::size_t p) const {
  std::vector<float> out(kPatchPixels);
  for (std::uint32_t r = 0; r < kPatchSize; ++r)
    for (std::uint32_t c = 0; c < kPatchSize; ++c)
      out[r * kPatchSize + c] = static_cast<float>(weight(p, r, c));
  return out;
}

std::vector<SliceStack> make_slice_stacks_at(const Volume& v, const TilingPlan& plan,
                                             std::uint32_t z) {
  if (v.dims() != plan.dims())
    throw Error(Errc::InconsistentPlan, "plan dimensions differ from the volume");
  if (z >= v.depth) throw Error(Errc::InvalidArgument, "slice index out of range");
  const std::uint32_t neighbors[3] = {z == 0 ? 0 : z - 1, z, std::min(z + 1, v.depth - 1)};
  std::vector<SliceStack> stacks(plan.patches_per_slice());
  for (std::size_t p = 0; p < stacks.size(); ++p) {
    auto& s = stacks[p];
    s.data.resize(3 * kPatchPixels);
    s.center_slice_index = z;
    s.mode = plan.mode();
    s.patch_index = static_cast<std::uint16_t>(p);
    s.position = plan.patches()[p];
    for (int c = 0; c < 3; ++c)
      fill_channel(plan, v.slice(neighbors[c]), p,
                   std::span<float>(s.data).subspan(c * kPatchPixels, kPatchPixels));
  }
  return stacks;
}

std::vector<SliceStack> make_slice_stacks(const Volume& v, const TilingPlan& plan) {
  std::vector<SliceStack> out;
  out.reserve(std::size_t{v.depth} * plan.patches_per_slice());
  for (std::uint32_t z = 0; z < v.depth; ++z) {
    auto stacks = make_slice_stacks_at(v, plan, z);
    std::move(stacks.begin(), stacks.end(), std::back_inserter(out));
  }
  return out;
}

SliceAssembler::SliceAssembler(TilingPlan plan)
    : plan_(std::move(plan)),
      out_(Volume::zeros(plan_.dims())),
      seen_(std::size_t{plan_.dims().depth} * plan_.patches_per_slice(), 0) {
  out_.normalized = true;
  out_.intensity_min = 0.0f;
  out_.intensity_max = 1.0f;
}

void SliceAssembler::add(std::uint32_t z, std::size_t patch_index, std::span<const float> patch) {
  const Dims d = plan_.dims();
  if (z >= d.depth || patch_index >= plan_.patches_per_slice())
    throw Error(Errc::InconsistentPlan, "patch (" + std::to_string(z) + ", " +
                                            std::to_string(patch_index) + ") is outside the plan");
  if (patch.size() != kPatchPixels) throw Error(Errc::InconsistentPlan, "patch is not 256x256");
  auto& flag = seen_[std::size_t{z} * plan_.patches_per_slice() + patch_index];
  if (flag) throw Error(Errc::InconsistentPlan, "patch added twice");
  flag = 1;

  auto slice = out_.slice(z);
  const PatchPos pos = plan_.patches()[patch_index];
  switch (plan_.mode()) {
    case TilingMode::Low: {
      auto full = resize_bilinear(patch, kPatchSize, kPatchSize, d.height, d.width);
      std::copy(full.begin(), full.end(), slice.begin());
      break;
    }
    case TilingMode::Pad:
      for (std::uint32_t y = 0; y < d.height; ++y)
        for (std::uint32_t x = 0; x < d.width; ++x)
          slice[std::size_t{y} * d.width + x] =
              patch[(y - pos.row) * std::size_t{kPatchSize} + (x - pos.col)];
      break;
    case TilingMode::High:
      for (std::uint32_t r = 0; r < kPatchSize; ++r)
        for (std::uint32_t c = 0; c < kPatchSize; ++c) {
          auto& dst = slice[std::size_t(pos.row + r) * d.width + (pos.col + c)];
          dst = static_cast<float>(dst + plan_.weight(patch_index, r, c) * patch[r * kPatchSize + c]);
        }
      break;
  }
}

Volume SliceAssembler::finish() && {
  for (std::size_t i = 0; i < seen_.size(); ++i)
    if (!seen_[i])
      throw Error(Errc::MissingPatch, "slice " + std::to_string(i / plan_.patches_per_slice()) +
                                          " patch " + std::to_string(i % plan_.patches_per_slice()) +
                                          " was never supplied");
  return std::move(out_);
}

Volume reassemble_slices(std::span<const SliceStack> stacks, const TilingPlan& plan) {
  SliceAssembler assembler(plan);
  for (const auto& s : stacks) {
    if (s.mode != plan.mode()) throw Error(Errc::InconsistentPlan, "stack mode differs from plan");
    if (s.data.size() != 3 * kPatchPixels) throw Error(Errc::InconsistentPlan, "stack is not 256x256x3");
    assembler.add(s.center_slice_index, s.patch_index, s.center());
  }
  return std::move(assembler).finish();
}

std::vector<float> resize_bilinear(std::span<const float> src, std::uint32_t src_h,
                                   std::uint32_t src_w, std::uint32_t dst_h, std::uint32_t dst_w) {
  if (src.size() != std::size_t{src_h} * src_w)
    throw Error(Errc::DimensionMismatch, "resize source size mismatch");
  struct Tap {
    std::uint32_t i0, i1;
    double f;
  };
  auto taps = [](std::uint32_t n_src, std::uint32_t n_dst) {
    std::vector<Tap> t(n_dst);
    const double scale = double(n_src) / n_dst;
    for (std::uint32_t i = 0; i < n_dst; ++i) {
      const double x = std::clamp((i + 0.5) * scale - 0.5, 0.0, double(n_src - 1));
      const auto i0 = static_cast<std::uint32_t>(std::floor(x));
      const std::uint32_t i1 = std::min(i0 + 1, n_src - 1);
      t[i] = {i0, i1, x - i0};
    }
    return t;
  };
  const auto ty = taps(src_h, dst_h);
  const auto tx = taps(src_w, dst_w);
  // horizontal pass into doubles, then vertical
  std::vector<double> tmp(std::size_t{src_h} * dst_w);
  for (std::uint32_t y = 0; y < src_h; ++y)
    for (std::uint32_t x = 0; x < dst_w; ++x) {
      const auto& t = tx[x];
      const float* row = src.data() + std::size_t{y} * src_w;
      tmp[std::size_t{y} * dst_w + x] = (1.0 - t.f) * row[t.i0] + t.f * row[t.i1];
    }
  std::vector<float> out(std::size_t{dst_h} * dst_w);
  for (std::uint32_t y = 0; y < dst_h; ++y) {
    const auto& t = ty[y];
    for (std::uint32_t x = 0; x < dst_w; ++x)
      out[std::size_t{y} * dst_w + x] = static_cast<float>(
          (1.0 - t.f) * tmp[std::size_t{t.i0} * dst_w + x] + t.f * tmp[std::size_t{t.i1} * dst_w + x]);
  }
  return out;
}

}  // namespace ckptleak
