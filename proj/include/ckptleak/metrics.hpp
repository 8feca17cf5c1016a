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

// Image fidelity (PSNR, MS-SSIM) and segmentation agreement (Dice, VOE, RVD,
// ASSD, MSD, RMSD).

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ckptleak/volume.hpp"

namespace ckptleak {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Spacing {
  double z = 1.0, y = 1.0, x = 1.0;  // millimetres
};

struct MaskVolume {
  Dims dims;
  std::vector<std::uint8_t> voxels;  // 0 or 1
  Spacing spacing;

  std::size_t index(std::uint32_t z, std::uint32_t y, std::uint32_t x) const {
    return (std::size_t{z} * dims.height + y) * dims.width + x;
  }
  std::uint64_t count() const;
};

// Voxels > 0.5 become foreground.
MaskVolume mask_from_volume(const Volume& v, Spacing spacing = {});

// 10 log10(peak^2 / MSE); +inf when the inputs are identical.
double psnr(const Volume& a, const Volume& b, double peak);
double psnr(std::span<const float> a, std::span<const float> b, double peak);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
  std::array<double, 5> weights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
};

// 5-scale MS-SSIM of two equally sized 2-D images (row-major), using valid
// Gaussian filtering and 2x2 average pooling between scales. Needs at least
// 176x176 so the coarsest scale still fits one window.
double ms_ssim(std::span<const float> a, std::span<const float> b, std::uint32_t height,
               std::uint32_t width, const SsimParams& params = {});
// Mean of the per-slice values.
double ms_ssim(const Volume& a, const Volume& b, const SsimParams& params = {});

struct OverlapMetrics {
  double dice = 0, voe = 0, rvd = 0;
};
OverlapMetrics overlap_metrics(const MaskVolume& p, const MaskVolume& g);

struct SurfaceMetrics {
  double assd = 0, msd = 0, rmsd = 0;
};
// Surface voxels are foreground voxels with a 6-connected background
// neighbour (outside the volume counts as background). Distances are between
// voxel centres in millimetres.
SurfaceMetrics surface_metrics(const MaskVolume& p, const MaskVolume& g);

std::vector<std::size_t> surface_voxels(const MaskVolume& m);

struct MetricReport {
  std::optional<double> psnr;
  std::optional<double> ms_ssim;
  std::optional<double> dice, voe, rvd;
  std::optional<double> assd, msd, rmsd;
};

// Flat object; absent metrics are null and infinities are the string "inf".
nlohmann::ordered_json to_json(const MetricReport& r);

}  // namespace ckptleak
