/* Copyright 2026 The TID Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tid/geometry.hpp"
#include "tid/tensor.hpp"

// Selective feature decoupling: value maps, the three-tier mask and the
// masked feature-imitation loss.
namespace tid::sfdm {

struct SfdmConfig {
  double vicinity_scale = 2.0;
  double tier_hi = 1.0;
  double tier_lo = 0.01;
  double w_hi = 1.0;
  double w_med = 0.7;
  double w_lo = 0.05;
  double alpha_bg = 0.5;
  double alpha_obj = 1.0;

  void validate() const;
};

enum class Tier : std::uint8_t { Low = 0, Med = 1, High = 2 };

std::string_view tier_name(Tier t) noexcept;

using TierMap = std::vector<Tier>;  // row-major H x W

struct ValueMaps {
  TensorD v_info;
  TensorD v_output;
  TensorD v;
  TensorD mask;
  TierMap tiers;
};

struct LossReport {
  double total = 0.0;
  std::array<double, 3> per_tier{};  // indexed by Tier
  TensorD grad_student;

  double tier(Tier t) const noexcept { return per_tier[static_cast<std::size_t>(t)]; }
};

/// Spatial prior: 1 inside a GT box, decaying linearly with distance to 0 at
/// the far corner of the box's vicinity, 0 beyond. Max over boxes.
TensorD information_value(std::size_t height, std::size_t width, const GroundTruth& gt,
                          const SfdmConfig& cfg);

/// Value of the point at (x, y) with respect to a single GT box.
double information_value_at(double x, double y, const BBox& box, const SfdmConfig& cfg) noexcept;

TensorD feature_value(const TensorD& v_output, const TensorD& v_info);

Tier classify_tier(double v, const SfdmConfig& cfg) noexcept;
double tier_weight(Tier t, const SfdmConfig& cfg) noexcept;

struct TierMask {
  TensorD mask;
  TierMap tiers;
};

TierMask tier_mask(const TensorD& v, const SfdmConfig& cfg);

/// Recovers tier labels from a tier mask. Only valid when the weighted tier
/// ranges do not overlap, which holds for the default multipliers.
TierMap infer_tiers(const TensorD& mask, const SfdmConfig& cfg);

/// Channel projection for `align`: out x in, row-major.
struct Projection {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<double> weights;
};

/// Maps a student feature (Cs x Hs x Ws) onto the teacher's (C x H x W):
/// identity when shapes match, otherwise channel projection followed by
/// nearest-neighbor resampling.
TensorD align(const TensorD& student_feature, const Shape& target_shape,
              const std::optional<Projection>& projection = {});

/// Masked squared error normalized by C*H*W, with its gradient with respect
/// to the student feature.
LossReport distill_loss(const TensorD& teacher, const TensorD& student_aligned,
                        const TensorD& mask, const TierMap& tiers);

/// 1 where the cell center lies inside any GT box.
TensorD object_mask(std::size_t height, std::size_t width, const GroundTruth& gt);

/// Background/object weighted imitation loss. Object cells report under
/// Tier::High and background cells under Tier::Low.
LossReport baseline_bg_obj_loss(const TensorD& teacher, const TensorD& student_aligned,
                                const GroundTruth& gt, const SfdmConfig& cfg);

/// The per-point weight baseline_bg_obj_loss applies, plus its labels.
TierMask baseline_mask(std::size_t height, std::size_t width, const GroundTruth& gt,
                       const SfdmConfig& cfg);

ValueMaps build_value_maps(const TensorD& v_output, const GroundTruth& gt, const SfdmConfig& cfg);

}  // namespace tid::sfdm
