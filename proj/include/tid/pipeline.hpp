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

#include <optional>
#include <string>
#include <string_view>

#include "tid/diem.hpp"
#include "tid/geometry.hpp"
#include "tid/ldam.hpp"
#include "tid/sfdm.hpp"
#include "tid/tensorio.hpp"

namespace tid {

inline constexpr std::string_view kVersion = "0.1.0";

struct EngineConfig {
  diem::DiemConfig diem;
  ldam::LdamConfig ldam;
  sfdm::SfdmConfig sfdm;

  void validate() const {
    diem.validate();
    ldam.validate();
    sfdm.validate();
  }
};

enum class AblationMode { Full, ClsOnly, RegOnly, KeyOnly, WeakOnly, RawIou, BaselineEq8, Unmasked };

std::string_view mode_name(AblationMode mode) noexcept;

/// Accepts the lower-case names ("full", "cls_only", ...).
std::optional<AblationMode> parse_mode(std::string_view name) noexcept;

/// Everything the mask pipeline produces for one level.
struct TidMaps {
  diem::ScoreMaps teacher;
  diem::ScoreMaps student;
  ldam::OutputValueMap output;
  sfdm::ValueMaps values;
};

/// Teacher/student scores, then key and weak areas, then the value maps and
/// tiered mask. `mode` applies the ablation switches that act on the scores
/// and output value; the loss-side modes (BaselineEq8, Unmasked) compute the
/// same maps as Full.
TidMaps compute_maps(const LevelBundle& teacher, const LevelBundle& student, const GroundTruth& gt,
                     const EngineConfig& cfg, AblationMode mode = AblationMode::Full);

}  // namespace tid
