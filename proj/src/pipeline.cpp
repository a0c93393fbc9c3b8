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

#include "tid/pipeline.hpp"

#include <array>
#include <utility>

namespace tid {

namespace {

constexpr std::array<std::pair<AblationMode, std::string_view>, 8> kModeNames = {{
    {AblationMode::Full, "full"},
    {AblationMode::ClsOnly, "cls_only"},
    {AblationMode::RegOnly, "reg_only"},
    {AblationMode::KeyOnly, "key_only"},
    {AblationMode::WeakOnly, "weak_only"},
    {AblationMode::RawIou, "raw_iou"},
    {AblationMode::BaselineEq8, "baseline_eq8"},
    {AblationMode::Unmasked, "unmasked"},
}};

diem::ScoreMaps score_for_mode(const LevelBundle& bundle, const GroundTruth& gt,
                               const diem::DiemConfig& cfg, AblationMode mode) {
  const IouMatch match = max_iou_map(bundle.pred_boxes, gt);
  diem::ScoreMaps maps;
  switch (mode) {
    case AblationMode::ClsOnly:
      maps.score_r = TensorD(match.iou_max.dims(), 1.0);
      break;
    case AblationMode::RawIou:
      maps.score_r = TensorD(match.iou_max.dims());
      for (std::size_t i = 0; i < maps.score_r.size(); ++i) {
        maps.score_r[i] = 2.0 * match.iou_max[i];
      }
      break;
    default:
      maps.score_r = diem::regression_score(match.iou_max, cfg);
  }
  if (mode == AblationMode::RegOnly) {
    maps.score_c = TensorD(match.iou_max.dims(), 1.0);
  } else {
    maps.score_c = diem::classification_score(bundle.class_scores, gt, match.assigned, cfg);
  }
  maps.score = diem::task_score(maps.score_r, maps.score_c);
  return maps;
}

}  // namespace

std::string_view mode_name(AblationMode mode) noexcept {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "?";
}

std::optional<AblationMode> parse_mode(std::string_view name) noexcept {
  for (const auto& [m, n] : kModeNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

TidMaps compute_maps(const LevelBundle& teacher, const LevelBundle& student, const GroundTruth& gt,
                     const EngineConfig& cfg, AblationMode mode) {
  cfg.validate();
  validate_bundle(teacher);
  validate_bundle(student);
  if (teacher.height() != student.height() || teacher.width() != student.width()) {
    throw ShapeError("teacher grid " + shape_to_string(teacher.class_scores.dims()) +
                     " and student grid " + shape_to_string(student.class_scores.dims()) +
                     " differ");
  }
  validate_ground_truth(gt, std::min(teacher.num_classes(), student.num_classes()));

  TidMaps maps;
  maps.teacher = score_for_mode(teacher, gt, cfg.diem, mode);
  maps.student = score_for_mode(student, gt, cfg.diem, mode);

  ldam::OutputValueMap& out = maps.output;
  out.score_key = mode == AblationMode::WeakOnly
                      ? TensorD(maps.teacher.score.dims(), cfg.ldam.key_base)
                      : ldam::key_score(maps.teacher.score, cfg.ldam);
  if (mode == AblationMode::KeyOnly) {
    out.score_weak = TensorD(maps.teacher.score.dims(), 1.0);
  } else {
    out.weak_points = ldam::weak_area(maps.teacher.score, maps.student.score, cfg.ldam);
    out.score_weak =
        ldam::weak_score(out.weak_points, teacher.height(), teacher.width(), cfg.ldam);
  }
  out.v_output = ldam::output_value(out.score_key, out.score_weak);

  maps.values = sfdm::build_value_maps(out.v_output, gt, cfg.sfdm);
  return maps;
}

}  // namespace tid
