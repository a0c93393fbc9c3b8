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

#include <cstddef>
#include <span>
#include <vector>

#include "tid/geometry.hpp"
#include "tid/tensor.hpp"
#include "tid/tensorio.hpp"

// Dual-task importance: turns a model's box and class outputs into a
// per-point score that is high where the point both localizes and
// classifies well.
namespace tid::diem {

struct DiemConfig {
  double thrd_pos = 0.5;
  double thrd_neg = 0.4;
  double cls_top_fraction = 0.025;

  double score_pos = 2.0;
  double score_mid = 1.5;
  double score_neg = 0.4;
  double cls_hit = 1.5;
  double cls_miss = 1.0;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

struct ScoreMaps {
  TensorD score_r;
  TensorD score_c;
  TensorD score;
};

/// ceil(fraction * n) clamped to [0, n].
std::size_t top_count(double fraction, std::size_t n);

/// Indices of the k largest values; ties resolved toward the lower index.
/// Returned in selection order.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k);

double regression_score(double iou_max, const DiemConfig& cfg) noexcept;
TensorD regression_score(const TensorD& iou_max, const DiemConfig& cfg);

/// Per-point relevance: score of the assigned GT's class, or the best class
/// score where the point is unassigned.
TensorD classification_relevance(const Tensor& class_scores, const GroundTruth& gt,
                                 std::span<const int> assignment);

TensorD classification_score(const Tensor& class_scores, const GroundTruth& gt,
                             std::span<const int> assignment, const DiemConfig& cfg);

TensorD task_score(const TensorD& score_r, const TensorD& score_c);

ScoreMaps score_model(const LevelBundle& bundle, const GroundTruth& gt, const DiemConfig& cfg);

}  // namespace tid::diem
