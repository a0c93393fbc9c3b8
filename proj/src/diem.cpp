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

#include "tid/diem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tid::diem {

void DiemConfig::validate() const {
  if (!(thrd_neg >= 0.0 && thrd_neg < thrd_pos && thrd_pos <= 1.0)) {
    throw std::invalid_argument("thresholds must satisfy 0 <= thrd_neg < thrd_pos <= 1");
  }
  if (!(cls_top_fraction > 0.0 && cls_top_fraction <= 1.0)) {
    throw std::invalid_argument("cls_top_fraction must lie in (0, 1]");
  }
  for (double c : {score_pos, score_mid, score_neg, cls_hit, cls_miss}) {
    if (!std::isfinite(c)) throw std::invalid_argument("score constants must be finite");
  }
}

std::size_t top_count(double fraction, std::size_t n) {
  const double k = std::ceil(fraction * static_cast<double>(n));
  if (!(k > 0.0)) return 0;
  return std::min(n, static_cast<std::size_t>(k));
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  k = std::min(k, values.size());
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  idx.resize(k);
  return idx;
}

double regression_score(double iou_max, const DiemConfig& cfg) noexcept {
  if (iou_max >= cfg.thrd_pos) return cfg.score_pos;
  if (iou_max <= cfg.thrd_neg) return cfg.score_neg;
  return cfg.score_mid;
}

TensorD regression_score(const TensorD& iou_max, const DiemConfig& cfg) {
  TensorD out(iou_max.dims());
  for (std::size_t i = 0; i < iou_max.size(); ++i) out[i] = regression_score(iou_max[i], cfg);
  return out;
}

TensorD classification_relevance(const Tensor& class_scores, const GroundTruth& gt,
                                 std::span<const int> assignment) {
  if (class_scores.rank() != 3) {
    throw ShapeError("class_scores must be H x W x K, got " +
                     shape_to_string(class_scores.dims()));
  }
  const std::size_t h = class_scores.dim(0);
  const std::size_t w = class_scores.dim(1);
  const std::size_t k = class_scores.dim(2);
  if (assignment.size() != h * w) {
    throw ShapeError("assignment map has " + std::to_string(assignment.size()) +
                     " entries for a " + std::to_string(h) + "x" + std::to_string(w) + " grid");
  }
  TensorD rel({h, w});
  for (std::size_t p = 0; p < h * w; ++p) {
    const float* row = class_scores.data().data() + p * k;
    const int g = assignment[p];
    if (g == kNoMatch) {
      rel[p] = *std::max_element(row, row + k);
      continue;
    }
    if (g < 0 || static_cast<std::size_t>(g) >= gt.size()) {
      throw std::out_of_range("assignment refers to ground-truth index " + std::to_string(g));
    }
    const int label = gt.labels[static_cast<std::size_t>(g)];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw std::out_of_range("ground-truth label " + std::to_string(label) + " has no score among " +
                              std::to_string(k) + " classes");
    }
    rel[p] = row[label];
  }
  return rel;
}

TensorD classification_score(const Tensor& class_scores, const GroundTruth& gt,
                             std::span<const int> assignment, const DiemConfig& cfg) {
  const TensorD rel = classification_relevance(class_scores, gt, assignment);
  TensorD out(rel.dims(), cfg.cls_miss);
  for (std::size_t i : top_k_indices(rel.data(), top_count(cfg.cls_top_fraction, rel.size()))) {
    out[i] = cfg.cls_hit;
  }
  return out;
}

TensorD task_score(const TensorD& score_r, const TensorD& score_c) {
  return hadamard(score_c, score_r, "task_score");
}

ScoreMaps score_model(const LevelBundle& bundle, const GroundTruth& gt, const DiemConfig& cfg) {
  cfg.validate();
  validate_bundle(bundle);
  validate_ground_truth(gt, bundle.num_classes());
  const IouMatch match = max_iou_map(bundle.pred_boxes, gt);
  ScoreMaps maps;
  maps.score_r = regression_score(match.iou_max, cfg);
  maps.score_c = classification_score(bundle.class_scores, gt, match.assigned, cfg);
  maps.score = task_score(maps.score_r, maps.score_c);
  return maps;
}

}  // namespace tid::diem
