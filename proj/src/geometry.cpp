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

#include "tid/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace tid {

bool BBox::valid() const noexcept {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
         x1 <= x2 && y1 <= y2;
}

BBox BBox::scaled(double factor) const noexcept {
  const double hw = 0.5 * width() * factor;
  const double hh = 0.5 * height() * factor;
  const double cx = center_x();
  const double cy = center_y();
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

void validate_ground_truth(const GroundTruth& gt, std::optional<std::size_t> num_classes) {
  if (gt.boxes.size() != gt.labels.size()) {
    throw std::invalid_argument("ground truth has " + std::to_string(gt.boxes.size()) +
                                " boxes but " + std::to_string(gt.labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const BBox& b = gt.boxes[i];
    if (!b.valid() || !(b.x1 < b.x2) || !(b.y1 < b.y2)) {
      throw std::invalid_argument("ground-truth box " + std::to_string(i) +
                                  " must have positive area");
    }
    if (gt.labels[i] < 0 ||
        (num_classes && static_cast<std::size_t>(gt.labels[i]) >= *num_classes)) {
      throw std::invalid_argument("ground-truth label " + std::to_string(gt.labels[i]) +
                                  " out of range");
    }
  }
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double point_to_box_distance(double x, double y, const BBox& b) noexcept {
  const double dx = std::max({b.x1 - x, 0.0, x - b.x2});
  const double dy = std::max({b.y1 - y, 0.0, y - b.y2});
  return std::hypot(dx, dy);
}

BBox box_at(const Tensor& pred_boxes, std::size_t y, std::size_t x) {
  return {pred_boxes.at(y, x, 0), pred_boxes.at(y, x, 1), pred_boxes.at(y, x, 2),
          pred_boxes.at(y, x, 3)};
}

IouMatch max_iou_map(const Tensor& pred_boxes, const GroundTruth& gt) {
  if (pred_boxes.rank() != 3 || pred_boxes.dim(2) != 4) {
    throw ShapeError("pred_boxes must be H x W x 4, got " + shape_to_string(pred_boxes.dims()));
  }
  const std::size_t h = pred_boxes.dim(0);
  const std::size_t w = pred_boxes.dim(1);
  IouMatch match{TensorD({h, w}), std::vector<int>(h * w, kNoMatch), gt.empty()};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const BBox pred = box_at(pred_boxes, y, x);
      double best = 0.0;
      int best_idx = kNoMatch;
      for (std::size_t g = 0; g < gt.size(); ++g) {
        const BBox& t = gt.boxes[g];
        // Disjoint boxes score zero and never change the running maximum.
        if (pred.x2 <= t.x1 || t.x2 <= pred.x1 || pred.y2 <= t.y1 || t.y2 <= pred.y1) continue;
        const double v = iou(pred, t);
        if (v > best) {
          best = v;
          best_idx = static_cast<int>(g);
        }
      }
      match.iou_max.at(y, x) = best;
      match.assigned[y * w + x] = best_idx;
    }
  }
  return match;
}

namespace {

struct CellKey {
  long long bx;
  long long by;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<long long>()(k.bx * 0x9E3779B97F4A7C15LL ^ k.by);
  }
};

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::vector<Point> greedy_suppress(std::vector<Candidate> candidates, int radius,
                                   std::size_t max_keep) {
  if (radius < 0) throw std::invalid_argument("suppression radius must be >= 0");
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.point < b.point;
  });

  // Kept points bucketed on a (radius+1)-sized lattice; any point within the
  // radius lies in one of the 3x3 neighboring buckets.
  const long long bucket = static_cast<long long>(radius) + 1;
  std::unordered_map<CellKey, std::vector<Point>, CellKeyHash> kept_by_bucket;
  std::vector<Point> kept;
  for (const Candidate& c : candidates) {
    if (kept.size() >= max_keep) break;
    const long long bx = floor_div(c.point.x, bucket);
    const long long by = floor_div(c.point.y, bucket);
    bool suppressed = false;
    for (long long dy = -1; dy <= 1 && !suppressed; ++dy) {
      for (long long dx = -1; dx <= 1 && !suppressed; ++dx) {
        auto it = kept_by_bucket.find({bx + dx, by + dy});
        if (it == kept_by_bucket.end()) continue;
        for (const Point& k : it->second) {
          if (std::max(std::abs(k.x - c.point.x), std::abs(k.y - c.point.y)) <= radius) {
            suppressed = true;
            break;
          }
        }
      }
    }
    if (suppressed) continue;
    kept.push_back(c.point);
    kept_by_bucket[{bx, by}].push_back(c.point);
  }
  return kept;
}

}  // namespace tid
