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

#include <compare>
#include <cstddef>
#include <optional>
#include <vector>

#include "tid/tensor.hpp"

namespace tid {

/// Axis-aligned box in feature-cell coordinates, corner form.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x1 + x2); }
  double center_y() const noexcept { return 0.5 * (y1 + y2); }

  /// x1 <= x2 and y1 <= y2, all finite.
  bool valid() const noexcept;

  bool contains(double x, double y) const noexcept {
    return x >= x1 && x <= x2 && y >= y1 && y <= y2;
  }

  /// Box scaled by `factor` about its center.
  BBox scaled(double factor) const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct GroundTruth {
  std::vector<BBox> boxes;
  std::vector<int> labels;

  std::size_t size() const noexcept { return boxes.size(); }
  bool empty() const noexcept { return boxes.empty(); }
};

/// Throws std::invalid_argument unless boxes/labels agree in length, every
/// box has positive area and every label is non-negative (and < num_classes
/// when given).
void validate_ground_truth(const GroundTruth& gt, std::optional<std::size_t> num_classes = {});

/// Intersection over union; 0 when the union is empty.
double iou(const BBox& a, const BBox& b) noexcept;

/// Grid cell (y, x). Ordering is row-major.
struct Point {
  int y = 0;
  int x = 0;

  friend auto operator<=>(const Point&, const Point&) = default;
};

/// Continuous coordinate of a cell center.
inline double cell_center(int index) noexcept { return static_cast<double>(index) + 0.5; }

/// Euclidean distance from (x, y) to the closest point of `b`.
double point_to_box_distance(double x, double y, const BBox& b) noexcept;

inline constexpr int kNoMatch = -1;

struct IouMatch {
  TensorD iou_max;             // H x W
  std::vector<int> assigned;   // row-major, GT index or kNoMatch
  bool empty_gt = false;       // set when there was nothing to match against
};

/// Per point, best IoU of its predicted box (H x W x 4) against any GT box.
/// Points whose best IoU is zero stay unassigned; ties go to the lower GT
/// index.
IouMatch max_iou_map(const Tensor& pred_boxes, const GroundTruth& gt);

/// Reads the predicted box at (y, x) from an H x W x 4 tensor.
BBox box_at(const Tensor& pred_boxes, std::size_t y, std::size_t x);

struct Candidate {
  Point point;
  double score = 0.0;
};

/// Greedy non-maximum suppression on the grid.
///
/// Candidates are visited by descending score, ties by row-major point
/// order. A visited candidate is kept unless it lies within Chebyshev
/// distance `radius` of an already kept point. Stops after `max_keep`.
std::vector<Point> greedy_suppress(std::vector<Candidate> candidates, int radius,
                                   std::size_t max_keep);

}  // namespace tid
