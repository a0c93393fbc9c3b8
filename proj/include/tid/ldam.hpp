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
#include <utility>
#include <vector>

#include "tid/geometry.hpp"
#include "tid/tensor.hpp"

// Learning-dynamics assessment: key areas come from the teacher's own
// scores, weak areas from where the student trails the teacher.
namespace tid::ldam {

struct LdamConfig {
  double gamma_key = 0.10;
  double gamma_weak = 0.10;
  double weak_bonus = 1.5;
  double key_base = 1.0;
  int nms_radius = 3;

  void validate() const;
};

struct OutputValueMap {
  TensorD score_key;
  TensorD score_weak;
  TensorD v_output;
  std::vector<Point> weak_points;
};

/// Top ceil(gamma_key * H * W) points keep their teacher score, the rest get
/// key_base.
TensorD key_score(const TensorD& score_t, const LdamConfig& cfg);

/// Points with the largest positive teacher-minus-student gap, spread out by
/// greedy suppression. Returned in selection order.
std::vector<Point> weak_area(const TensorD& score_t, const TensorD& score_s,
                             const LdamConfig& cfg);

/// weak_bonus at `weak_points`, 1 elsewhere. Throws std::out_of_range for a
/// point outside the grid.
TensorD weak_score(const std::vector<Point>& weak_points, std::size_t height, std::size_t width,
                   const LdamConfig& cfg);

TensorD output_value(const TensorD& score_key, const TensorD& score_weak);

OutputValueMap assess(const TensorD& score_t, const TensorD& score_s, const LdamConfig& cfg);

}  // namespace tid::ldam
