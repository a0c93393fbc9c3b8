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

#include "tid/ldam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tid/diem.hpp"

namespace tid::ldam {

void LdamConfig::validate() const {
  if (!(gamma_key > 0.0 && gamma_key <= 1.0)) {
    throw std::invalid_argument("gamma_key must lie in (0, 1]");
  }
  if (!(gamma_weak > 0.0 && gamma_weak <= 1.0)) {
    throw std::invalid_argument("gamma_weak must lie in (0, 1]");
  }
  if (!(weak_bonus >= 1.0) || !std::isfinite(weak_bonus)) {
    throw std::invalid_argument("weak_bonus must be >= 1");
  }
  if (!(key_base > 0.0) || !std::isfinite(key_base)) {
    throw std::invalid_argument("key_base must be > 0");
  }
  if (nms_radius < 0) throw std::invalid_argument("nms_radius must be >= 0");
}

TensorD key_score(const TensorD& score_t, const LdamConfig& cfg) {
  TensorD out(score_t.dims(), cfg.key_base);
  const auto top = diem::top_k_indices(score_t.data(), diem::top_count(cfg.gamma_key, score_t.size()));
  for (std::size_t i : top) out[i] = score_t[i];
  return out;
}

std::vector<Point> weak_area(const TensorD& score_t, const TensorD& score_s,
                             const LdamConfig& cfg) {
  require_same_shape(score_t, score_s, "weak_area");
  if (score_t.rank() != 2) throw ShapeError("weak_area expects H x W score maps");
  const std::size_t w = score_t.dim(1);
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < score_t.size(); ++i) {
    const double gap = score_t[i] - score_s[i];
    if (gap > 0.0) {
      candidates.push_back({{static_cast<int>(i / w), static_cast<int>(i % w)}, gap});
    }
  }
  return greedy_suppress(std::move(candidates), cfg.nms_radius,
                         diem::top_count(cfg.gamma_weak, score_t.size()));
}

TensorD weak_score(const std::vector<Point>& weak_points, std::size_t height, std::size_t width,
                   const LdamConfig& cfg) {
  TensorD out({height, width}, 1.0);
  for (const Point& p : weak_points) {
    if (p.y < 0 || p.x < 0 || static_cast<std::size_t>(p.y) >= height ||
        static_cast<std::size_t>(p.x) >= width) {
      throw std::out_of_range("weak point (" + std::to_string(p.y) + "," + std::to_string(p.x) +
                              ") outside " + std::to_string(height) + "x" + std::to_string(width));
    }
    out.at(static_cast<std::size_t>(p.y), static_cast<std::size_t>(p.x)) = cfg.weak_bonus;
  }
  return out;
}

TensorD output_value(const TensorD& score_key, const TensorD& score_weak) {
  return hadamard(score_key, score_weak, "output_value");
}

OutputValueMap assess(const TensorD& score_t, const TensorD& score_s, const LdamConfig& cfg) {
  cfg.validate();
  OutputValueMap out;
  out.score_key = key_score(score_t, cfg);
  out.weak_points = weak_area(score_t, score_s, cfg);
  out.score_weak = weak_score(out.weak_points, score_t.dim(0), score_t.dim(1), cfg);
  out.v_output = output_value(out.score_key, out.score_weak);
  return out;
}

}  // namespace tid::ldam
