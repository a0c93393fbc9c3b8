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

#include "tid/sfdm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tid::sfdm {

void SfdmConfig::validate() const {
  if (!(vicinity_scale > 1.0) || !std::isfinite(vicinity_scale)) {
    throw std::invalid_argument("vicinity_scale must be > 1");
  }
  if (!(tier_lo < tier_hi) || !std::isfinite(tier_lo) || !std::isfinite(tier_hi)) {
    throw std::invalid_argument("tier thresholds must satisfy tier_lo < tier_hi");
  }
  for (double m : {w_hi, w_med, w_lo, alpha_bg, alpha_obj}) {
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw std::invalid_argument("tier multipliers and balance weights must be > 0");
    }
  }
}

std::string_view tier_name(Tier t) noexcept {
  switch (t) {
    case Tier::High: return "high";
    case Tier::Med: return "med";
    case Tier::Low: return "low";
  }
  return "?";
}

double information_value_at(double x, double y, const BBox& box, const SfdmConfig& cfg) noexcept {
  if (box.contains(x, y)) return 1.0;
  const BBox vicinity = box.scaled(cfg.vicinity_scale);
  if (!vicinity.contains(x, y)) return 0.0;
  // Farthest a point of the vicinity can be from the box: its corner.
  const double margin = 0.5 * (cfg.vicinity_scale - 1.0);
  const double dists = std::hypot(margin * box.width(), margin * box.height());
  const double d = point_to_box_distance(x, y, box);
  return std::clamp(1.0 - d / dists, 0.0, 1.0);
}

TensorD information_value(std::size_t height, std::size_t width, const GroundTruth& gt,
                          const SfdmConfig& cfg) {
  TensorD out({height, width}, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double best = 0.0;
      for (const BBox& b : gt.boxes) {
        best = std::max(best, information_value_at(cell_center(static_cast<int>(x)),
                                                   cell_center(static_cast<int>(y)), b, cfg));
      }
      out.at(y, x) = best;
    }
  }
  return out;
}

TensorD feature_value(const TensorD& v_output, const TensorD& v_info) {
  return hadamard(v_output, v_info, "feature_value");
}

Tier classify_tier(double v, const SfdmConfig& cfg) noexcept {
  if (v >= cfg.tier_hi) return Tier::High;
  if (v >= cfg.tier_lo) return Tier::Med;
  return Tier::Low;
}

double tier_weight(Tier t, const SfdmConfig& cfg) noexcept {
  switch (t) {
    case Tier::High: return cfg.w_hi;
    case Tier::Med: return cfg.w_med;
    case Tier::Low: return cfg.w_lo;
  }
  return 0.0;
}

TierMask tier_mask(const TensorD& v, const SfdmConfig& cfg) {
  TierMask out{TensorD(v.dims()), TierMap(v.size())};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
      throw std::invalid_argument("tier_mask: value " + std::to_string(v[i]) + " at index " +
                                  std::to_string(i) + " is not finite and nonnegative");
    }
    const Tier t = classify_tier(v[i], cfg);
    out.tiers[i] = t;
    out.mask[i] = tier_weight(t, cfg) * v[i];
  }
  return out;
}

TierMap infer_tiers(const TensorD& mask, const SfdmConfig& cfg) {
  const double hi = cfg.w_hi * cfg.tier_hi;
  const double med = cfg.w_med * cfg.tier_lo;
  TierMap tiers(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    tiers[i] = mask[i] >= hi ? Tier::High : (mask[i] >= med ? Tier::Med : Tier::Low);
  }
  return tiers;
}

TensorD align(const TensorD& student_feature, const Shape& target_shape,
              const std::optional<Projection>& projection) {
  if (student_feature.rank() != 3 || target_shape.size() != 3) {
    throw ShapeError("align expects C x H x W features");
  }
  if (student_feature.dims() == target_shape && !projection) return student_feature;
  if (!projection) {
    throw ShapeError("student feature " + shape_to_string(student_feature.dims()) +
                     " does not match teacher " + shape_to_string(target_shape) +
                     " and no projection was supplied");
  }
  const Projection& proj = *projection;
  const std::size_t cs = student_feature.dim(0);
  const std::size_t hs = student_feature.dim(1);
  const std::size_t ws = student_feature.dim(2);
  const std::size_t c = target_shape[0];
  const std::size_t h = target_shape[1];
  const std::size_t w = target_shape[2];
  if (proj.in_channels != cs || proj.out_channels != c || proj.weights.size() != c * cs) {
    throw ShapeError("projection " + std::to_string(proj.out_channels) + "x" +
                     std::to_string(proj.in_channels) + " cannot map " + std::to_string(cs) +
                     " channels to " + std::to_string(c));
  }

  TensorD projected({c, hs, ws}, 0.0);
  for (std::size_t o = 0; o < c; ++o) {
    for (std::size_t i = 0; i < cs; ++i) {
      const double wgt = proj.weights[o * cs + i];
      for (std::size_t p = 0; p < hs * ws; ++p) {
        projected[o * hs * ws + p] += wgt * student_feature[i * hs * ws + p];
      }
    }
  }
  if (hs == h && ws == w) return projected;

  TensorD out({c, h, w});
  for (std::size_t o = 0; o < c; ++o) {
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t sy = y * hs / h;
      for (std::size_t x = 0; x < w; ++x) {
        out.at(o, y, x) = projected.at(o, sy, x * ws / w);
      }
    }
  }
  return out;
}

LossReport distill_loss(const TensorD& teacher, const TensorD& student_aligned,
                        const TensorD& mask, const TierMap& tiers) {
  if (teacher.rank() != 3) throw ShapeError("distill_loss expects C x H x W features");
  require_same_shape(teacher, student_aligned, "distill_loss");
  const std::size_t c = teacher.dim(0);
  const std::size_t hw = teacher.dim(1) * teacher.dim(2);
  if (mask.dims() != Shape{teacher.dim(1), teacher.dim(2)}) {
    throw ShapeError("distill_loss: mask " + shape_to_string(mask.dims()) +
                     " does not match feature grid " + shape_to_string(teacher.dims()));
  }
  if (tiers.size() != hw) throw ShapeError("distill_loss: tier map size mismatch");

  const double n = static_cast<double>(c * hw);
  LossReport report;
  report.grad_student = TensorD(teacher.dims(), 0.0);
  std::array<double, 3> sums{};
  for (std::size_t p = 0; p < hw; ++p) {
    const double m = mask[p];
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw std::invalid_argument("distill_loss: mask must be finite and nonnegative");
    }
    if (m == 0.0) continue;
    double sq = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = ch * hw + p;
      const double d = teacher[i] - student_aligned[i];
      sq += d * d;
      report.grad_student[i] = -2.0 * m * d / n;
    }
    sums[static_cast<std::size_t>(tiers[p])] += m * sq;
  }
  for (std::size_t t = 0; t < 3; ++t) report.per_tier[t] = sums[t] / n;
  report.total = report.per_tier[0] + report.per_tier[1] + report.per_tier[2];
  return report;
}

TensorD object_mask(std::size_t height, std::size_t width, const GroundTruth& gt) {
  TensorD out({height, width}, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double cx = cell_center(static_cast<int>(x));
      const double cy = cell_center(static_cast<int>(y));
      for (const BBox& b : gt.boxes) {
        if (b.contains(cx, cy)) {
          out.at(y, x) = 1.0;
          break;
        }
      }
    }
  }
  return out;
}

TierMask baseline_mask(std::size_t height, std::size_t width, const GroundTruth& gt,
                       const SfdmConfig& cfg) {
  const TensorD obj = object_mask(height, width, gt);
  TierMask out{TensorD(obj.dims()), TierMap(obj.size())};
  for (std::size_t i = 0; i < obj.size(); ++i) {
    const bool is_obj = obj[i] > 0.0;
    out.mask[i] = is_obj ? cfg.alpha_obj : cfg.alpha_bg;
    out.tiers[i] = is_obj ? Tier::High : Tier::Low;
  }
  return out;
}

LossReport baseline_bg_obj_loss(const TensorD& teacher, const TensorD& student_aligned,
                                const GroundTruth& gt, const SfdmConfig& cfg) {
  if (teacher.rank() != 3) throw ShapeError("baseline loss expects C x H x W features");
  const TierMask m = baseline_mask(teacher.dim(1), teacher.dim(2), gt, cfg);
  return distill_loss(teacher, student_aligned, m.mask, m.tiers);
}

ValueMaps build_value_maps(const TensorD& v_output, const GroundTruth& gt, const SfdmConfig& cfg) {
  cfg.validate();
  ValueMaps maps;
  maps.v_output = v_output;
  maps.v_info = information_value(v_output.dim(0), v_output.dim(1), gt, cfg);
  maps.v = feature_value(v_output, maps.v_info);
  TierMask tm = tier_mask(maps.v, cfg);
  maps.mask = std::move(tm.mask);
  maps.tiers = std::move(tm.tiers);
  return maps;
}

}  // namespace tid::sfdm
