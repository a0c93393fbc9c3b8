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

#include "tid/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace tid::harness {

namespace {

// mt19937_64's output sequence is fixed by the standard; the distribution
// adaptors are not, so the conversions below are spelled out.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

constexpr int kPlacementAttempts = 1000;
constexpr double kMaxGtOverlap = 0.3;

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

BBox jitter(const BBox& b, double sd, Rng& rng) {
  double x1 = b.x1 + sd * rng.normal();
  double y1 = b.y1 + sd * rng.normal();
  double x2 = b.x2 + sd * rng.normal();
  double y2 = b.y2 + sd * rng.normal();
  if (x1 > x2) std::swap(x1, x2);
  if (y1 > y2) std::swap(y1, y2);
  return {x1, y1, x2, y2};
}

void put_box(Tensor& boxes, std::size_t y, std::size_t x, const BBox& b) {
  boxes.at(y, x, 0) = static_cast<float>(b.x1);
  boxes.at(y, x, 1) = static_cast<float>(b.y1);
  boxes.at(y, x, 2) = static_cast<float>(b.x2);
  boxes.at(y, x, 3) = static_cast<float>(b.y2);
}

// Float rounding may reorder nearly coincident corners.
void fix_box(Tensor& boxes, std::size_t y, std::size_t x) {
  if (boxes.at(y, x, 0) > boxes.at(y, x, 2)) std::swap(boxes.at(y, x, 0), boxes.at(y, x, 2));
  if (boxes.at(y, x, 1) > boxes.at(y, x, 3)) std::swap(boxes.at(y, x, 1), boxes.at(y, x, 3));
}

}  // namespace

void SceneSpec::validate() const {
  if (height == 0 || width == 0 || channels == 0 || num_classes == 0) {
    throw std::invalid_argument("scene extents must be positive");
  }
  if (!(teacher_noise >= 0.0) || !(student_noise >= 0.0) || !std::isfinite(teacher_noise) ||
      !std::isfinite(student_noise)) {
    throw std::invalid_argument("noise levels must be finite and >= 0");
  }
  if (!(min_object_size > 0.0) || !(min_object_size <= max_object_size) ||
      !std::isfinite(max_object_size)) {
    throw std::invalid_argument("object size range must satisfy 0 < min <= max");
  }
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  const std::size_t H = spec.height;
  const std::size_t W = spec.width;
  const std::size_t C = spec.channels;
  const std::size_t K = spec.num_classes;
  if (spec.n_objects > 0 &&
      spec.max_object_size > static_cast<double>(std::min(H, W))) {
    throw SceneError("objects up to " + std::to_string(spec.max_object_size) +
                     " cells do not fit a " + std::to_string(H) + "x" + std::to_string(W) +
                     " grid");
  }
  Rng rng(spec.seed);
  Scene scene;

  for (std::size_t o = 0; o < spec.n_objects; ++o) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const double w = rng.uniform(spec.min_object_size, spec.max_object_size);
      const double h = rng.uniform(spec.min_object_size, spec.max_object_size);
      const double x1 = rng.uniform(0.0, static_cast<double>(W) - w);
      const double y1 = rng.uniform(0.0, static_cast<double>(H) - h);
      const BBox box{x1, y1, x1 + w, y1 + h};
      placed = std::all_of(scene.gt.boxes.begin(), scene.gt.boxes.end(),
                           [&](const BBox& other) { return iou(box, other) < kMaxGtOverlap; });
      if (placed) scene.gt.boxes.push_back(box);
    }
    if (!placed) {
      throw SceneError("could not place object " + std::to_string(o) + " of " +
                       std::to_string(spec.n_objects) + " on a " + std::to_string(H) + "x" +
                       std::to_string(W) + " grid");
    }
    scene.gt.labels.push_back(static_cast<int>(rng.index(K)));
  }

  // Teacher features: one smooth bump per object and channel, plus noise.
  Tensor t_feat({C, H, W});
  std::vector<double> amplitude(spec.n_objects * C);
  for (double& a : amplitude) a = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        const double px = cell_center(static_cast<int>(x));
        const double py = cell_center(static_cast<int>(y));
        double v = 0.0;
        for (std::size_t o = 0; o < spec.n_objects; ++o) {
          const BBox& b = scene.gt.boxes[o];
          const double sx = 0.5 * b.width();
          const double sy = 0.5 * b.height();
          const double ex = (px - b.center_x()) / sx;
          const double ey = (py - b.center_y()) / sy;
          v += amplitude[o * C + c] * std::exp(-0.5 * (ex * ex + ey * ey));
        }
        t_feat.at(c, y, x) = static_cast<float>(v + spec.teacher_noise * rng.normal());
      }
    }
  }

  Tensor t_scores({H, W, K});
  Tensor t_boxes({H, W, 4});
  Tensor s_scores({H, W, K});
  Tensor s_boxes({H, W, 4});
  sfdm::SfdmConfig vicinity;  // default vicinity defines where predictions track objects
  const double flat = 1.0 / static_cast<double>(K);

  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double px = cell_center(static_cast<int>(x));
      const double py = cell_center(static_cast<int>(y));

      // Object this point responds to: nearest box, if its vicinity covers it.
      int owner = -1;
      double owner_dist = 0.0;
      for (std::size_t o = 0; o < scene.gt.size(); ++o) {
        const BBox& b = scene.gt.boxes[o];
        if (!b.scaled(vicinity.vicinity_scale).contains(px, py)) continue;
        const double d = point_to_box_distance(px, py, b);
        if (owner < 0 || d < owner_dist) {
          owner = static_cast<int>(o);
          owner_dist = d;
        }
      }

      BBox t_box;
      double size = 1.0;
      double spread = 1.0;
      if (owner >= 0) {
        const BBox& b = scene.gt.boxes[static_cast<std::size_t>(owner)];
        size = 0.5 * (b.width() + b.height());
        const double half_diag = 0.5 * std::hypot(b.width(), b.height());
        spread = 1.0 + 2.0 * std::hypot(px - b.center_x(), py - b.center_y()) / half_diag;
        t_box = jitter(b, (0.02 + spec.teacher_noise) * size * spread, rng);
        const double info = sfdm::information_value_at(px, py, b, vicinity);
        const int label = scene.gt.labels[static_cast<std::size_t>(owner)];
        for (std::size_t k = 0; k < K; ++k) {
          const double base = static_cast<int>(k) == label ? 0.95 * info : 0.1 * rng.uniform();
          t_scores.at(y, x, k) = clamp01(base + spec.teacher_noise * rng.normal());
        }
      } else {
        const double half = 0.5 * rng.uniform(0.5, 2.0);
        t_box = {px - half, py - half, px + half, py + half};
        for (std::size_t k = 0; k < K; ++k) {
          t_scores.at(y, x, k) = clamp01(0.1 * rng.uniform() + spec.teacher_noise * rng.normal());
        }
      }
      put_box(t_boxes, y, x, t_box);
      fix_box(t_boxes, y, x);

      // Student: the teacher's outputs, degraded.
      put_box(s_boxes, y, x, jitter(t_box, spec.student_noise * size * spread, rng));
      fix_box(s_boxes, y, x);
      for (std::size_t k = 0; k < K; ++k) {
        const double t = t_scores.at(y, x, k);
        s_scores.at(y, x, k) = clamp01((1.0 - spec.student_noise) * t +
                                       spec.student_noise * flat +
                                       0.1 * spec.student_noise * rng.normal());
      }
    }
  }

  Tensor s_feat({C, H, W});
  for (std::size_t i = 0; i < s_feat.size(); ++i) {
    s_feat[i] = static_cast<float>((1.0 - spec.student_noise) * t_feat[i] +
                                   spec.student_noise * rng.normal());
  }

  scene.teacher = LevelBundle{0, std::move(t_feat), std::move(t_scores), std::move(t_boxes)};
  scene.student = LevelBundle{0, std::move(s_feat), std::move(s_scores), std::move(s_boxes)};
  return scene;
}

DivergenceError::DivergenceError(std::size_t step, double loss)
    : std::runtime_error("simulation diverged at step " + std::to_string(step) + " (loss " +
                         std::to_string(loss) + ")"),
      step_(step) {}

ObjectiveMask objective_mask(const TidMaps& maps, const GroundTruth& gt, const EngineConfig& cfg,
                             AblationMode mode) {
  const std::size_t h = maps.values.v.dim(0);
  const std::size_t w = maps.values.v.dim(1);
  switch (mode) {
    case AblationMode::Unmasked:
      return {TensorD({h, w}, 1.0), maps.values.tiers};
    case AblationMode::BaselineEq8: {
      sfdm::TierMask m = sfdm::baseline_mask(h, w, gt, cfg.sfdm);
      return {std::move(m.mask), std::move(m.tiers)};
    }
    default:
      return {maps.values.mask, maps.values.tiers};
  }
}

double safe_step_size(const TensorD& mask, std::size_t channels) {
  const double peak = *std::max_element(mask.data().begin(), mask.data().end());
  const double n = static_cast<double>(channels * mask.size());
  return peak > 0.0 ? n / (2.0 * peak) : n / 2.0;
}

SimulationReport run_simulation(const SceneSpec& spec, AblationMode mode, std::size_t steps,
                                std::optional<double> step_size, const EngineConfig& cfg) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (step_size && (!(*step_size > 0.0) || !std::isfinite(*step_size))) {
    throw std::invalid_argument("step_size must be > 0");
  }
  cfg.validate();
  const Scene scene = generate_scene(spec);

  const TidMaps full = compute_maps(scene.teacher, scene.student, scene.gt, cfg, AblationMode::Full);
  const bool mask_side =
      mode == AblationMode::Full || mode == AblationMode::Unmasked || mode == AblationMode::BaselineEq8;
  const TidMaps maps =
      mask_side ? full : compute_maps(scene.teacher, scene.student, scene.gt, cfg, mode);
  const ObjectiveMask objective = objective_mask(maps, scene.gt, cfg, mode);
  const sfdm::TierMap& regions = full.values.tiers;

  const TensorD teacher = to_double(scene.teacher.feature);
  TensorD student = to_double(scene.student.feature);
  const std::size_t channels = teacher.dim(0);
  const std::size_t hw = teacher.dim(1) * teacher.dim(2);

  SimulationReport report;
  report.mode = mode;
  report.steps = steps;
  report.spec = spec;
  report.config = cfg;
  report.step_size = step_size.value_or(safe_step_size(full.values.mask, channels));
  report.final_value = maps.values.v;
  report.final_mask = objective.mask;
  for (sfdm::Tier t : regions) ++report.tier_population[static_cast<std::size_t>(t)];

  for (std::size_t step = 0;; ++step) {
    const sfdm::LossReport loss = sfdm::distill_loss(teacher, student, objective.mask, objective.tiers);
    if (!std::isfinite(loss.total)) throw DivergenceError(step, loss.total);
    report.loss_curve.push_back(loss.total);

    std::array<double, 3> sq{};
    for (std::size_t p = 0; p < hw; ++p) {
      double s = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = teacher[c * hw + p] - student[c * hw + p];
        s += d * d;
      }
      sq[static_cast<std::size_t>(regions[p])] += s;
    }
    auto mean = [&](sfdm::Tier t) {
      const std::size_t n = report.tier_population[static_cast<std::size_t>(t)];
      return n ? sq[static_cast<std::size_t>(t)] / static_cast<double>(n * channels) : 0.0;
    };
    report.residual_high.push_back(mean(sfdm::Tier::High));
    report.residual_med.push_back(mean(sfdm::Tier::Med));
    report.residual_low.push_back(mean(sfdm::Tier::Low));

    if (step == steps) break;
    for (std::size_t i = 0; i < student.size(); ++i) {
      student[i] -= report.step_size * loss.grad_student[i];
    }
  }
  return report;
}

nlohmann::json spec_to_json(const SceneSpec& s) {
  return {{"seed", s.seed},
          {"height", s.height},
          {"width", s.width},
          {"channels", s.channels},
          {"num_classes", s.num_classes},
          {"n_objects", s.n_objects},
          {"teacher_noise", s.teacher_noise},
          {"student_noise", s.student_noise},
          {"min_object_size", s.min_object_size},
          {"max_object_size", s.max_object_size}};
}

nlohmann::json config_to_json(const EngineConfig& c) {
  return {{"diem",
           {{"thrd_pos", c.diem.thrd_pos},
            {"thrd_neg", c.diem.thrd_neg},
            {"cls_top_fraction", c.diem.cls_top_fraction},
            {"score_pos", c.diem.score_pos},
            {"score_mid", c.diem.score_mid},
            {"score_neg", c.diem.score_neg},
            {"cls_hit", c.diem.cls_hit},
            {"cls_miss", c.diem.cls_miss}}},
          {"ldam",
           {{"gamma_key", c.ldam.gamma_key},
            {"gamma_weak", c.ldam.gamma_weak},
            {"weak_bonus", c.ldam.weak_bonus},
            {"key_base", c.ldam.key_base},
            {"nms_radius", c.ldam.nms_radius}}},
          {"sfdm",
           {{"vicinity_scale", c.sfdm.vicinity_scale},
            {"tier_hi", c.sfdm.tier_hi},
            {"tier_lo", c.sfdm.tier_lo},
            {"w_hi", c.sfdm.w_hi},
            {"w_med", c.sfdm.w_med},
            {"w_lo", c.sfdm.w_lo},
            {"alpha_bg", c.sfdm.alpha_bg},
            {"alpha_obj", c.sfdm.alpha_obj}}}};
}

nlohmann::json report_to_json(const SimulationReport& r) {
  nlohmann::json doc;
  doc["schema"] = "tid.simulation_report/1";
  doc["version"] = std::string(kVersion);
  doc["mode"] = std::string(mode_name(r.mode));
  doc["steps"] = r.steps;
  doc["step_size"] = r.step_size;
  doc["scene"] = spec_to_json(r.spec);
  doc["config"] = config_to_json(r.config);
  doc["loss_curve"] = r.loss_curve;
  doc["residual_curves"] = {
      {"high", r.residual_high}, {"med", r.residual_med}, {"low", r.residual_low}};
  doc["tier_population"] = {{"high", r.tier_population[2]},
                            {"med", r.tier_population[1]},
                            {"low", r.tier_population[0]}};
  doc["final"] = {{"height", r.final_value.dim(0)},
                  {"width", r.final_value.dim(1)},
                  {"value", r.final_value.values()},
                  {"mask", r.final_mask.values()}};
  return doc;
}

}  // namespace tid::harness
