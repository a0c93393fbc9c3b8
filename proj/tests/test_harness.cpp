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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "tid/harness.hpp"

using namespace tid;
using namespace tid::harness;

namespace {

double mean(const TensorD& t) {
  return std::accumulate(t.data().begin(), t.data().end(), 0.0) / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("generate_scene") {
  SUBCASE("no objects") {
    const Scene s = generate_scene({.seed = 5, .n_objects = 0});
    CHECK(s.gt.empty());
    validate_bundle(s.teacher);
    validate_bundle(s.student);
  }
  SUBCASE("same seed, bitwise-equal scenes") {
    const Scene a = generate_scene({.seed = 42});
    const Scene b = generate_scene({.seed = 42});
    CHECK(a.teacher.feature == b.teacher.feature);
    CHECK(a.teacher.class_scores == b.teacher.class_scores);
    CHECK(a.teacher.pred_boxes == b.teacher.pred_boxes);
    CHECK(a.student.feature == b.student.feature);
    CHECK(a.student.class_scores == b.student.class_scores);
    CHECK(a.student.pred_boxes == b.student.pred_boxes);
    CHECK(a.gt.boxes == b.gt.boxes);
    CHECK(a.gt.labels == b.gt.labels);
    const Scene c = generate_scene({.seed = 43});
    CHECK_FALSE(a.teacher.feature == c.teacher.feature);
  }
  SUBCASE("objects fit the grid and carry valid labels") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Scene s = generate_scene({.seed = seed, .n_objects = 5});
      REQUIRE(s.gt.size() == 5);
      validate_ground_truth(s.gt, 4);
      for (const BBox& b : s.gt.boxes) {
        CHECK(b.x1 >= 0.0);
        CHECK(b.y1 >= 0.0);
        CHECK(b.x2 <= 32.0);
        CHECK(b.y2 <= 32.0);
      }
    }
  }
  SUBCASE("grid too small") {
    CHECK_THROWS_AS(generate_scene({.seed = 1, .height = 4, .width = 4}), SceneError);
    SceneSpec crowded{.seed = 1, .height = 8, .width = 8, .n_objects = 30,
                      .min_object_size = 6, .max_object_size = 8};
    CHECK_THROWS_AS(generate_scene(crowded), SceneError);
  }
  SUBCASE("teacher boxes track GT better than student boxes, over 100 seeds") {
    double teacher_sum = 0.0;
    double student_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Scene s = generate_scene({.seed = seed, .n_objects = 2});
      teacher_sum += mean(max_iou_map(s.teacher.pred_boxes, s.gt).iou_max);
      student_sum += mean(max_iou_map(s.student.pred_boxes, s.gt).iou_max);
    }
    CHECK(teacher_sum > student_sum);
    const Scene s7 = generate_scene({.seed = 7, .n_objects = 2});
    CHECK(mean(max_iou_map(s7.teacher.pred_boxes, s7.gt).iou_max) >
          mean(max_iou_map(s7.student.pred_boxes, s7.gt).iou_max));
  }
}

TEST_CASE("run_simulation") {
  SUBCASE("student equal to teacher stays at zero loss") {
    const SceneSpec spec{.seed = 3, .student_noise = 0.0};
    const SimulationReport r = run_simulation(spec, AblationMode::Full, 20);
    REQUIRE(r.loss_curve.size() == 21);
    for (double l : r.loss_curve) CHECK(l == 0.0);
  }
  SUBCASE("full mode converges monotonically at the safe step") {
    const SimulationReport r = run_simulation({.seed = 0}, AblationMode::Full, 500);
    REQUIRE(r.loss_curve.size() == 501);
    CHECK(r.loss_curve.front() > 0.0);
    for (std::size_t i = 1; i < r.loss_curve.size(); ++i) {
      CHECK(r.loss_curve[i] <= r.loss_curve[i - 1]);
    }
    CHECK(r.loss_curve.back() <= 0.01 * r.loss_curve.front());
    CHECK(r.residual_high.size() == 501);
  }
  SUBCASE("full beats unmasked on the high tier at equal budget") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SimulationReport full = run_simulation({.seed = seed}, AblationMode::Full, 50);
      const SimulationReport flat = run_simulation({.seed = seed}, AblationMode::Unmasked, 50);
      CHECK(full.step_size == flat.step_size);
      CHECK(full.residual_high.back() <= flat.residual_high.back());
    }
  }
  SUBCASE("every mode runs and stays finite") {
    for (AblationMode m : {AblationMode::Full, AblationMode::ClsOnly, AblationMode::RegOnly,
                           AblationMode::KeyOnly, AblationMode::WeakOnly, AblationMode::RawIou,
                           AblationMode::BaselineEq8, AblationMode::Unmasked}) {
      const SimulationReport r = run_simulation({.seed = 11}, m, 10);
      CHECK(r.loss_curve.size() == 11);
      for (double l : r.loss_curve) CHECK(std::isfinite(l));
    }
  }
  SUBCASE("oversized step diverges with the step named") {
    try {
      run_simulation({.seed = 2}, AblationMode::Unmasked, 5000, 1e6);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.step() > 0);
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(run_simulation({}, AblationMode::Full, 0), std::invalid_argument);
    CHECK_THROWS_AS(run_simulation({}, AblationMode::Full, 1, -1.0), std::invalid_argument);
  }
  SUBCASE("identical inputs, identical reports") {
    const auto a = report_to_json(run_simulation({.seed = 8}, AblationMode::WeakOnly, 30)).dump();
    const auto b = report_to_json(run_simulation({.seed = 8}, AblationMode::WeakOnly, 30)).dump();
    CHECK(a == b);
  }
}

TEST_CASE("ablation masks") {
  const Scene s = generate_scene({.seed = 4});
  const EngineConfig cfg;
  const TidMaps full = compute_maps(s.teacher, s.student, s.gt, cfg, AblationMode::Full);
  const TidMaps key = compute_maps(s.teacher, s.student, s.gt, cfg, AblationMode::KeyOnly);
  const TidMaps weak = compute_maps(s.teacher, s.student, s.gt, cfg, AblationMode::WeakOnly);
  CHECK(hadamard(key.output.score_key, weak.output.score_weak) == full.output.v_output);
  for (double v : key.output.score_weak.data()) CHECK(v == 1.0);
  for (double v : weak.output.score_key.data()) CHECK(v == cfg.ldam.key_base);

  const TidMaps cls = compute_maps(s.teacher, s.student, s.gt, cfg, AblationMode::ClsOnly);
  const TidMaps reg = compute_maps(s.teacher, s.student, s.gt, cfg, AblationMode::RegOnly);
  const TidMaps raw = compute_maps(s.teacher, s.student, s.gt, cfg, AblationMode::RawIou);
  for (double v : cls.teacher.score_r.data()) CHECK(v == 1.0);
  for (double v : reg.teacher.score_c.data()) CHECK(v == 1.0);
  const IouMatch m = max_iou_map(s.teacher.pred_boxes, s.gt);
  for (std::size_t i = 0; i < m.iou_max.size(); ++i) CHECK(raw.teacher.score_r[i] == 2.0 * m.iou_max[i]);
  CHECK_FALSE(cls.values.mask == full.values.mask);
  CHECK_FALSE(reg.values.mask == full.values.mask);
  for (double v : full.values.mask.data()) CHECK(v >= 0.0);

  const ObjectiveMask base = objective_mask(full, s.gt, cfg, AblationMode::BaselineEq8);
  for (double v : base.mask.data()) CHECK((v == cfg.sfdm.alpha_bg || v == cfg.sfdm.alpha_obj));
  const ObjectiveMask flat = objective_mask(full, s.gt, cfg, AblationMode::Unmasked);
  for (double v : flat.mask.data()) CHECK(v == 1.0);
}

TEST_CASE("mode names round-trip") {
  for (AblationMode m : {AblationMode::Full, AblationMode::ClsOnly, AblationMode::RegOnly,
                         AblationMode::KeyOnly, AblationMode::WeakOnly, AblationMode::RawIou,
                         AblationMode::BaselineEq8, AblationMode::Unmasked}) {
    CHECK(parse_mode(mode_name(m)) == m);
  }
  CHECK_FALSE(parse_mode("FULL").has_value());
}

TEST_CASE("safe step size") {
  CHECK(safe_step_size(TensorD({2, 2}, std::vector<double>{0, 1, 4, 2}), 3) == 12.0 / 8.0);
  CHECK(safe_step_size(TensorD({2, 2}, 0.0), 1) == 2.0);
}
