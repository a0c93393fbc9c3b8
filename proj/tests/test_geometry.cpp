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
#include <random>

#include "oracles.hpp"
#include "tid/geometry.hpp"

using tid::BBox;
using tid::Candidate;
using tid::Point;

TEST_CASE("iou examples") {
  CHECK(tid::iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
  CHECK(tid::iou({0, 0, 1, 1}, {2, 2, 3, 3}) == 0.0);
  // Unit-cell enumeration: 1 shared cell out of 7 covered.
  const double cells = tid::oracle::iou_by_cells(0, 0, 2, 2, 1, 1, 3, 3);
  CHECK(cells == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(tid::iou({0, 0, 2, 2}, {1, 1, 3, 3}) == doctest::Approx(cells).epsilon(1e-15));
  // Degenerate boxes have an empty union.
  CHECK(tid::iou({1, 1, 1, 1}, {1, 1, 1, 1}) == 0.0);
  // Edge contact is not overlap.
  CHECK(tid::iou({0, 0, 1, 1}, {1, 0, 2, 1}) == 0.0);
}

TEST_CASE("iou matches cell enumeration on random integer boxes") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coord(0, 12);
  for (int trial = 0; trial < 300; ++trial) {
    int c[8];
    for (int& v : c) v = coord(rng);
    if (c[0] > c[2]) std::swap(c[0], c[2]);
    if (c[1] > c[3]) std::swap(c[1], c[3]);
    if (c[4] > c[6]) std::swap(c[4], c[6]);
    if (c[5] > c[7]) std::swap(c[5], c[7]);
    const BBox a{double(c[0]), double(c[1]), double(c[2]), double(c[3])};
    const BBox b{double(c[4]), double(c[5]), double(c[6]), double(c[7])};
    const double expect = tid::oracle::iou_by_cells(c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]);
    CHECK(tid::iou(a, b) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("iou properties: symmetric, bounded, identity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    BBox a{u(rng), u(rng), 0, 0};
    a.x2 = a.x1 + std::abs(u(rng));
    a.y2 = a.y1 + std::abs(u(rng));
    BBox b{u(rng), u(rng), 0, 0};
    b.x2 = b.x1 + std::abs(u(rng));
    b.y2 = b.y1 + std::abs(u(rng));
    const double ab = tid::iou(a, b);
    CHECK(ab == tid::iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (a.area() > 0.0) CHECK(tid::iou(a, a) == 1.0);
  }
}

TEST_CASE("point_to_box_distance") {
  const BBox box{0, 0, 2, 2};
  CHECK(tid::point_to_box_distance(1, 1, box) == 0.0);
  CHECK(tid::point_to_box_distance(5, 0, box) == 3.0);
  CHECK(tid::point_to_box_distance(4, 5, box) == doctest::Approx(std::sqrt(13.0)).epsilon(1e-15));
  CHECK(tid::point_to_box_distance(2, 1, box) == 0.0);
}

TEST_CASE("max_iou_map") {
  SUBCASE("every predicted box equals the single GT box") {
    tid::Tensor boxes({3, 4, 4});
    for (std::size_t p = 0; p < 12; ++p) {
      boxes[4 * p] = 1;
      boxes[4 * p + 1] = 1;
      boxes[4 * p + 2] = 3;
      boxes[4 * p + 3] = 4;
    }
    const tid::IouMatch m = tid::max_iou_map(boxes, {{{1, 1, 3, 4}}, {0}});
    for (double v : m.iou_max.data()) CHECK(v == 1.0);
    for (int a : m.assigned) CHECK(a == 0);
    CHECK_FALSE(m.empty_gt);
  }
  SUBCASE("empty GT gives zeros and the warning flag") {
    tid::Tensor boxes({2, 2, 4}, 1.0f);
    const tid::IouMatch m = tid::max_iou_map(boxes, {});
    CHECK(m.empty_gt);
    for (double v : m.iou_max.data()) CHECK(v == 0.0);
    for (int a : m.assigned) CHECK(a == tid::kNoMatch);
  }
  SUBCASE("3 GT boxes, 16 points against the all-pairs oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<float> u(0.0f, 6.0f);
    tid::Tensor boxes({4, 4, 4});
    for (std::size_t p = 0; p < 16; ++p) {
      float x1 = u(rng), y1 = u(rng), x2 = u(rng), y2 = u(rng);
      boxes[4 * p] = std::min(x1, x2);
      boxes[4 * p + 1] = std::min(y1, y2);
      boxes[4 * p + 2] = std::max(x1, x2);
      boxes[4 * p + 3] = std::max(y1, y2);
    }
    const tid::GroundTruth gt{{{0, 0, 3, 3}, {2, 2, 6, 5}, {4, 0, 6, 2}}, {0, 1, 2}};
    const auto expect = tid::oracle::max_iou_brute(boxes, gt);
    const tid::IouMatch m = tid::max_iou_map(boxes, gt);
    for (std::size_t p = 0; p < 16; ++p) {
      CHECK(m.iou_max[p] == expect[p]);
      if (expect[p] > 0.0) {
        const int a = m.assigned[p];
        REQUIRE(a >= 0);
        const tid::BBox pred = tid::box_at(boxes, p / 4, p % 4);
        CHECK(tid::oracle::iou_reference(pred, gt.boxes[static_cast<std::size_t>(a)]) == expect[p]);
      } else {
        CHECK(m.assigned[p] == tid::kNoMatch);
      }
    }
  }
}

TEST_CASE("max_iou_map never decreases when a GT box is added") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 10.0f);
  tid::Tensor boxes({5, 5, 4});
  for (std::size_t p = 0; p < 25; ++p) {
    const float x = u(rng), y = u(rng);
    boxes[4 * p] = x;
    boxes[4 * p + 1] = y;
    boxes[4 * p + 2] = x + 2.0f;
    boxes[4 * p + 3] = y + 3.0f;
  }
  tid::GroundTruth gt;
  tid::TensorD prev = tid::max_iou_map(boxes, gt).iou_max;
  for (int g = 0; g < 6; ++g) {
    const double x = u(rng), y = u(rng);
    gt.boxes.push_back({x, y, x + 1.0 + g, y + 2.0});
    gt.labels.push_back(0);
    const tid::TensorD next = tid::max_iou_map(boxes, gt).iou_max;
    for (std::size_t i = 0; i < next.size(); ++i) CHECK(next[i] >= prev[i]);
    prev = next;
  }
}

TEST_CASE("greedy_suppress") {
  SUBCASE("two candidates one cell apart, radius 2") {
    const auto kept = tid::greedy_suppress({{{0, 0}, 1.0}, {{0, 1}, 2.0}}, 2, 10);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0] == Point{0, 1});
  }
  SUBCASE("radius 0 keeps everything in score order up to max_keep") {
    std::vector<Candidate> c = {{{0, 0}, 0.5}, {{0, 1}, 3.0}, {{1, 0}, 2.0}, {{1, 1}, 1.0}};
    auto kept = tid::greedy_suppress(c, 0, 10);
    CHECK(kept == std::vector<Point>{{0, 1}, {1, 0}, {1, 1}, {0, 0}});
    kept = tid::greedy_suppress(c, 0, 2);
    CHECK(kept == std::vector<Point>{{0, 1}, {1, 0}});
  }
  SUBCASE("ties break toward the smaller (y, x)") {
    const auto kept = tid::greedy_suppress({{{2, 0}, 1.0}, {{0, 5}, 1.0}, {{0, 4}, 1.0}}, 1, 10);
    CHECK(kept == std::vector<Point>{{0, 4}, {2, 0}});
  }
  SUBCASE("negative radius is rejected") {
    CHECK_THROWS_AS(tid::greedy_suppress({}, -1, 1), std::invalid_argument);
  }
  SUBCASE("max_keep 0 keeps nothing") {
    CHECK(tid::greedy_suppress({{{0, 0}, 1.0}}, 0, 0).empty());
  }
}

TEST_CASE("greedy_suppress equals the reference greedy on random sets") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> coord(-4, 15);
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Candidate> cands(20);
    // Coarse scores force plenty of ties.
    for (auto& c : cands) c = {{coord(rng), coord(rng)}, static_cast<double>(level(rng))};
    const int radius = trial % 5;
    const std::size_t keep = 1 + static_cast<std::size_t>(trial % 20);
    const auto kept = tid::greedy_suppress(cands, radius, keep);
    CHECK(kept == tid::oracle::greedy_reference(cands, radius, keep));
    for (std::size_t i = 0; i < kept.size(); ++i) {
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        CHECK(std::max(std::abs(kept[i].x - kept[j].x), std::abs(kept[i].y - kept[j].y)) > radius);
      }
    }
  }
}

TEST_CASE("ground-truth validation") {
  CHECK_NOTHROW(tid::validate_ground_truth({{{0, 0, 1, 1}}, {0}}, 1));
  CHECK_THROWS_AS(tid::validate_ground_truth({{{0, 0, 1, 1}}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(tid::validate_ground_truth({{{0, 0, 0, 1}}, {0}}), std::invalid_argument);
  CHECK_THROWS_AS(tid::validate_ground_truth({{{0, 0, 1, 1}}, {3}}, 3), std::invalid_argument);
}
