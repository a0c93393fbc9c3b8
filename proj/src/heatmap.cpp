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

#include "tid/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tid/tensorio.hpp"

namespace tid::heatmap {

namespace {

void require_2d(const Tensor& map) {
  if (map.rank() != 2) {
    throw ShapeError("heatmap needs a 2-D tensor, got " + shape_to_string(map.dims()));
  }
}

}  // namespace

std::vector<std::uint8_t> normalize_gray(const Tensor& map) {
  std::vector<std::uint8_t> out(map.size(), 0);
  if (map.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(map.data().begin(), map.data().end());
  const double lo = *lo_it;
  const double span = static_cast<double>(*hi_it) - lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double g = std::round(255.0 * (static_cast<double>(map[i]) - lo) / span);
    out[i] = static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0));
  }
  return out;
}

std::string encode_pgm(const Tensor& map) {
  require_2d(map);
  std::string out = "P5\n" + std::to_string(map.dim(1)) + " " + std::to_string(map.dim(0)) +
                    "\n255\n";
  const auto gray = normalize_gray(map);
  out.append(gray.begin(), gray.end());
  return out;
}

std::string encode_csv(const Tensor& map) {
  require_2d(map);
  std::string out;
  char buf[32];
  for (std::size_t y = 0; y < map.dim(0); ++y) {
    for (std::size_t x = 0; x < map.dim(1); ++x) {
      if (x) out += ',';
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(map.at(y, x)));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_heatmap(const Tensor& map, const std::filesystem::path& out, Format format) {
  write_file_atomic(out, format == Format::Pgm ? encode_pgm(map) : encode_csv(map));
}

}  // namespace tid::heatmap
