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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tid/tensor.hpp"

namespace tid::heatmap {

enum class Format { Pgm, Csv };

/// Min-max normalization to 0..255, rounded to nearest. A constant map
/// yields all zeros.
std::vector<std::uint8_t> normalize_gray(const Tensor& map);

/// Binary P5 portable graymap. Requires a 2-D tensor.
std::string encode_pgm(const Tensor& map);

/// One line per row, comma separated, values printed with enough digits to
/// round-trip a 32-bit float.
std::string encode_csv(const Tensor& map);

void write_heatmap(const Tensor& map, const std::filesystem::path& out, Format format);

}  // namespace tid::heatmap
