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
#include <stdexcept>
#include <string>

#include "tid/geometry.hpp"
#include "tid/tensor.hpp"

namespace tid {

// TIDT tensor file, all integers and floats little-endian:
//
//   magic   "TIDT"           4 bytes
//   version u32              currently 1
//   ndim    u32              1..4
//   dims    u32 * ndim
//   payload f32 * prod(dims) row-major
inline constexpr char kTensorMagic[4] = {'T', 'I', 'D', 'T'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;

class TensorIoError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, BadVersion, BadHeader, Truncated, TrailingBytes, NonFinite };

  TensorIoError(Kind kind, const std::filesystem::path& path, const std::string& detail);

  Kind kind() const noexcept { return kind_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  Kind kind_;
  std::filesystem::path path_;
};

/// Raised for malformed bundle or ground-truth documents.
class BundleError : public std::runtime_error {
 public:
  enum class Kind { Io, Schema, ShapeMismatch, Range };

  BundleError(Kind kind, const std::string& detail);

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Writes `t` atomically (temp file + rename).
void write_tensor(const std::filesystem::path& path, const Tensor& t);

/// Encodes `t` into the TIDT byte layout.
std::string encode_tensor(const Tensor& t);

Tensor read_tensor(const std::filesystem::path& path);

/// One FPN level of detector output for a single model.
struct LevelBundle {
  int level_id = 0;
  Tensor feature;       // C x H x W
  Tensor class_scores;  // H x W x K, in [0, 1]
  Tensor pred_boxes;    // H x W x 4, corner form in feature cells

  std::size_t height() const { return feature.dim(1); }
  std::size_t width() const { return feature.dim(2); }
  std::size_t channels() const { return feature.dim(0); }
  std::size_t num_classes() const { return class_scores.dim(2); }
};

/// Checks the cross-tensor invariants of a bundle. Throws BundleError.
void validate_bundle(const LevelBundle& bundle);

/// Loads a bundle from its JSON sidecar; tensor paths resolve relative to
/// the sidecar's directory.
LevelBundle load_bundle(const std::filesystem::path& meta_path);

/// Writes the three tensors next to `meta_path` as `<stem>_feature.tidt`
/// etc. and the sidecar itself.
void write_bundle(const std::filesystem::path& meta_path, const LevelBundle& bundle);

/// Ground truth file: JSON array of {"box": [x1,y1,x2,y2], "label": int}.
GroundTruth load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);

/// Writes `contents` to `path` through a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace tid
