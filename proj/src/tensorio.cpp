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

#include "tid/tensorio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tid {
namespace fs = std::filesystem;

namespace {

const char* kind_name(TensorIoError::Kind kind) {
  switch (kind) {
    case TensorIoError::Kind::Io: return "I/O error";
    case TensorIoError::Kind::BadMagic: return "bad magic";
    case TensorIoError::Kind::BadVersion: return "unsupported version";
    case TensorIoError::Kind::BadHeader: return "bad header";
    case TensorIoError::Kind::Truncated: return "truncated payload";
    case TensorIoError::Kind::TrailingBytes: return "trailing bytes";
    case TensorIoError::Kind::NonFinite: return "non-finite element";
  }
  return "error";
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorIoError(TensorIoError::Kind::Io, path, "cannot open for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw TensorIoError(TensorIoError::Kind::Io, path, "read failed");
  return bytes;
}

}  // namespace

TensorIoError::TensorIoError(Kind kind, const fs::path& path, const std::string& detail)
    : std::runtime_error(path.string() + ": " + kind_name(kind) + ": " + detail),
      kind_(kind),
      path_(path) {}

BundleError::BundleError(Kind kind, const std::string& detail)
    : std::runtime_error(detail), kind_(kind) {}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw TensorIoError(TensorIoError::Kind::Io, path, "cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw TensorIoError(TensorIoError::Kind::Io, path, "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw TensorIoError(TensorIoError::Kind::Io, path, "rename failed");
  }
}

std::string encode_tensor(const Tensor& t) {
  std::string out;
  out.reserve(12 + 4 * t.rank() + 4 * t.size());
  out.append(kTensorMagic, 4);
  put_u32(out, kTensorFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

void write_tensor(const fs::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

Tensor read_tensor(const fs::path& path) {
  using Kind = TensorIoError::Kind;
  const std::string bytes = read_all(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 4 || std::memcmp(p, kTensorMagic, 4) != 0) {
    throw TensorIoError(Kind::BadMagic, path, "expected \"TIDT\"");
  }
  if (n < 12) throw TensorIoError(Kind::Truncated, path, "header shorter than 12 bytes");
  const std::uint32_t version = get_u32(p + 4);
  if (version != kTensorFormatVersion) {
    throw TensorIoError(Kind::BadVersion, path, "version " + std::to_string(version));
  }
  const std::uint32_t ndim = get_u32(p + 8);
  if (ndim < 1 || ndim > 4) {
    throw TensorIoError(Kind::BadHeader, path, "axis count " + std::to_string(ndim));
  }
  const std::size_t header = 12 + 4 * static_cast<std::size_t>(ndim);
  if (n < header) throw TensorIoError(Kind::Truncated, path, "extents cut short");

  Shape dims(ndim);
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    dims[i] = get_u32(p + 12 + 4 * i);
    if (dims[i] == 0) throw TensorIoError(Kind::BadHeader, path, "zero extent");
    count *= dims[i];
  }
  const std::size_t payload = n - header;
  if (payload < 4 * count) {
    throw TensorIoError(Kind::Truncated, path,
                        "expected " + std::to_string(count) + " floats, found " +
                            std::to_string(payload / 4));
  }
  if (payload > 4 * count) {
    throw TensorIoError(Kind::TrailingBytes, path,
                        std::to_string(payload - 4 * count) + " bytes after payload");
  }

  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(p + header + 4 * i));
    if (!std::isfinite(data[i])) {
      throw TensorIoError(Kind::NonFinite, path, "element " + std::to_string(i));
    }
  }
  return Tensor(std::move(dims), std::move(data));
}

void validate_bundle(const LevelBundle& b) {
  using Kind = BundleError::Kind;
  if (b.level_id < 0) throw BundleError(Kind::Range, "level_id must be >= 0");
  if (b.feature.rank() != 3) {
    throw BundleError(Kind::ShapeMismatch, "feature must be C x H x W, got " +
                                               shape_to_string(b.feature.dims()));
  }
  if (b.class_scores.rank() != 3) {
    throw BundleError(Kind::ShapeMismatch, "class_scores must be H x W x K, got " +
                                               shape_to_string(b.class_scores.dims()));
  }
  if (b.pred_boxes.rank() != 3 || b.pred_boxes.dim(2) != 4) {
    throw BundleError(Kind::ShapeMismatch, "pred_boxes must be H x W x 4, got " +
                                               shape_to_string(b.pred_boxes.dims()));
  }
  const std::size_t h = b.feature.dim(1);
  const std::size_t w = b.feature.dim(2);
  if (b.class_scores.dim(0) != h || b.class_scores.dim(1) != w) {
    throw BundleError(Kind::ShapeMismatch, "class_scores " +
                                               shape_to_string(b.class_scores.dims()) +
                                               " disagrees with feature " +
                                               shape_to_string(b.feature.dims()));
  }
  if (b.pred_boxes.dim(0) != h || b.pred_boxes.dim(1) != w) {
    throw BundleError(Kind::ShapeMismatch, "pred_boxes " + shape_to_string(b.pred_boxes.dims()) +
                                               " disagrees with feature " +
                                               shape_to_string(b.feature.dims()));
  }
  for (std::size_t i = 0; i < b.class_scores.size(); ++i) {
    const float s = b.class_scores[i];
    if (!(s >= 0.0f && s <= 1.0f)) {
      throw BundleError(Kind::Range, "class score " + std::to_string(s) + " at flat index " +
                                         std::to_string(i) + " outside [0,1]");
    }
  }
  for (std::size_t i = 0; i < b.pred_boxes.size(); i += 4) {
    if (!(b.pred_boxes[i] <= b.pred_boxes[i + 2] && b.pred_boxes[i + 1] <= b.pred_boxes[i + 3])) {
      throw BundleError(Kind::Range,
                        "predicted box at point " + std::to_string(i / 4) + " has x1>x2 or y1>y2");
    }
  }
}

namespace {

nlohmann::json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw BundleError(BundleError::Kind::Io, path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw BundleError(BundleError::Kind::Schema, path.string() + ": " + e.what());
  }
}

}  // namespace

LevelBundle load_bundle(const fs::path& meta_path) {
  using Kind = BundleError::Kind;
  const nlohmann::json doc = parse_json_file(meta_path);
  static const std::set<std::string> kKeys = {"level_id", "feature", "class_scores",
                                              "pred_boxes"};
  if (!doc.is_object()) throw BundleError(Kind::Schema, meta_path.string() + ": not an object");
  std::set<std::string> keys;
  for (const auto& [k, _] : doc.items()) keys.insert(k);
  if (keys != kKeys) {
    throw BundleError(Kind::Schema, meta_path.string() +
                                        ": keys must be exactly level_id, feature, "
                                        "class_scores, pred_boxes");
  }
  if (!doc["level_id"].is_number_integer()) {
    throw BundleError(Kind::Schema, meta_path.string() + ": level_id must be an integer");
  }
  const fs::path base = meta_path.parent_path();
  auto tensor_at = [&](const char* key) {
    if (!doc[key].is_string()) {
      throw BundleError(Kind::Schema, meta_path.string() + ": " + key + " must be a path");
    }
    return read_tensor(base / doc[key].get<std::string>());
  };

  LevelBundle b;
  b.level_id = doc["level_id"].get<int>();
  b.feature = tensor_at("feature");
  b.class_scores = tensor_at("class_scores");
  b.pred_boxes = tensor_at("pred_boxes");
  validate_bundle(b);
  return b;
}

void write_bundle(const fs::path& meta_path, const LevelBundle& bundle) {
  validate_bundle(bundle);
  const std::string stem = meta_path.stem().string();
  const fs::path dir = meta_path.parent_path();
  const std::string feature = stem + "_feature.tidt";
  const std::string scores = stem + "_class_scores.tidt";
  const std::string boxes = stem + "_pred_boxes.tidt";
  write_tensor(dir / feature, bundle.feature);
  write_tensor(dir / scores, bundle.class_scores);
  write_tensor(dir / boxes, bundle.pred_boxes);
  nlohmann::json doc = {{"level_id", bundle.level_id},
                        {"feature", feature},
                        {"class_scores", scores},
                        {"pred_boxes", boxes}};
  write_file_atomic(meta_path, doc.dump(2) + "\n");
}

GroundTruth load_ground_truth(const fs::path& path) {
  using Kind = BundleError::Kind;
  const nlohmann::json doc = parse_json_file(path);
  if (!doc.is_array()) throw BundleError(Kind::Schema, path.string() + ": expected a JSON array");
  GroundTruth gt;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = path.string() + ": entry " + std::to_string(i);
    if (!item.is_object() || !item.contains("box") || !item.contains("label")) {
      throw BundleError(Kind::Schema, where + ": expected {\"box\": [...], \"label\": int}");
    }
    const auto& box = item["box"];
    if (!box.is_array() || box.size() != 4 ||
        !std::all_of(box.begin(), box.end(), [](const auto& v) { return v.is_number(); })) {
      throw BundleError(Kind::Schema, where + ": box must be four numbers");
    }
    if (!item["label"].is_number_integer()) {
      throw BundleError(Kind::Schema, where + ": label must be an integer");
    }
    gt.boxes.push_back({box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                        box[3].get<double>()});
    gt.labels.push_back(item["label"].get<int>());
  }
  try {
    validate_ground_truth(gt);
  } catch (const std::invalid_argument& e) {
    throw BundleError(Kind::Range, path.string() + ": " + e.what());
  }
  return gt;
}

void write_ground_truth(const fs::path& path, const GroundTruth& gt) {
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const BBox& b = gt.boxes[i];
    doc.push_back({{"box", {b.x1, b.y1, b.x2, b.y2}}, {"label", gt.labels[i]}});
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace tid
