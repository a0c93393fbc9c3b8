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

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tid {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& dims);

/// Raised when two arrays that must agree on extents do not.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major array with 1 to 4 axes.
///
/// `Tensor` (32-bit) is the interchange type: everything read from or
/// written to disk goes through it. `TensorD` carries the score, value and
/// feature arithmetic so that thresholds and loss sums are evaluated in
/// double precision.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape dims, T fill = T{0}) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_.assign(shape_size(dims_), fill);
  }

  BasicTensor(Shape dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != shape_size(dims_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(dims_));
    }
  }

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // 2-D access (H x W).
  T& at(std::size_t y, std::size_t x) { return data_[y * dims_[1] + x]; }
  const T& at(std::size_t y, std::size_t x) const { return data_[y * dims_[1] + x]; }

  // 3-D access (A x B x C).
  T& at(std::size_t a, std::size_t b, std::size_t c) {
    return data_[(a * dims_[1] + b) * dims_[2] + c];
  }
  const T& at(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * dims_[1] + b) * dims_[2] + c];
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  static void check_dims(const Shape& dims) {
    if (dims.empty() || dims.size() > 4) {
      throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims.size()));
    }
    if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; })) {
      throw ShapeError("tensor extents must be positive: " + shape_to_string(dims));
    }
  }

  Shape dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Widening is exact.
TensorD to_double(const Tensor& t);

/// Narrowing rounds to nearest 32-bit value.
Tensor to_float(const TensorD& t);

/// Throws ShapeError unless both tensors have identical extents.
template <typename A, typename B>
void require_same_shape(const BasicTensor<A>& a, const BasicTensor<B>& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_to_string(a.dims()) +
                     " vs " + shape_to_string(b.dims()));
  }
}

/// Elementwise product of two equally shaped maps.
TensorD hadamard(const TensorD& a, const TensorD& b, const char* what = "hadamard");

}  // namespace tid
