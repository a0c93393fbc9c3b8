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

#include "tid/tensor.hpp"

namespace tid {

std::string shape_to_string(const Shape& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

TensorD to_double(const Tensor& t) {
  std::vector<double> out(t.data().begin(), t.data().end());
  return TensorD(t.dims(), std::move(out));
}

Tensor to_float(const TensorD& t) {
  std::vector<float> out(t.size());
  std::transform(t.data().begin(), t.data().end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return Tensor(t.dims(), std::move(out));
}

TensorD hadamard(const TensorD& a, const TensorD& b, const char* what) {
  require_same_shape(a, b, what);
  TensorD out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace tid
