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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "tid/pipeline.hpp"
#include "tid/sfdm.hpp"
#include "tid/tensorio.hpp"

namespace py = pybind11;

namespace {

// c_style | forcecast: conforming buffers pass through, everything else is
// copied into a fresh float32 C-contiguous array.
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

tid::Tensor to_tensor(const FloatArray& a, const char* what) {
  if (a.ndim() < 1 || a.ndim() > 4) {
    throw tid::ShapeError(std::string(what) + ": expected 1 to 4 dimensions, got " +
                          std::to_string(a.ndim()));
  }
  tid::Shape dims;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) dims.push_back(static_cast<std::size_t>(a.shape(i)));
  return tid::Tensor(dims, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const tid::Tensor& t) {
  std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
  py::array_t<float> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

tid::LevelBundle to_bundle(const py::dict& d, const char* what) {
  for (const char* key : {"feature", "class_scores", "pred_boxes"}) {
    if (!d.contains(key)) throw tid::BundleError(tid::BundleError::Kind::Schema, std::string(what) + ": missing '" + key + "'");
  }
  tid::LevelBundle b;
  b.feature = to_tensor(d["feature"].cast<FloatArray>(), "feature");
  b.class_scores = to_tensor(d["class_scores"].cast<FloatArray>(), "class_scores");
  b.pred_boxes = to_tensor(d["pred_boxes"].cast<FloatArray>(), "pred_boxes");
  return b;
}

// Same entries as gt.json: [{"box": [x1, y1, x2, y2], "label": k}, ...]
tid::GroundTruth to_ground_truth(const py::sequence& seq) {
  tid::GroundTruth gt;
  for (const py::handle item : seq) {
    const auto entry = item.cast<py::dict>();
    const auto box = entry["box"].cast<std::vector<double>>();
    if (box.size() != 4) throw std::invalid_argument("gt box must have 4 coordinates");
    gt.boxes.push_back({box[0], box[1], box[2], box[3]});
    gt.labels.push_back(entry["label"].cast<int>());
  }
  tid::validate_ground_truth(gt);
  return gt;
}

tid::EngineConfig to_config(const py::dict& d) {
  tid::EngineConfig cfg;
  for (const auto& [k, v] : d) {
    std::string key = k.cast<std::string>();
    std::replace(key.begin(), key.end(), '-', '_');
    const double x = v.cast<double>();
    if (key == "cls_top_fraction") {
      cfg.diem.cls_top_fraction = x;
    } else if (key == "gamma_key") {
      cfg.ldam.gamma_key = x;
    } else if (key == "gamma_weak") {
      cfg.ldam.gamma_weak = x;
    } else if (key == "thrd_pos") {
      cfg.diem.thrd_pos = x;
    } else if (key == "thrd_neg") {
      cfg.diem.thrd_neg = x;
    } else {
      throw std::invalid_argument("unknown config key '" + k.cast<std::string>() + "'");
    }
  }
  cfg.validate();
  return cfg;
}

py::tuple value_map(const py::dict& teacher, const py::dict& student, const py::sequence& gt,
                    const py::dict& config) {
  const tid::LevelBundle t = to_bundle(teacher, "teacher");
  const tid::LevelBundle s = to_bundle(student, "student");
  const tid::GroundTruth g = to_ground_truth(gt);
  const tid::EngineConfig cfg = to_config(config);
  tid::Tensor v, mask;
  {
    py::gil_scoped_release release;
    tid::validate_bundle(t);
    tid::validate_bundle(s);
    const tid::TidMaps maps = tid::compute_maps(t, s, g, cfg);
    v = tid::to_float(maps.values.v);
    mask = tid::to_float(maps.values.mask);
  }
  return py::make_tuple(to_array(v), to_array(mask));
}

py::tuple loss_and_grad(const FloatArray& teacher, const FloatArray& student, const FloatArray& mask) {
  const tid::TensorD t = tid::to_double(to_tensor(teacher, "teacher_feature"));
  const tid::TensorD s = tid::to_double(to_tensor(student, "student_feature"));
  const tid::TensorD m = tid::to_double(to_tensor(mask, "mask"));
  double total = 0.0;
  tid::Tensor grad;
  {
    py::gil_scoped_release release;
    if (t.rank() != 3) throw tid::ShapeError("teacher feature must be C x H x W");
    const tid::TensorD aligned = tid::sfdm::align(s, t.dims(), std::nullopt);
    const tid::sfdm::SfdmConfig cfg;
    const tid::sfdm::LossReport r = tid::sfdm::distill_loss(t, aligned, m, tid::sfdm::infer_tiers(m, cfg));
    total = r.total;
    grad = tid::to_float(r.grad_student);
  }
  return py::make_tuple(total, to_array(grad));
}

}  // namespace

PYBIND11_MODULE(_tid, m) {
  m.doc() = "In-process access to the TID value map and masked imitation loss.";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const tid::BundleError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("tid_value_map", &value_map, py::arg("teacher_outputs"), py::arg("student_outputs"),
        py::arg("gt"), py::arg("config") = py::dict(),
        "Value map v and tier mask (both H x W float32) for a teacher/student pair.");
  m.def("tid_loss_and_grad", &loss_and_grad, py::arg("teacher_feature"), py::arg("student_feature"),
        py::arg("mask"), "Masked imitation loss and its gradient w.r.t. the student feature.");
  m.attr("__version__") = std::string(tid::kVersion);
}
