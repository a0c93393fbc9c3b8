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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tid/pipeline.hpp"

// Synthetic scenes and a gradient-descent run of the distillation objective
// on the raw student feature map.
namespace tid::harness {

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 8;
  std::size_t num_classes = 4;
  std::size_t n_objects = 3;
  double teacher_noise = 0.05;
  double student_noise = 0.3;
  double min_object_size = 3.0;
  double max_object_size = 8.0;

  void validate() const;
};

struct Scene {
  LevelBundle teacher;
  LevelBundle student;
  GroundTruth gt;
};

class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scene generate_scene(const SceneSpec& spec);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, double loss);
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// The mask the objective uses in `mode` plus the tier labels used for
/// the loss breakdown.
struct ObjectiveMask {
  TensorD mask;
  sfdm::TierMap tiers;
};

ObjectiveMask objective_mask(const TidMaps& maps, const GroundTruth& gt, const EngineConfig& cfg,
                             AblationMode mode);

/// Largest step for which plain gradient descent on the masked quadratic
/// cannot increase any residual: C*H*W / (2 * max mask). An all-zero mask
/// is treated as a unit mask.
double safe_step_size(const TensorD& mask, std::size_t channels);

struct SimulationReport {
  AblationMode mode = AblationMode::Full;
  std::size_t steps = 0;
  double step_size = 0.0;
  SceneSpec spec;
  EngineConfig config;

  std::vector<double> loss_curve;
  // Mean squared teacher-student residual over the Full-mode tiers.
  std::vector<double> residual_high;
  std::vector<double> residual_med;
  std::vector<double> residual_low;
  std::size_t tier_population[3] = {0, 0, 0};

  TensorD final_value;  // v
  TensorD final_mask;   // mask actually optimized
};

/// `step_size` defaults to safe_step_size() of the Full-mode mask for the
/// scene, so every mode shares the same step budget.
SimulationReport run_simulation(const SceneSpec& spec, AblationMode mode, std::size_t steps,
                                std::optional<double> step_size = {},
                                const EngineConfig& cfg = {});

nlohmann::json report_to_json(const SimulationReport& report);
nlohmann::json spec_to_json(const SceneSpec& spec);
nlohmann::json config_to_json(const EngineConfig& cfg);

}  // namespace tid::harness
