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

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tid/harness.hpp"
#include "tid/pipeline.hpp"

namespace tid::cli {

/// Engine knobs and scene parameters as one document.
struct CliConfig {
  EngineConfig engine;
  harness::SceneSpec scene;

  void validate() const {
    engine.validate();
    scene.validate();
  }
};

/// Reads {"diem": {...}, "ldam": {...}, "sfdm": {...}, "scene": {...}};
/// every section and key is optional, unknown keys are rejected.
CliConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const CliConfig& cfg);

/// Entry point shared by the `tid` binary and the tests. Returns the process
/// exit code; diagnostics go to `err`, command output to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tid::cli
