// Copyright 2026 The cranempc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/sim.hpp"

namespace cranempc {

// Scenario files are JSON documents, one scenario per file. Parsing is
// strict: unknown keys, wrong types and malformed values all produce
// diagnostics naming the offending field (or the line for syntax errors).

struct ScenarioLoadResult {
  std::optional<ScenarioSpec> scenario;  // present when the document parsed
  std::vector<std::string> diagnostics;  // parse and validation findings
  bool ok() const { return scenario.has_value() && diagnostics.empty(); }
};

ScenarioLoadResult load_scenario_string(const std::string& text);
ScenarioLoadResult load_scenario_file(const std::string& path);

nlohmann::ordered_json scenario_to_json(const ScenarioSpec& spec);
nlohmann::ordered_json mpc_config_to_json(const MpcConfig& config);

void save_scenario_file(const ScenarioSpec& spec, const std::string& path);

}  // namespace cranempc
