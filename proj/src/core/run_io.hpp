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

#include <string>
#include <vector>

#include <json.hpp>

#include "core/sim.hpp"

namespace cranempc {

// Per-step run log as CSV; the column order is documented in the README and
// frozen. Output is deterministic for identical logs.
std::string run_log_to_csv(const RunLog& log);
void write_run_csv(const RunLog& log, const std::string& path);

nlohmann::ordered_json metrics_to_json(const Metrics& m, const RunLog& log,
                                       const ScenarioSpec& scenario);
void write_metrics_json(const Metrics& m, const RunLog& log,
                        const ScenarioSpec& scenario, const std::string& path);

// Aggregated comparison across run directories (each containing a
// metrics.json). Runs whose scenario names differ only by an _on/_off suffix
// are paired and their min-sd delta reported.
struct Report {
  nlohmann::ordered_json json;
  std::string csv;
};
Report build_report(const std::vector<std::string>& run_dirs);
void write_report(const Report& report, const std::string& csv_path,
                  const std::string& json_path);

}  // namespace cranempc
