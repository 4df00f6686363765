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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "core/scenario_io.hpp"
#include "cranempc/cranempc.h"
#include "scenario_fixtures.hpp"

namespace fs = std::filesystem;

namespace {

std::string fixture_scenario_text(const std::string& name, double duration = 0.5) {
  cranempc::ScenarioSpec spec = cranempc::test::small_scenario(duration);
  spec.name = name;
  return cranempc::scenario_to_json(spec).dump(2);
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(cranempc_version()) == "0.1.0");
  CHECK(std::string(cranempc_status_name(CRANEMPC_OK)) == "ok");
  CHECK(std::string(cranempc_status_name(CRANEMPC_ERR_VALIDATION)) == "validation failed");
  CHECK(cranempc_last_error() != nullptr);
}

TEST_CASE("null arguments are rejected") {
  CHECK(cranempc_scenario_load(nullptr, nullptr) == CRANEMPC_ERR_INVALID_ARGUMENT);
  cranempc_scenario* scenario = nullptr;
  CHECK(cranempc_scenario_load(nullptr, &scenario) == CRANEMPC_ERR_INVALID_ARGUMENT);
  CHECK(cranempc_run_scenario(nullptr, nullptr, nullptr) ==
        CRANEMPC_ERR_INVALID_ARGUMENT);
  CHECK(cranempc_report(nullptr, 0, nullptr, nullptr) == CRANEMPC_ERR_INVALID_ARGUMENT);
  cranempc_scenario_free(nullptr);
  cranempc_run_free(nullptr);
}

TEST_CASE("loading a missing file reports a validation error with a message") {
  cranempc_scenario* scenario = nullptr;
  CHECK(cranempc_scenario_load("/nonexistent/file.json", &scenario) ==
        CRANEMPC_ERR_VALIDATION);
  CHECK(scenario == nullptr);
  CHECK(std::string(cranempc_last_error()).find("/nonexistent/file.json") !=
        std::string::npos);
}

TEST_CASE("string loading catches unknown keys") {
  cranempc_scenario* scenario = nullptr;
  std::string text = fixture_scenario_text("capi_demo");
  auto doc = nlohmann::json::parse(text);
  doc["mpc"]["bogus_key"] = 1;
  CHECK(cranempc_scenario_load_string(doc.dump().c_str(), &scenario) ==
        CRANEMPC_ERR_VALIDATION);
  CHECK(scenario == nullptr);
  CHECK(std::string(cranempc_last_error()).find("bogus_key") != std::string::npos);
}

TEST_CASE("validate_file writes diagnostics into the caller buffer") {
  const fs::path path = fs::temp_directory_path() / "cranempc_capi_invalid.json";
  {
    std::ofstream out(path);
    out << "{\"name\": 3}";
  }
  char buf[512];
  size_t len = 0;
  CHECK(cranempc_scenario_validate_file(path.string().c_str(), buf, sizeof(buf), &len) ==
        CRANEMPC_ERR_VALIDATION);
  CHECK(len > 0);
  CHECK(std::strlen(buf) == std::min(len, sizeof(buf) - 1));

  // Tiny buffer: truncated but still terminated.
  char tiny[8];
  CHECK(cranempc_scenario_validate_file(path.string().c_str(), tiny, sizeof(tiny), &len) ==
        CRANEMPC_ERR_VALIDATION);
  CHECK(std::strlen(tiny) == 7);
  fs::remove(path);
}

TEST_CASE("load, inspect, run, serialize and report through the C surface") {
  const std::string text = fixture_scenario_text("capi_run_on");
  cranempc_scenario* scenario = nullptr;
  REQUIRE(cranempc_scenario_load_string(text.c_str(), &scenario) == CRANEMPC_OK);
  CHECK(std::string(cranempc_scenario_name(scenario)) == "capi_run_on");
  CHECK(cranempc_scenario_duration(scenario) == doctest::Approx(0.5));
  CHECK(cranempc_scenario_expects_collision(scenario) == 0);

  cranempc_run_options options;
  cranempc_run_options_init(&options);
  CHECK(options.iteration_cap == 0);
  options.iteration_cap = 2;

  cranempc_run* run = nullptr;
  REQUIRE(cranempc_run_scenario(scenario, &options, &run) == CRANEMPC_OK);
  cranempc_metrics m;
  REQUIRE(cranempc_run_metrics(run, &m) == CRANEMPC_OK);
  CHECK(m.steps == 5);
  CHECK(m.solver_failed == 0);
  CHECK(m.collided == 0);
  CHECK(m.min_continuous_sd_m > 0.0);
  CHECK(m.pendulum_period_s > 0.5);

  const fs::path base = fs::temp_directory_path() / "cranempc_capi_runs";
  fs::remove_all(base);
  fs::create_directories(base / "on");
  fs::create_directories(base / "off");
  REQUIRE(cranempc_run_write_csv(run, (base / "on" / "run_log.csv").string().c_str()) ==
          CRANEMPC_OK);
  REQUIRE(cranempc_run_write_metrics_json(
              run, (base / "on" / "metrics.json").string().c_str()) == CRANEMPC_OK);
  cranempc_run_free(run);
  cranempc_scenario_free(scenario);

  // Second run under the paired _off name for the report.
  const std::string text_off = fixture_scenario_text("capi_run_off");
  REQUIRE(cranempc_scenario_load_string(text_off.c_str(), &scenario) == CRANEMPC_OK);
  REQUIRE(cranempc_run_scenario(scenario, &options, &run) == CRANEMPC_OK);
  REQUIRE(cranempc_run_write_metrics_json(
              run, (base / "off" / "metrics.json").string().c_str()) == CRANEMPC_OK);
  cranempc_run_free(run);
  cranempc_scenario_free(scenario);

  const std::string on_dir = (base / "on").string();
  const std::string off_dir = (base / "off").string();
  const char* dirs[2] = {on_dir.c_str(), off_dir.c_str()};
  const fs::path report_csv = base / "report.csv";
  const fs::path report_json = base / "report.json";
  REQUIRE(cranempc_report(dirs, 2, report_csv.string().c_str(),
                          report_json.string().c_str()) == CRANEMPC_OK);

  std::ifstream json_in(report_json);
  REQUIRE(json_in.good());
  nlohmann::json report;
  json_in >> report;
  REQUIRE(report.contains("runs"));
  CHECK(report["runs"].size() == 2);
  REQUIRE(report.contains("pairs"));
  REQUIRE(report["pairs"].size() == 1);
  CHECK(report["pairs"][0]["stem"] == "capi_run");

  std::ifstream csv_in(base / "on" / "run_log.csv");
  std::string header;
  std::getline(csv_in, header);
  CHECK(header.rfind("t,q1,q2", 0) == 0);
  fs::remove_all(base);
}

TEST_CASE("report with a missing metrics file is an io error") {
  const fs::path base = fs::temp_directory_path() / "cranempc_capi_empty";
  fs::create_directories(base);
  const std::string dir = base.string();
  const char* dirs[1] = {dir.c_str()};
  CHECK(cranempc_report(dirs, 1, nullptr, nullptr) == CRANEMPC_ERR_IO);
  CHECK(std::string(cranempc_last_error()).find("metrics.json") != std::string::npos);
  fs::remove_all(base);
}
