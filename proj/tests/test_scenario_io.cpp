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

#include <cstdlib>
#include <filesystem>

#include "core/run_io.hpp"
#include "core/scenario_io.hpp"
#include "scenario_fixtures.hpp"

using namespace cranempc;

namespace {

// A complete document built from the fixture spec, then edited per test.
nlohmann::ordered_json fixture_doc() {
  return scenario_to_json(test::small_scenario());
}

ScenarioLoadResult load_doc(const nlohmann::ordered_json& doc) {
  return load_scenario_string(doc.dump());
}

}  // namespace

TEST_CASE("a minimal scenario inherits the published controller defaults") {
  nlohmann::ordered_json doc = fixture_doc();
  doc.erase("mpc");
  const ScenarioLoadResult result = load_doc(doc);
  REQUIRE(result.ok());
  const MpcConfig& mpc = result.scenario->mpc;
  CHECK(mpc.horizon == 40);
  CHECK(mpc.ts == 0.1);
  CHECK(mpc.collision_margin == 0.2);
  CHECK(mpc.w_track == 1.0);
  CHECK(mpc.w_damp == 0.1);
  CHECK(mpc.w_accl == 0.1);
  CHECK(mpc.w_prog == 0.2);
  CHECK(mpc.w_vel == 0.01);
  CHECK(mpc.budget_ms == 70.0);
  CHECK(MpcConfig::penalty_mu(mpc.collision_margin) == doctest::Approx(50.0));
}

TEST_CASE("scenario documents round-trip through JSON") {
  const ScenarioSpec spec = test::small_scenario();
  const ScenarioLoadResult result = load_scenario_string(scenario_to_json(spec).dump());
  REQUIRE(result.ok());
  const ScenarioSpec& back = *result.scenario;
  CHECK(back.name == spec.name);
  CHECK(back.mpc.horizon == spec.mpc.horizon);
  CHECK(back.mpc.iteration_cap == spec.mpc.iteration_cap);
  CHECK((back.initial_q - spec.initial_q).norm() == 0.0);
  CHECK(back.waypoints.size() == spec.waypoints.size());
  CHECK((back.waypoints[0] - spec.waypoints[0]).norm() == 0.0);
  CHECK(back.grid.dims == spec.grid.dims);
  CHECK((back.grid.origin - spec.grid.origin).norm() == 0.0);
  CHECK(back.crane.q_min == spec.crane.q_min);
  CHECK(back.crane.links[6].mass == spec.crane.links[6].mass);
  CHECK(back.duration == spec.duration);
}

TEST_CASE("the mpc config round-trips through its JSON form") {
  MpcConfig config;
  config.horizon = 25;
  config.w_damp = 0.17;
  config.collision_enabled = false;
  nlohmann::ordered_json doc = fixture_doc();
  doc["mpc"] = mpc_config_to_json(config);
  const ScenarioLoadResult result = load_doc(doc);
  REQUIRE(result.scenario.has_value());
  CHECK(result.scenario->mpc.horizon == 25);
  CHECK(result.scenario->mpc.w_damp == 0.17);
  CHECK_FALSE(result.scenario->mpc.collision_enabled);
}

TEST_CASE("unknown keys are rejected with their path") {
  nlohmann::ordered_json doc = fixture_doc();
  doc["mpc"]["horizno"] = 40;
  const ScenarioLoadResult result = load_doc(doc);
  CHECK_FALSE(result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.find("$.mpc") != std::string::npos && d.find("horizno") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("type errors name the offending field") {
  nlohmann::ordered_json doc = fixture_doc();
  doc["run"]["duration"] = "ten";
  const ScenarioLoadResult result = load_doc(doc);
  CHECK_FALSE(result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.find("$.run.duration") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("syntax errors report the line") {
  const ScenarioLoadResult result = load_scenario_string("{\n  \"name\": \"x\",\n  !\n}");
  CHECK_FALSE(result.scenario.has_value());
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].find("line 3") != std::string::npos);
}

TEST_CASE("control period must divide into plant steps") {
  nlohmann::ordered_json doc = fixture_doc();
  doc["run"]["control_period"] = 0.1;
  doc["run"]["plant_dt"] = 0.0003;
  const ScenarioLoadResult result = load_doc(doc);
  CHECK_FALSE(result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.find("control_period") != std::string::npos &&
        d.find("multiple") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("obstacle events after the run duration are named") {
  nlohmann::ordered_json doc = fixture_doc();
  doc["environment"]["obstacles"].push_back(
      {{"time", 99.0}, {"action", "insert"}, {"min", {0, 0, 0}}, {"max", {1, 1, 1}}});
  const ScenarioLoadResult result = load_doc(doc);
  CHECK_FALSE(result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.find("obstacles[0]") != std::string::npos &&
        d.find("duration") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("grids that undercover the workspace are rejected") {
  nlohmann::ordered_json doc = fixture_doc();
  doc["environment"]["grid"]["dims"] = {10, 10, 10};
  const ScenarioLoadResult result = load_doc(doc);
  CHECK_FALSE(result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.find("does not cover") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("missing files and missing sections produce diagnostics") {
  CHECK_FALSE(load_scenario_file("/nonexistent/scenario.json").ok());
  const ScenarioLoadResult result = load_scenario_string("{\"name\": \"x\"}");
  CHECK_FALSE(result.ok());
  bool ref = false, env = false, run = false;
  for (const auto& d : result.diagnostics) {
    ref |= d.find("$.reference") != std::string::npos;
    env |= d.find("$.environment") != std::string::npos;
    run |= d.find("$.run") != std::string::npos;
  }
  CHECK(ref);
  CHECK(env);
  CHECK(run);
}

TEST_CASE("bundled scenarios validate and parse") {
  const char* dir_env = std::getenv("CRANEMPC_SCENARIO_DIR");
  const std::string dir = dir_env ? dir_env : "scenarios";
  REQUIRE(std::filesystem::is_directory(dir));
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const ScenarioLoadResult result = load_scenario_file(entry.path().string());
    INFO(entry.path().string());
    for (const auto& d : result.diagnostics) INFO(d);
    CHECK(result.ok());
    ++count;
  }
  CHECK(count >= 13);
}

TEST_CASE("run CSV serialization is stable and report pairs on/off runs") {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "cranempc_report_test";
  fs::remove_all(base);
  fs::create_directories(base / "a_on");
  fs::create_directories(base / "a_off");

  ScenarioSpec spec = test::small_scenario(0.5);
  spec.name = "pair_demo_on";
  RunLog log = run_closed_loop(spec);
  Metrics m = metrics(log, spec);
  write_metrics_json(m, log, spec, (base / "a_on" / "metrics.json").string());

  spec.name = "pair_demo_off";
  spec.mpc.collision_enabled = false;
  log = run_closed_loop(spec);
  m = metrics(log, spec);
  write_metrics_json(m, log, spec, (base / "a_off" / "metrics.json").string());

  const Report report =
      build_report({(base / "a_on").string(), (base / "a_off").string()});
  REQUIRE(report.json.contains("pairs"));
  REQUIRE(report.json["pairs"].size() == 1);
  CHECK(report.json["pairs"][0]["stem"] == "pair_demo");
  CHECK(report.json["pairs"][0].contains("delta_min_sd_on_minus_off"));
  CHECK(report.csv.find("delta_min_sd_on_minus_off") != std::string::npos);

  CHECK_THROWS(build_report({}));
  CHECK_THROWS(build_report({(base / "missing").string()}));
  fs::remove_all(base);
}
