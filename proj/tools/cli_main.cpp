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

// Command-line front end for the cranempc shared library. Consumes only the
// public C API.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cranempc/cranempc.h"

namespace {

// Exit code taxonomy (documented in the README):
//   0 success, 1 usage or I/O error, 2 scenario validation failure,
//   3 solver failure, 4 unexpected collision.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCollision = 4;

int cmd_validate(const std::string& path) {
  std::vector<char> buf(65536);
  size_t len = 0;
  const cranempc_status status =
      cranempc_scenario_validate_file(path.c_str(), buf.data(), buf.size(), &len);
  if (status == CRANEMPC_OK) {
    std::printf("%s: ok\n", path.c_str());
    return kExitOk;
  }
  std::fprintf(stderr, "%s: invalid\n%s", path.c_str(), buf.data());
  return kExitValidation;
}

int cmd_run(const std::string& path, const std::string& out_dir, int iteration_cap,
            unsigned seed) {
  cranempc_scenario* scenario = nullptr;
  if (cranempc_scenario_load(path.c_str(), &scenario) != CRANEMPC_OK) {
    std::fprintf(stderr, "%s: invalid scenario\n%s\n", path.c_str(), cranempc_last_error());
    return kExitValidation;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot create output directory %s: %s\n", out_dir.c_str(),
                 ec.message().c_str());
    cranempc_scenario_free(scenario);
    return kExitUsage;
  }

  cranempc_run_options options;
  cranempc_run_options_init(&options);
  options.iteration_cap = iteration_cap;
  options.seed = seed;

  cranempc_run* run = nullptr;
  const cranempc_status status = cranempc_run_scenario(scenario, &options, &run);
  const bool expects_collision = cranempc_scenario_expects_collision(scenario) != 0;
  cranempc_scenario_free(scenario);

  if (!run) {
    std::fprintf(stderr, "run failed: %s\n", cranempc_last_error());
    return kExitSolver;
  }

  int exit_code = kExitOk;
  const std::string csv_path = out_dir + "/run_log.csv";
  const std::string metrics_path = out_dir + "/metrics.json";
  if (cranempc_run_write_csv(run, csv_path.c_str()) != CRANEMPC_OK ||
      cranempc_run_write_metrics_json(run, metrics_path.c_str()) != CRANEMPC_OK) {
    std::fprintf(stderr, "cannot write outputs: %s\n", cranempc_last_error());
    exit_code = kExitUsage;
  }

  cranempc_metrics m;
  cranempc_run_metrics(run, &m);
  cranempc_run_free(run);

  std::printf("scenario finished: steps=%d min_sd=%.3f m goal_error=%.4f "
              "mean_solve=%.1f ms p95_solve=%.1f ms\n",
              m.steps, m.min_continuous_sd_m, m.final_goal_error, m.mean_solve_ms,
              m.p95_solve_ms);

  if (status == CRANEMPC_ERR_SOLVER || m.solver_failed) {
    std::fprintf(stderr, "solver failure: %s\n", cranempc_last_error());
    return kExitSolver;
  }
  if (m.collided && !expects_collision) {
    std::fprintf(stderr, "collision: min continuous signed distance %.4f m < 0\n",
                 m.min_continuous_sd_m);
    return kExitCollision;
  }
  return exit_code;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot create output directory %s: %s\n", out_dir.c_str(),
                 ec.message().c_str());
    return kExitUsage;
  }
  std::vector<const char*> ptrs;
  ptrs.reserve(dirs.size());
  for (const auto& d : dirs) ptrs.push_back(d.c_str());
  const std::string csv = out_dir + "/report.csv";
  const std::string json = out_dir + "/report.json";
  if (cranempc_report(ptrs.data(), ptrs.size(), csv.c_str(), json.c_str()) !=
      CRANEMPC_OK) {
    std::fprintf(stderr, "report failed: %s\n", cranempc_last_error());
    return kExitUsage;
  }
  std::printf("wrote %s and %s\n", csv.c_str(), json.c_str());
  return kExitOk;
}

int cmd_list_scenarios(const std::string& dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot list %s: %s\n", dir.c_str(), ec.message().c_str());
    return kExitUsage;
  }
  std::vector<std::string> names;
  for (const auto& entry : it)
    if (entry.path().extension() == ".json") names.push_back(entry.path().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    size_t len = 0;
    const bool ok = cranempc_scenario_validate_file(name.c_str(), nullptr, 0, &len) ==
                    CRANEMPC_OK;
    std::printf("%-60s %s\n", name.c_str(), ok ? "ok" : "INVALID");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cranempc: collision-free sway-damping crane MPC simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  int iteration_cap = 0;
  unsigned seed = 0;
  std::vector<std::string> report_dirs;
  std::string scenario_dir = "scenarios";

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  auto* run = app.add_subcommand("run", "Run a scenario and write log + metrics");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (run_log.csv, metrics.json)");
  run->add_option("--iteration-cap", iteration_cap,
                  "Replace the solver wall-clock budget with a fixed iteration "
                  "count (deterministic)");
  run->add_option("--seed", seed, "Recorded in outputs; runs are deterministic");

  auto* report = app.add_subcommand("report", "Aggregate metrics across run directories");
  report->add_option("dirs", report_dirs, "Run directories containing metrics.json")
      ->required();
  report->add_option("--out", out_dir, "Output directory (report.csv, report.json)");

  auto* list = app.add_subcommand("list-scenarios", "List bundled scenario files");
  list->add_option("--dir", scenario_dir, "Directory to scan for *.json scenarios");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return cmd_validate(scenario_path);
  if (run->parsed()) return cmd_run(scenario_path, out_dir, iteration_cap, seed);
  if (report->parsed()) return cmd_report(report_dirs, out_dir);
  if (list->parsed()) return cmd_list_scenarios(scenario_dir);
  return kExitUsage;
}
