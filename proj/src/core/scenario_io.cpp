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

#include "core/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace cranempc {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Reader {
  std::vector<std::string>& diagnostics;

  void error(const std::string& path, const std::string& what) {
    diagnostics.push_back(path + ": " + what);
  }

  void check_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* key : allowed)
        if (it.key() == key) {
          known = true;
          break;
        }
      if (!known) error(path, "unknown key '" + it.key() + "'");
    }
  }

  bool get_double(const json& obj, const char* key, const std::string& path,
                  double* out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(path + "." + key, "expected a number");
      return false;
    }
    *out = v.get<double>();
    return true;
  }

  bool get_int(const json& obj, const char* key, const std::string& path, int* out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(path + "." + key, "expected an integer");
      return false;
    }
    *out = v.get<int>();
    return true;
  }

  bool get_bool(const json& obj, const char* key, const std::string& path, bool* out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      error(path + "." + key, "expected a boolean");
      return false;
    }
    *out = v.get<bool>();
    return true;
  }

  bool get_string(const json& obj, const char* key, const std::string& path,
                  std::string* out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      error(path + "." + key, "expected a string");
      return false;
    }
    *out = v.get<std::string>();
    return true;
  }

  template <typename Vec>
  bool read_fixed_vector(const json& v, const std::string& path, Vec* out) {
    if (!v.is_array() || int(v.size()) != out->size()) {
      error(path, "expected an array of " + std::to_string(out->size()) + " numbers");
      return false;
    }
    for (int i = 0; i < out->size(); ++i) {
      if (!v[size_t(i)].is_number()) {
        error(path + "[" + std::to_string(i) + "]", "expected a number");
        return false;
      }
      (*out)[i] = v[size_t(i)].get<double>();
    }
    return true;
  }

  template <typename Vec>
  void get_fixed_vector(const json& obj, const char* key, const std::string& path,
                        Vec* out) {
    if (!obj.contains(key)) return;
    read_fixed_vector(obj.at(key), path + "." + key, out);
  }
};

Mat3 rpy_to_rotation(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 rotation_to_rpy(const Mat3& rot) {
  const Vec3 angles = rot.eulerAngles(2, 1, 0);
  return Vec3(angles.z(), angles.y(), angles.x());
}

void parse_crane(Reader& r, const json& obj, const std::string& path, CraneParams* crane) {
  r.check_keys(obj, path,
               {"gravity", "actuator_omega", "actuator_damping", "cylinder_area_pos",
                "cylinder_area_neg", "cylinder_gain", "pump_flow_max", "q_min", "q_max",
                "qdd_a_min", "qdd_a_max", "u_max", "telescope_index", "passive_damping",
                "joints", "links"});
  r.get_fixed_vector(obj, "gravity", path, &crane->gravity);
  r.get_fixed_vector(obj, "actuator_omega", path, &crane->actuator_omega);
  r.get_fixed_vector(obj, "actuator_damping", path, &crane->actuator_damping);
  r.get_fixed_vector(obj, "cylinder_area_pos", path, &crane->cylinder_area_pos);
  r.get_fixed_vector(obj, "cylinder_area_neg", path, &crane->cylinder_area_neg);
  r.get_fixed_vector(obj, "cylinder_gain", path, &crane->cylinder_gain);
  r.get_double(obj, "pump_flow_max", path, &crane->pump_flow_max);
  r.get_fixed_vector(obj, "q_min", path, &crane->q_min);
  r.get_fixed_vector(obj, "q_max", path, &crane->q_max);
  r.get_fixed_vector(obj, "qdd_a_min", path, &crane->qdd_a_min);
  r.get_fixed_vector(obj, "qdd_a_max", path, &crane->qdd_a_max);
  r.get_fixed_vector(obj, "u_max", path, &crane->u_max);
  r.get_int(obj, "telescope_index", path, &crane->telescope_index);
  r.get_double(obj, "passive_damping", path, &crane->passive_damping);

  if (obj.contains("joints")) {
    const json& arr = obj.at("joints");
    if (!arr.is_array() || arr.size() != kNumJoints) {
      r.error(path + ".joints", "expected an array of 7 joint descriptors");
    } else {
      for (int i = 0; i < kNumJoints; ++i) {
        const std::string jp = path + ".joints[" + std::to_string(i) + "]";
        const json& jo = arr[size_t(i)];
        if (!jo.is_object()) {
          r.error(jp, "expected an object");
          continue;
        }
        r.check_keys(jo, jp, {"type", "axis", "offset_translation", "offset_rpy"});
        std::string type;
        if (r.get_string(jo, "type", jp, &type)) {
          if (type == "revolute")
            crane->joints[size_t(i)].type = JointType::kRevolute;
          else if (type == "prismatic")
            crane->joints[size_t(i)].type = JointType::kPrismatic;
          else
            r.error(jp + ".type", "expected 'revolute' or 'prismatic'");
        }
        r.get_fixed_vector(jo, "axis", jp, &crane->joints[size_t(i)].axis);
        Vec3 translation = crane->joints[size_t(i)].parent_offset.translation();
        Vec3 rpy = rotation_to_rpy(crane->joints[size_t(i)].parent_offset.linear());
        r.get_fixed_vector(jo, "offset_translation", jp, &translation);
        r.get_fixed_vector(jo, "offset_rpy", jp, &rpy);
        crane->joints[size_t(i)].parent_offset = Transform::Identity();
        crane->joints[size_t(i)].parent_offset.linear() = rpy_to_rotation(rpy);
        crane->joints[size_t(i)].parent_offset.translation() = translation;
      }
    }
  }
  if (obj.contains("links")) {
    const json& arr = obj.at("links");
    if (!arr.is_array() || arr.size() != kNumJoints) {
      r.error(path + ".links", "expected an array of 7 link inertias");
    } else {
      for (int i = 0; i < kNumJoints; ++i) {
        const std::string lp = path + ".links[" + std::to_string(i) + "]";
        const json& lo = arr[size_t(i)];
        if (!lo.is_object()) {
          r.error(lp, "expected an object");
          continue;
        }
        r.check_keys(lo, lp, {"mass", "com", "inertia_diagonal"});
        r.get_double(lo, "mass", lp, &crane->links[size_t(i)].mass);
        r.get_fixed_vector(lo, "com", lp, &crane->links[size_t(i)].com);
        Vec3 diag = crane->links[size_t(i)].inertia.diagonal();
        r.get_fixed_vector(lo, "inertia_diagonal", lp, &diag);
        crane->links[size_t(i)].inertia = diag.asDiagonal().toDenseMatrix();
      }
    }
  }
}

void parse_mpc(Reader& r, const json& obj, const std::string& path, MpcConfig* mpc) {
  r.check_keys(obj, path,
               {"horizon", "ts", "weights", "collision_margin", "limit_margin_frac",
                "flow_margin_frac", "tau_rate_margin", "tau_rate_min", "tau_rate_max",
                "collision_enabled", "flow_enabled", "budget_ms", "iteration_cap",
                "max_iterations"});
  r.get_int(obj, "horizon", path, &mpc->horizon);
  r.get_double(obj, "ts", path, &mpc->ts);
  if (obj.contains("weights")) {
    const json& w = obj.at("weights");
    const std::string wp = path + ".weights";
    if (!w.is_object()) {
      r.error(wp, "expected an object");
    } else {
      r.check_keys(w, wp, {"track", "damp", "vel", "accl", "prog"});
      r.get_double(w, "track", wp, &mpc->w_track);
      r.get_double(w, "damp", wp, &mpc->w_damp);
      r.get_double(w, "vel", wp, &mpc->w_vel);
      r.get_double(w, "accl", wp, &mpc->w_accl);
      r.get_double(w, "prog", wp, &mpc->w_prog);
    }
  }
  r.get_double(obj, "collision_margin", path, &mpc->collision_margin);
  r.get_double(obj, "limit_margin_frac", path, &mpc->limit_margin_frac);
  r.get_double(obj, "flow_margin_frac", path, &mpc->flow_margin_frac);
  r.get_double(obj, "tau_rate_margin", path, &mpc->tau_rate_margin);
  r.get_double(obj, "tau_rate_min", path, &mpc->tau_rate_min);
  r.get_double(obj, "tau_rate_max", path, &mpc->tau_rate_max);
  r.get_bool(obj, "collision_enabled", path, &mpc->collision_enabled);
  r.get_bool(obj, "flow_enabled", path, &mpc->flow_enabled);
  r.get_double(obj, "budget_ms", path, &mpc->budget_ms);
  r.get_int(obj, "iteration_cap", path, &mpc->iteration_cap);
  r.get_int(obj, "max_iterations", path, &mpc->max_iterations);
}

ScenarioLoadResult parse_scenario(const json& doc) {
  ScenarioLoadResult result;
  Reader r{result.diagnostics};
  ScenarioSpec spec;

  if (!doc.is_object()) {
    result.diagnostics.push_back("$: scenario document must be a JSON object");
    return result;
  }
  const std::string root = "$";
  r.check_keys(doc, root,
               {"name", "description", "crane", "mpc", "collision", "reference",
                "environment", "disturbances", "initial", "run"});
  r.get_string(doc, "name", root, &spec.name);
  r.get_string(doc, "description", root, &spec.description);

  if (doc.contains("crane")) {
    if (doc.at("crane").is_object())
      parse_crane(r, doc.at("crane"), "$.crane", &spec.crane);
    else
      r.error("$.crane", "expected an object");
  }
  if (doc.contains("mpc")) {
    if (doc.at("mpc").is_object())
      parse_mpc(r, doc.at("mpc"), "$.mpc", &spec.mpc);
    else
      r.error("$.mpc", "expected an object");
  }
  if (doc.contains("collision")) {
    const json& c = doc.at("collision");
    if (!c.is_object()) {
      r.error("$.collision", "expected an object");
    } else {
      r.check_keys(c, "$.collision",
                   {"sphere_spacing", "boom_radius", "arm_radius", "gripper_radius"});
      r.get_double(c, "sphere_spacing", "$.collision", &spec.collision.sphere_spacing);
      r.get_double(c, "boom_radius", "$.collision", &spec.collision.boom_radius);
      r.get_double(c, "arm_radius", "$.collision", &spec.collision.arm_radius);
      r.get_double(c, "gripper_radius", "$.collision", &spec.collision.gripper_radius);
    }
  }

  if (!doc.contains("reference")) {
    r.error("$.reference", "section is required");
  } else if (!doc.at("reference").is_object()) {
    r.error("$.reference", "expected an object");
  } else {
    const json& ref = doc.at("reference");
    r.check_keys(ref, "$.reference", {"waypoints", "velocity_limit", "accel_limit"});
    if (!ref.contains("waypoints") || !ref.at("waypoints").is_array() ||
        ref.at("waypoints").empty()) {
      r.error("$.reference.waypoints", "expected a non-empty array of 5-vectors");
    } else {
      const json& wps = ref.at("waypoints");
      for (size_t i = 0; i < wps.size(); ++i) {
        Vec5 w = Vec5::Zero();
        if (r.read_fixed_vector(wps[i], "$.reference.waypoints[" + std::to_string(i) + "]",
                                &w))
          spec.waypoints.push_back(w);
      }
    }
    r.get_fixed_vector(ref, "velocity_limit", "$.reference", &spec.reference_velocity_limit);
    r.get_fixed_vector(ref, "accel_limit", "$.reference", &spec.reference_accel_limit);
  }

  if (!doc.contains("environment")) {
    r.error("$.environment", "section is required");
  } else if (!doc.at("environment").is_object()) {
    r.error("$.environment", "expected an object");
  } else {
    const json& env = doc.at("environment");
    r.check_keys(env, "$.environment", {"grid", "obstacles"});
    if (!env.contains("grid") || !env.at("grid").is_object()) {
      r.error("$.environment.grid", "section is required");
    } else {
      const json& g = env.at("grid");
      const std::string gp = "$.environment.grid";
      r.check_keys(g, gp, {"origin", "resolution", "dims", "truncation"});
      r.get_fixed_vector(g, "origin", gp, &spec.grid.origin);
      r.get_double(g, "resolution", gp, &spec.grid.resolution);
      if (g.contains("dims")) {
        const json& d = g.at("dims");
        if (!d.is_array() || d.size() != 3 || !d[0].is_number_integer() ||
            !d[1].is_number_integer() || !d[2].is_number_integer())
          r.error(gp + ".dims", "expected an array of 3 integers");
        else
          spec.grid.dims = Eigen::Vector3i(d[0].get<int>(), d[1].get<int>(), d[2].get<int>());
      }
      r.get_double(g, "truncation", gp, &spec.grid.truncation);
    }
    if (env.contains("obstacles")) {
      const json& obs = env.at("obstacles");
      if (!obs.is_array()) {
        r.error("$.environment.obstacles", "expected an array");
      } else {
        for (size_t i = 0; i < obs.size(); ++i) {
          const std::string op = "$.environment.obstacles[" + std::to_string(i) + "]";
          const json& o = obs[i];
          if (!o.is_object()) {
            r.error(op, "expected an object");
            continue;
          }
          r.check_keys(o, op, {"time", "action", "min", "max"});
          ObstacleEvent ev;
          r.get_double(o, "time", op, &ev.time);
          std::string action = "insert";
          r.get_string(o, "action", op, &action);
          if (action == "insert")
            ev.insert = true;
          else if (action == "remove")
            ev.insert = false;
          else
            r.error(op + ".action", "expected 'insert' or 'remove'");
          r.get_fixed_vector(o, "min", op, &ev.min_corner);
          r.get_fixed_vector(o, "max", op, &ev.max_corner);
          spec.obstacles.push_back(ev);
        }
      }
    }
  }

  if (doc.contains("disturbances")) {
    const json& arr = doc.at("disturbances");
    if (!arr.is_array()) {
      r.error("$.disturbances", "expected an array");
    } else {
      for (size_t i = 0; i < arr.size(); ++i) {
        const std::string dp = "$.disturbances[" + std::to_string(i) + "]";
        const json& d = arr[i];
        if (!d.is_object()) {
          r.error(dp, "expected an object");
          continue;
        }
        r.check_keys(d, dp, {"time", "impulse"});
        DisturbanceEvent ev;
        r.get_double(d, "time", dp, &ev.time);
        r.get_fixed_vector(d, "impulse", dp, &ev.impulse);
        spec.disturbances.push_back(ev);
      }
    }
  }

  if (doc.contains("initial")) {
    const json& init = doc.at("initial");
    if (!init.is_object()) {
      r.error("$.initial", "expected an object");
    } else {
      r.check_keys(init, "$.initial", {"q", "qd"});
      r.get_fixed_vector(init, "q", "$.initial", &spec.initial_q);
      r.get_fixed_vector(init, "qd", "$.initial", &spec.initial_qd);
    }
  }

  if (!doc.contains("run")) {
    r.error("$.run", "section is required");
  } else if (!doc.at("run").is_object()) {
    r.error("$.run", "expected an object");
  } else {
    const json& run = doc.at("run");
    r.check_keys(run, "$.run",
                 {"duration", "plant_dt", "control_period", "goal_tolerance",
                  "expect_collision", "mpc_enabled", "seed"});
    r.get_double(run, "duration", "$.run", &spec.duration);
    r.get_double(run, "plant_dt", "$.run", &spec.plant_dt);
    r.get_double(run, "control_period", "$.run", &spec.control_period);
    r.get_double(run, "goal_tolerance", "$.run", &spec.goal_tolerance);
    r.get_bool(run, "expect_collision", "$.run", &spec.expect_collision);
    r.get_bool(run, "mpc_enabled", "$.run", &spec.mpc_enabled);
    int seed = 0;
    r.get_int(run, "seed", "$.run", &seed);
  }

  // The sphere radii absorb half a voxel of discretization error.
  spec.collision.radius_inflation = 0.5 * spec.grid.resolution;

  result.scenario = std::move(spec);
  if (result.scenario) {
    for (auto& e : result.scenario->validate()) result.diagnostics.push_back(e);
  }
  return result;
}

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

ScenarioLoadResult load_scenario_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    ScenarioLoadResult result;
    result.diagnostics.push_back("line " + std::to_string(line_of_offset(text, e.byte)) +
                                 ": " + e.what());
    return result;
  }
  return parse_scenario(doc);
}

ScenarioLoadResult load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ScenarioLoadResult result;
    result.diagnostics.push_back("cannot open scenario file: " + path);
    return result;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_scenario_string(buffer.str());
}

nlohmann::ordered_json mpc_config_to_json(const MpcConfig& config) {
  ordered_json j;
  j["horizon"] = config.horizon;
  j["ts"] = config.ts;
  j["weights"] = {{"track", config.w_track},
                  {"damp", config.w_damp},
                  {"vel", config.w_vel},
                  {"accl", config.w_accl},
                  {"prog", config.w_prog}};
  j["collision_margin"] = config.collision_margin;
  j["limit_margin_frac"] = config.limit_margin_frac;
  j["flow_margin_frac"] = config.flow_margin_frac;
  j["tau_rate_margin"] = config.tau_rate_margin;
  j["tau_rate_min"] = config.tau_rate_min;
  j["tau_rate_max"] = config.tau_rate_max;
  j["collision_enabled"] = config.collision_enabled;
  j["flow_enabled"] = config.flow_enabled;
  j["budget_ms"] = config.budget_ms;
  j["iteration_cap"] = config.iteration_cap;
  j["max_iterations"] = config.max_iterations;
  return j;
}

nlohmann::ordered_json scenario_to_json(const ScenarioSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  if (!spec.description.empty()) j["description"] = spec.description;

  const auto vec_to_json = [](const auto& v) {
    ordered_json arr = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };

  ordered_json crane;
  crane["gravity"] = vec_to_json(spec.crane.gravity);
  crane["actuator_omega"] = vec_to_json(spec.crane.actuator_omega);
  crane["actuator_damping"] = vec_to_json(spec.crane.actuator_damping);
  crane["cylinder_area_pos"] = vec_to_json(spec.crane.cylinder_area_pos);
  crane["cylinder_area_neg"] = vec_to_json(spec.crane.cylinder_area_neg);
  crane["cylinder_gain"] = vec_to_json(spec.crane.cylinder_gain);
  crane["pump_flow_max"] = spec.crane.pump_flow_max;
  crane["q_min"] = vec_to_json(spec.crane.q_min);
  crane["q_max"] = vec_to_json(spec.crane.q_max);
  crane["qdd_a_min"] = vec_to_json(spec.crane.qdd_a_min);
  crane["qdd_a_max"] = vec_to_json(spec.crane.qdd_a_max);
  crane["u_max"] = vec_to_json(spec.crane.u_max);
  crane["telescope_index"] = spec.crane.telescope_index;
  crane["passive_damping"] = spec.crane.passive_damping;
  ordered_json joints = ordered_json::array();
  for (const auto& joint : spec.crane.joints) {
    ordered_json jo;
    jo["type"] = joint.type == JointType::kRevolute ? "revolute" : "prismatic";
    jo["axis"] = vec_to_json(joint.axis);
    jo["offset_translation"] = vec_to_json(Vec3(joint.parent_offset.translation()));
    jo["offset_rpy"] = vec_to_json(rotation_to_rpy(joint.parent_offset.linear()));
    joints.push_back(jo);
  }
  crane["joints"] = joints;
  ordered_json links = ordered_json::array();
  for (const auto& link : spec.crane.links) {
    ordered_json lo;
    lo["mass"] = link.mass;
    lo["com"] = vec_to_json(link.com);
    lo["inertia_diagonal"] = vec_to_json(Vec3(link.inertia.diagonal()));
    links.push_back(lo);
  }
  crane["links"] = links;
  j["crane"] = crane;

  j["mpc"] = mpc_config_to_json(spec.mpc);
  j["collision"] = {{"sphere_spacing", spec.collision.sphere_spacing},
                    {"boom_radius", spec.collision.boom_radius},
                    {"arm_radius", spec.collision.arm_radius},
                    {"gripper_radius", spec.collision.gripper_radius}};

  ordered_json ref;
  ordered_json wps = ordered_json::array();
  for (const Vec5& w : spec.waypoints) wps.push_back(vec_to_json(w));
  ref["waypoints"] = wps;
  ref["velocity_limit"] = vec_to_json(spec.reference_velocity_limit);
  ref["accel_limit"] = vec_to_json(spec.reference_accel_limit);
  j["reference"] = ref;

  ordered_json env;
  env["grid"] = {{"origin", vec_to_json(spec.grid.origin)},
                 {"resolution", spec.grid.resolution},
                 {"dims", {spec.grid.dims.x(), spec.grid.dims.y(), spec.grid.dims.z()}},
                 {"truncation", spec.grid.truncation}};
  ordered_json obs = ordered_json::array();
  for (const auto& ev : spec.obstacles) {
    obs.push_back({{"time", ev.time},
                   {"action", ev.insert ? "insert" : "remove"},
                   {"min", vec_to_json(ev.min_corner)},
                   {"max", vec_to_json(ev.max_corner)}});
  }
  env["obstacles"] = obs;
  j["environment"] = env;

  ordered_json dist = ordered_json::array();
  for (const auto& ev : spec.disturbances)
    dist.push_back({{"time", ev.time}, {"impulse", vec_to_json(ev.impulse)}});
  j["disturbances"] = dist;

  j["initial"] = {{"q", vec_to_json(spec.initial_q)}, {"qd", vec_to_json(spec.initial_qd)}};
  j["run"] = {{"duration", spec.duration},
              {"plant_dt", spec.plant_dt},
              {"control_period", spec.control_period},
              {"goal_tolerance", spec.goal_tolerance},
              {"expect_collision", spec.expect_collision},
              {"mpc_enabled", spec.mpc_enabled}};
  return j;
}

void save_scenario_file(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open scenario file for writing: " + path);
  out << scenario_to_json(spec).dump(2) << "\n";
}

}  // namespace cranempc
