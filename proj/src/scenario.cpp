#include "mlivr/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace mlivr {

namespace {

using detail::json;
using detail::as_number;
using detail::as_string;
using detail::as_vec;
using detail::bool_or;
using detail::invalid;
using detail::number_or;
using detail::require;

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  const json& s = doc.at(key);
  if (!s.is_object()) invalid(key, "expected an object");
  return s;
}

int int_or(const json& j, const char* key, int fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) invalid(path + "." + key, "expected an integer");
  return v.get<int>();
}

Pose parse_mount(const json& j, const std::string& path) {
  Pose p;
  if (j.contains("position")) p.position = as_vec<3>(j.at("position"), path + ".position");
  if (j.contains("rpy_deg")) {
    const Vec3 r = as_vec<3>(j.at("rpy_deg"), path + ".rpy_deg");
    p.orientation = quat_from_rpy(deg2rad(r.x()), deg2rad(r.y()), deg2rad(r.z()));
  }
  return p;
}

LimbParams parse_limb(const json& j, const std::string& path, Limb which) {
  if (!j.is_object()) invalid(path, "expected an object");
  LimbParams limb;
  limb.limb = which;
  if (j.contains("mount")) limb.mount = parse_mount(j.at("mount"), path + ".mount");
  const json& joints = require(j, "joints", path);
  if (!joints.is_array() || joints.size() != std::size_t(kJointsPerLimb))
    invalid(path + ".joints", "expected " + std::to_string(kJointsPerLimb) + " joints");
  for (int i = 0; i < kJointsPerLimb; ++i) {
    const std::string jp = path + ".joints[" + std::to_string(i) + "]";
    const json& jj = joints[std::size_t(i)];
    JointParams& out = limb.joints[std::size_t(i)];
    const Vec3 axis = as_vec<3>(require(jj, "axis", jp), jp + ".axis");
    if (axis.norm() < 1e-12) invalid(jp + ".axis", "must be non-zero");
    out.axis = axis.normalized();
    if (jj.contains("link_offset")) out.link_offset = as_vec<3>(jj.at("link_offset"), jp + ".link_offset");
    if (jj.contains("limits_deg")) {
      const Vec2 lim = as_vec<2>(jj.at("limits_deg"), jp + ".limits_deg");
      out.limit_lo = deg2rad(lim.x());
      out.limit_hi = deg2rad(lim.y());
    }
  }
  return limb;
}

RobotModel parse_robot(const json& j) {
  RobotModel m = RobotModel::default_model();
  if (j.contains("limbs")) {
    const json& limbs = j.at("limbs");
    if (!limbs.is_array() || limbs.size() != 2) invalid("robot.limbs", "expected two limbs");
    m.limb_a = parse_limb(limbs[0], "robot.limbs[0]", Limb::A);
    m.limb_b = parse_limb(limbs[1], "robot.limbs[1]", Limb::B);
  }
  m.reach = number_or(j, "reach", m.reach, "robot");
  m.min_stride = number_or(j, "min_stride", m.min_stride, "robot");
  m.max_stride = number_or(j, "max_stride", m.max_stride, "robot");
  m.clearance = number_or(j, "clearance", m.clearance, "robot");
  return m;
}

PlannerConfig parse_planner(const json& j, const RobotModel& kin) {
  PlannerConfig c;
  c.min_stride = number_or(j, "min_stride", kin.min_stride, "planner");
  c.max_stride = number_or(j, "max_stride", kin.max_stride, "planner");
  c.step_cost = number_or(j, "step_cost", c.step_cost, "planner");
  c.travel_weight = number_or(j, "travel_weight", c.travel_weight, "planner");
  c.ik_check = bool_or(j, "ik_check", c.ik_check, "planner");
  return c;
}

GaitConfig parse_gait(const json& j) {
  GaitConfig c;
  c.dt = number_or(j, "dt", c.dt, "gait");
  c.clearance = number_or(j, "clearance", c.clearance, "gait");
  c.joint_rate_limit = number_or(j, "joint_rate_limit", c.joint_rate_limit, "gait");
  c.path_resolution = number_or(j, "path_resolution", c.path_resolution, "gait");
  return c;
}

void parse_servo(const json& j, ServoConfig& c, CameraModel& cam) {
  c.gain = number_or(j, "gain", c.gain, "servo");
  c.dt = number_or(j, "dt", c.dt, "servo");
  c.tolerance = number_or(j, "tolerance", c.tolerance, "servo");
  c.max_iter = int_or(j, "max_iter", c.max_iter, "servo");
  c.standoff = number_or(j, "standoff", c.standoff, "servo");
  c.marker_length = number_or(j, "marker_length", c.marker_length, "servo");
  c.marker_width = number_or(j, "marker_width", c.marker_width, "servo");
  if (j.contains("depth_mode")) {
    const std::string m = as_string(j.at("depth_mode"), "servo.depth_mode");
    if (m == "true")
      c.depth_mode = ServoConfig::DepthMode::kTrueDepth;
    else if (m == "desired")
      c.depth_mode = ServoConfig::DepthMode::kDesiredDepth;
    else
      invalid("servo.depth_mode", "expected \"true\" or \"desired\"");
  }
  if (!j.contains("camera")) return;
  const json& cj = j.at("camera");
  if (!cj.is_object()) invalid("servo.camera", "expected an object");
  cam.fx = number_or(cj, "fx", cam.fx, "servo.camera");
  cam.fy = number_or(cj, "fy", cam.fy, "servo.camera");
  cam.width = int_or(cj, "width", cam.width, "servo.camera");
  cam.height = int_or(cj, "height", cam.height, "servo.camera");
  cam.cx = number_or(cj, "cx", cam.width / 2.0, "servo.camera");
  cam.cy = number_or(cj, "cy", cam.height / 2.0, "servo.camera");
  if (cj.contains("mount")) {
    const json& mj = cj.at("mount");
    Pose p = CameraModel::default_mount();
    if (mj.contains("position")) p.position = as_vec<3>(mj.at("position"), "servo.camera.mount.position");
    if (mj.contains("rpy_deg")) {
      const Vec3 r = as_vec<3>(mj.at("rpy_deg"), "servo.camera.mount.rpy_deg");
      p.orientation = quat_from_rpy(deg2rad(r.x()), deg2rad(r.y()), deg2rad(r.z()));
    }
    cam.hand_to_camera = p;
  }
}

void parse_grasp(const json& j, GraspTolerance& t, GripperGeometry& g) {
  t.lateral = number_or(j, "lateral", t.lateral, "grasp");
  t.normal_gap = number_or(j, "normal_gap", t.normal_gap, "grasp");
  t.yaw = deg2rad(number_or(j, "yaw_deg", rad2deg(t.yaw), "grasp"));
  t.pitch_roll = deg2rad(number_or(j, "pitch_roll_deg", rad2deg(t.pitch_roll), "grasp"));
  t.contact_epsilon = number_or(j, "contact_epsilon", t.contact_epsilon, "grasp");
  g.half_length = number_or(j, "gripper_half_length", g.half_length, "grasp");
  g.half_width = number_or(j, "gripper_half_width", g.half_width, "grasp");
  if (!(g.half_length > 0.0 && g.half_width > 0.0))
    invalid("grasp", "gripper half extents must be positive");
}

GraspPoint parse_foot(const json& start, const char* key, const EnvironmentMap& map) {
  const std::string path = std::string("mission.start.") + key;
  const json& f = require(start, key, "mission.start");
  const std::string rail = as_string(require(f, "rail", path), path + ".rail");
  const double s = as_number(require(f, "s", path), path + ".s");
  const RailSegment* r = map.find_rail(rail);
  if (!r) invalid(path + ".rail", "unknown rail '" + rail + "'");
  if (s < -1e-9 || s > r->length + 1e-9) invalid(path + ".s", "outside the rail");
  return map.grasp_point(rail, s);
}

GoalSpec parse_goal(const json& m) {
  const json& g = require(m, "goal", "mission");
  if (!g.is_object()) invalid("mission.goal", "expected an object");
  GoalSpec goal;
  if (g.contains("rail")) {
    const std::string rail = as_string(g.at("rail"), "mission.goal.rail");
    const Vec2 iv = as_vec<2>(require(g, "interval", "mission.goal"), "mission.goal.interval");
    GoalSpec::Feet feet = GoalSpec::Feet::kBoth;
    if (g.contains("feet")) {
      const std::string f = as_string(g.at("feet"), "mission.goal.feet");
      if (f == "any")
        feet = GoalSpec::Feet::kAny;
      else if (f != "both")
        invalid("mission.goal.feet", "expected \"both\" or \"any\"");
    }
    goal = GoalSpec::on_rail(rail, {iv.x(), iv.y()}, feet);
  } else if (g.contains("point")) {
    goal = GoalSpec::at_point(as_vec<3>(g.at("point"), "mission.goal.point"),
                              number_or(g, "radius", 0.1, "mission.goal"));
  } else {
    invalid("mission.goal", "needs either 'rail' or 'point'");
  }
  return goal;
}

std::uint64_t parse_seed(const json& doc) {
  if (!doc.contains("seed")) return 0;
  const json& s = doc.at("seed");
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer() && s.get<std::int64_t>() >= 0) return std::uint64_t(s.get<std::int64_t>());
  invalid("seed", "expected a non-negative integer");
}

std::string compute_hash(const json& doc) {
  json env = doc.contains("environment") ? doc.at("environment") : json::object();
  json key = json::object();
  key["faces"] = env.value("faces", json::array());
  key["rails"] = env.value("rails", json::array());
  key["grasp_pitch"] = env.value("grasp_pitch", json(0.05));
  key["robot"] = doc.value("robot", json::object());
  key["planner"] = doc.value("planner", json::object());
  return fnv1a_hex(key.dump());
}

template <typename F>
void rethrow_as_validation(const char* where, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kValidation) throw;
    throw Error(ErrorCode::kValidation, std::string(where) + ": " + e.what());
  }
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario load_scenario(std::string_view document) {
  const json doc = detail::parse_document(document);
  if (!doc.is_object()) invalid("document", "expected an object at the top level");

  Scenario sc;
  sc.name = doc.contains("name") ? as_string(doc.at("name"), "name") : std::string("scenario");
  sc.seed = parse_seed(doc);
  if (!doc.contains("environment")) invalid("document", "missing field 'environment'");
  sc.map = environment_from_json(doc);

  MissionSetup& st = sc.setup;
  st.kin = parse_robot(section(doc, "robot"));
  st.planner = parse_planner(section(doc, "planner"), st.kin);
  st.gait = parse_gait(section(doc, "gait"));
  parse_servo(section(doc, "servo"), st.servo, st.camera);
  parse_grasp(section(doc, "grasp"), st.grasp, st.gripper);
  rethrow_as_validation("robot", [&] { st.kin.validate(); });
  st.planner.validate();
  st.gait.validate();
  st.servo.validate();
  st.camera.validate();
  st.grasp.validate();

  const json& m = section(doc, "mission");
  const json& start = require(m, "start", "mission");
  sc.start.a = parse_foot(start, "A", sc.map);
  sc.start.b = parse_foot(start, "B", sc.map);
  sc.mission.goal = parse_goal(m);
  sc.mission.servo_retries = int_or(m, "servo_retries", sc.mission.servo_retries, "mission");
  sc.mission.replan_limit = int_or(m, "replan_limit", sc.mission.replan_limit, "mission");
  sc.mission.localization_noise_sigma =
      number_or(m, "localization_noise_sigma", sc.mission.localization_noise_sigma, "mission");
  sc.mission.noise_seed = sc.seed;
  sc.mission.validate();
  sc.mission.goal.validate(sc.map);

  sc.hash = compute_hash(doc);
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

}  // namespace mlivr
