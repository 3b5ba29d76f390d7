#include "mlivr/export.hpp"

#include <charconv>
#include <cmath>

#include "json_util.hpp"

namespace mlivr {

namespace {

using ojson = nlohmann::ordered_json;
using detail::json;

ojson num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v + 0.0;
}

ojson vec(const Vec3& v) { return ojson::array({num(v.x()), num(v.y()), num(v.z())}); }

ojson foot(const GraspPoint& g) {
  ojson j = ojson::object();
  j["rail"] = g.rail_id;
  j["s"] = num(g.s);
  if (g.rail_id.empty()) j["position"] = vec(g.position);
  return j;
}

GraspPoint read_foot(const json& j, const EnvironmentMap& map, const std::string& path) {
  using namespace detail;
  const std::string rail = as_string(require(j, "rail", path), path + ".rail");
  const double s = as_number(require(j, "s", path), path + ".s");
  if (rail.empty()) {
    GraspPoint g;
    g.s = s;
    g.position = as_vec<3>(require(j, "position", path), path + ".position");
    return g;
  }
  if (!map.find_rail(rail)) invalid(path + ".rail", "unknown rail '" + rail + "'");
  return map.grasp_point(rail, s);
}

Limb read_limb(const json& j, const std::string& path) {
  const std::string l = detail::as_string(j, path);
  if (l == "A") return Limb::A;
  if (l == "B") return Limb::B;
  detail::invalid(path, "expected \"A\" or \"B\"");
}

void put(std::string& line, double v) {
  line += format_number(v);
  line += ',';
}

}  // namespace

std::string format_number(double v) {
  v += 0.0;  // folds -0 into +0
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_events_jsonl(std::ostream& out, const std::vector<MissionEvent>& events) {
  for (const MissionEvent& e : events) {
    ojson j = ojson::object();
    j["t"] = num(e.t);
    j["state"] = to_string(e.state);
    j["event"] = e.event;
    j["detail"] = e.detail;
    if (e.limb) j["limb"] = to_string(*e.limb);
    if (!e.rail.empty()) j["rail"] = e.rail;
    if (e.s) j["s"] = num(*e.s);
    out << j.dump() << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,base_x,base_y,base_z,qw,qx,qy,qz,a1,a2,a3,a4,a5,b1,b2,b3,b4,b5,phase\n";
  std::string line;
  for (const TrajectorySample& s : trajectory.samples) {
    line.clear();
    put(line, s.t);
    for (int i = 0; i < 3; ++i) put(line, s.base.position(i));
    const Quat& q = s.base.orientation;
    put(line, q.w());
    put(line, q.x());
    put(line, q.y());
    put(line, q.z());
    for (int i = 0; i < kJointsPerLimb; ++i) put(line, s.joints_a(i));
    for (int i = 0; i < kJointsPerLimb; ++i) put(line, s.joints_b(i));
    line += to_string(s.phase);
    line += '\n';
    out << line;
  }
}

void write_servo_csv(std::ostream& out, const std::vector<ServoRun>& runs) {
  out << "run,iteration,error_norm,v_x,v_y,v_z,w_x,w_y,w_z\n";
  std::string line;
  for (const ServoRun& r : runs) {
    for (const ServoTraceEntry& e : r.trace) {
      line = std::to_string(r.run) + ',' + std::to_string(e.iteration) + ',';
      put(line, e.error_norm);
      for (int i = 0; i < 6; ++i) put(line, e.twist(i));
      line.back() = '\n';
      out << line;
    }
  }
}

void write_metrics_json(std::ostream& out, const MissionReport& report) {
  const MissionMetrics& m = report.metrics;
  ojson j = ojson::object();
  j["final_state"] = to_string(report.final_state);
  j["steps_executed"] = m.steps_executed;
  j["replans"] = m.replans;
  j["servo_iterations_total"] = m.servo_iterations_total;
  j["simulated_duration"] = num(m.simulated_duration);
  j["base_path_length"] = num(m.base_path_length);
  j["servo_runs"] = report.servo_runs.size();
  j["trajectory_samples"] = report.trajectory.samples.size();
  out << j.dump(2) << '\n';
}

std::string plan_to_json(const FootholdPlan& plan, const std::string& scenario_hash) {
  ojson j = ojson::object();
  j["scenario_hash"] = scenario_hash;
  j["start"] = ojson::object({{"A", foot(plan.start.a)}, {"B", foot(plan.start.b)}});
  ojson steps = ojson::array();
  for (const PlanStep& s : plan.steps) {
    ojson st = ojson::object();
    st["limb"] = to_string(s.swing);
    st["from"] = foot(s.from);
    st["to"] = foot(s.to);
    st["cost"] = num(s.cost);
    steps.push_back(std::move(st));
  }
  j["steps"] = std::move(steps);
  ojson wps = ojson::array();
  for (std::size_t i = 0; i < plan.base_waypoints.size(); ++i) {
    const Pose& p = plan.base_waypoints[i];
    ojson w = ojson::object();
    w["position"] = vec(p.position);
    w["orientation"] = ojson::array({num(p.orientation.w()), num(p.orientation.x()),
                                     num(p.orientation.y()), num(p.orientation.z())});
    w["solved"] = i < plan.waypoint_ok.size() ? bool(plan.waypoint_ok[i]) : false;
    wps.push_back(std::move(w));
  }
  j["base_waypoints"] = std::move(wps);
  j["total_cost"] = num(plan.total_cost);
  return j.dump(2) + "\n";
}

FootholdPlan plan_from_json(std::string_view document, const EnvironmentMap& map,
                            const std::string& scenario_hash) {
  using namespace detail;
  const json doc = parse_document(document);
  if (!doc.is_object()) invalid("plan", "expected an object");
  const std::string hash = as_string(require(doc, "scenario_hash", "plan"), "plan.scenario_hash");
  if (hash != scenario_hash)
    throw Error(ErrorCode::kHashMismatch,
                "plan was made for scenario " + hash + ", not " + scenario_hash);

  FootholdPlan plan;
  const json& start = require(doc, "start", "plan");
  plan.start.a = read_foot(require(start, "A", "plan.start"), map, "plan.start.A");
  plan.start.b = read_foot(require(start, "B", "plan.start"), map, "plan.start.B");

  const json& steps = require(doc, "steps", "plan");
  if (!steps.is_array()) invalid("plan.steps", "expected an array");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string path = "plan.steps[" + std::to_string(i) + "]";
    PlanStep s;
    s.swing = read_limb(require(steps[i], "limb", path), path + ".limb");
    s.from = read_foot(require(steps[i], "from", path), map, path + ".from");
    s.to = read_foot(require(steps[i], "to", path), map, path + ".to");
    s.cost = as_number(require(steps[i], "cost", path), path + ".cost");
    plan.steps.push_back(std::move(s));
  }

  const json& wps = array_field(doc, "base_waypoints", "plan");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const std::string path = "plan.base_waypoints[" + std::to_string(i) + "]";
    Pose p;
    p.position = as_vec<3>(require(wps[i], "position", path), path + ".position");
    const Eigen::Vector4d q = as_vec<4>(require(wps[i], "orientation", path), path + ".orientation");
    p.orientation = Quat(q(0), q(1), q(2), q(3));
    plan.base_waypoints.push_back(p);
    plan.waypoint_ok.push_back(bool_or(wps[i], "solved", true, path));
  }
  plan.total_cost = as_number(require(doc, "total_cost", "plan"), "plan.total_cost");
  return plan;
}

}  // namespace mlivr
