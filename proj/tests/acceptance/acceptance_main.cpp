// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "mlivr/executive.hpp"
#include "mlivr/grasp.hpp"
#include "mlivr/kinematics.hpp"
#include "mlivr/planner.hpp"
#include "mlivr/scenario.hpp"
#include "mlivr/servo.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mlivr;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kStrideOk = 1.200;
constexpr double kStrideTooFar = 1.210;
constexpr double kServoError = 1e-3;
constexpr int kServoMaxIter = 500;
constexpr int kServoRuns = 100;
constexpr int kServoMinConverged = 95;
constexpr double kServoMaxOffset = 0.1;
constexpr double kServoMaxYawDeg = 15.0;
constexpr double kLRelTol = 1e-4;
constexpr double kFkIkTol = 1e-6;
constexpr double kJacobianRelTol = 1e-5;
constexpr int kRandomMaps = 50;
constexpr int kMaxPlanSteps = 6;

const RobotModel kModel = RobotModel::default_model();

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string scenario_path(const std::string& name) { return std::string(MLIVR_SCENARIO_DIR) + "/" + name + ".json"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1. The stride limit on the closed chain and on planner edges.
Verdict stride_bound() {
  Verdict v;
  const EnvironmentMap map = parallel_rails(1, 1.0, 2.0);
  auto solves = [&](double separation) {
    const GraspPoint a = map.grasp_point("R0", 0.4), b = map.grasp_point("R0", 0.4 + separation);
    Pose hint;
    hint.position = nominal_base_position(kModel, a, b);
    try {
      const RobotState s = solve_double_support(kModel, a, b, hint);
      return (forward_kinematics(kModel.limb_a, s.base, s.joints_a).position - a.position).norm() <= 1e-4 &&
             (forward_kinematics(kModel.limb_b, s.base, s.joints_b).position - b.position).norm() <= 1e-4;
    } catch (const Error&) {
      return false;
    }
  };
  v.require(solves(kStrideOk), "1.200 m separation did not solve");
  v.require(!solves(kStrideTooFar), "1.210 m separation solved");

  PlannerConfig cfg;
  const GraspPoint a = map.grasp_point("R0", 0.4);
  v.require(feasible_pair(map, a, map.grasp_point("R0", 0.4 + kStrideOk), cfg), "planner rejects a 1.200 m edge");
  v.require(!feasible_pair(map, a, map.grasp_point("R0", 0.4 + kStrideTooFar), cfg), "planner accepts a 1.210 m edge");
  // Every edge of a plan along one rail stays within the bound.
  const FootholdPlan p = plan(map, {map.grasp_point("R0", 0.0), map.grasp_point("R0", 0.4)},
                              GoalSpec::on_rail("R0", {1.8, 2.0}), cfg, kModel);
  for (const PlanNode& n : p.nodes())
    v.require((n.a.position - n.b.position).norm() <= cfg.max_stride + 1e-9, "plan node exceeds the stride");
  return v;
}

// 2. Adjacent rail in one step, far rail in at least two.
Verdict rail_topology() {
  Verdict v;
  const EnvironmentMap map = parallel_rails(3, 1.0, 2.0);
  const PlannerConfig cfg;
  const PlanNode start{map.grasp_point("R0", 0.8), map.grasp_point("R0", 1.2)};
  for (const char* rail : {"R1", "R2"}) {
    const GoalSpec goal = GoalSpec::on_rail(rail, {0.0, 2.0}, GoalSpec::Feet::kAny);
    const FootholdPlan p = plan(map, start, goal, cfg, kModel);
    const oracles::BruteResult want = oracles::brute_force_plan(map, start, goal, cfg, 6);
    v.require(p.total_cost == want.cost, std::string(rail) + ": cost differs from enumeration");
    v.require(int(p.steps.size()) == want.steps, std::string(rail) + ": step count differs from enumeration");
    if (std::string(rail) == "R1") {
      v.require(p.steps.size() == 1, "adjacent rail took " + std::to_string(p.steps.size()) + " steps");
    } else {
      v.require(p.steps.size() >= 2, "far rail reached in one step");
      v.require(oracles::brute_force_plan(map, start, goal, cfg, 1).cost == oracles::kInf,
                "enumeration finds a one-step route to the far rail");
    }
  }
  return v;
}

// 3. Exact optimality against enumeration on random maps.
Verdict planner_optimality() {
  Verdict v;
  std::mt19937_64 rng(2024);
  const PlannerConfig cfg;
  int checked = 0, attempts = 0;
  std::array<int, kMaxPlanSteps + 1> by_steps{};
  while (checked < kRandomMaps && attempts < 5000) {
    ++attempts;
    const EnvironmentMap map = oracles::random_map(rng, 200);
    const auto start = oracles::random_start(map, cfg, rng);
    if (!start) continue;
    const GoalSpec goal = oracles::random_goal(map, rng);
    FootholdPlan p;
    try {
      p = plan(map, *start, goal, cfg, kModel);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoPath) {
        v.require(false, std::string("planner raised: ") + e.what());
        return v;
      }
      continue;
    }
    if (int(p.steps.size()) > kMaxPlanSteps) continue;
    // Keep trivial plans to a handful so the sample leans on deeper searches.
    if (p.steps.size() <= 1 && by_steps[0] + by_steps[1] >= 10) continue;
    const oracles::BruteResult want = oracles::brute_force_plan(map, *start, goal, cfg, kMaxPlanSteps);
    if (p.total_cost != want.cost) {
      std::ostringstream s;
      s.precision(17);
      s << "map " << checked << ": planner " << p.total_cost << " vs oracle " << want.cost;
      v.require(false, s.str());
    }
    ++by_steps[p.steps.size()];
    ++checked;
  }
  v.require(checked == kRandomMaps, "only " + std::to_string(checked) + " maps checked");
  if (v.pass) {
    v.detail = std::to_string(checked) + " maps, 0 mismatches, plans by step count:";
    for (int k = 0; k <= kMaxPlanSteps; ++k) v.detail += " " + std::to_string(by_steps[std::size_t(k)]);
  }
  return v;
}

// 4. Servo convergence and monotone error from random in-basin offsets.
Verdict visual_servoing() {
  Verdict v;
  const EnvironmentMap map = parallel_rails(1, 1.0, 2.0);
  const GraspPoint target = map.grasp_point("R0", 1.0);
  ServoConfig cfg;
  cfg.tolerance = kServoError;
  cfg.max_iter = kServoMaxIter;
  v.require(cfg.gain * cfg.dt == 0.02, "gain times dt is not 0.02");
  const CameraModel cam;
  const MarkerSet markers = make_markers(target, cfg.marker_length, cfg.marker_width);
  Pose desired = grasp_pose(target, target.rail_dir);
  desired.position += cfg.standoff * target.face_normal;

  FeatureVector s = project(desired * cam.hand_to_camera, cam, markers);
  const InteractionMatrix L = interaction_matrix(s, marker_depths(desired * cam.hand_to_camera, markers));
  v.require(control_law(s, s, L, cfg.gain) == CameraTwist::Zero(), "twist at s = s* is not exactly zero");

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int converged = 0, monotone = 0;
  for (int run = 0; run < kServoRuns; ++run) {
    Pose start = desired;
    const Vec3 dir = random_unit(rng);
    start.position += kServoMaxOffset * std::abs(u(rng)) * dir;
    start.orientation = Quat(Eigen::AngleAxisd(deg2rad(kServoMaxYawDeg) * u(rng), target.face_normal)) * start.orientation;
    const ServoResult r = run_servo(start, target, markers, cam, cfg);
    bool mono = true;
    for (std::size_t i = 1; i < r.trace.size(); ++i) mono = mono && r.trace[i].error_norm <= r.trace[i - 1].error_norm;
    monotone += mono;
    converged += r.converged() && r.trace.back().error_norm < kServoError && r.iterations <= kServoMaxIter;
  }
  v.require(monotone == kServoRuns, std::to_string(kServoRuns - monotone) + " runs with a rising error");
  v.require(converged >= kServoMinConverged, "only " + std::to_string(converged) + " runs converged");
  if (v.pass) v.detail = std::to_string(converged) + "/" + std::to_string(kServoRuns) + " converged, all monotone";
  return v;
}

Pose nudge(const Pose& cam, const CameraTwist& xi, double h) {
  Pose p = cam;
  p.position += cam.rotation() * (h * xi.head<3>());
  const Vec3 w = xi.tail<3>();
  if (w.norm() > 0.0) p.orientation = cam.orientation * Quat(Eigen::AngleAxisd(h * w.norm(), w.normalized()));
  return p;
}

// 5. Feature rates from L against central differences of the projection.
Verdict interaction_fidelity() {
  Verdict v;
  const CameraModel cam;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Pose pose;
    pose.position = Vec3(u(rng), u(rng), u(rng));
    pose.orientation = random_rotation(rng, 0.3);
    MarkerSet m;
    for (auto& p : m) p = pose.position + pose.rotation() * Vec3(u(rng), u(rng), 0.5 + 3.0 * std::abs(u(rng)));
    const InteractionMatrix L = interaction_matrix(project(pose, cam, m), marker_depths(pose, m));
    CameraTwist xi;
    for (int k = 0; k < 6; ++k) xi(k) = u(rng);
    const FeatureVector fd = (project(nudge(pose, xi, h), cam, m) - project(nudge(pose, xi, -h), cam, m)) / (2 * h);
    const FeatureVector rate = L * xi;
    worst = std::max(worst, (fd - rate).norm() / rate.norm());
  }
  v.require(worst < kLRelTol, "worst relative error " + num(worst));
  if (v.pass) v.detail = "worst relative error " + num(worst);
  return v;
}

// 6. Yaw error handled by the gripper up to 15 degrees.
Verdict yaw_tolerance() {
  Verdict v;
  const EnvironmentMap map = parallel_rails(1, 1.0, 2.0);
  const GraspPoint target = map.grasp_point("R0", 1.0);
  const GraspTolerance tol;
  auto grips = [&](double yaw_deg) {
    Pose hand = grasp_pose(target, target.rail_dir);
    hand.orientation = Quat(Eigen::AngleAxisd(deg2rad(yaw_deg), target.face_normal)) * hand.orientation;
    Pose above = hand;
    above.position += 0.05 * target.face_normal;
    const PressResult pressed = press(above, target, tol);
    return grip(check_alignment(pressed.settled_pose, target, tol), pressed.contacts).success;
  };
  v.require(grips(15.0), "15.0 deg yaw did not grip");
  v.require(!grips(16.0), "16.0 deg yaw gripped");
  return v;
}

// 7. Kinematic round trips and Jacobian accuracy.
Verdict kinematics() {
  Verdict v;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), small(-0.05, 0.05);
  double worst_ik = 0.0, worst_j = 0.0;
  int failed = 0;
  const double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const LimbParams& limb = i % 2 ? kModel.limb_b : kModel.limb_a;
    Pose base;
    base.position = Vec3(u(rng), u(rng), u(rng));
    base.orientation = random_rotation(rng, kPi);
    const JointVector q = random_joints(rng, 2.5);
    JointVector seed = q;
    for (int k = 0; k < kJointsPerLimb; ++k) seed(k) += small(rng);
    const Pose target = forward_kinematics(limb, base, q);
    const IkResult r = inverse_kinematics(limb, base, target, seed);
    const double err = (forward_kinematics(limb, base, r.q).position - target.position).norm();
    failed += !r.converged;
    worst_ik = std::max(worst_ik, err);

    const LimbJacobian j = limb_jacobian(limb, base, q);
    for (int k = 0; k < kJointsPerLimb; ++k) {
      JointVector qp = q, qm = q;
      qp(k) += h;
      qm(k) -= h;
      const Pose a = forward_kinematics(limb, base, qp), b = forward_kinematics(limb, base, qm);
      Vec6 col;
      col.head<3>() = (a.position - b.position) / (2 * h);
      const Eigen::AngleAxisd d(a.orientation * b.orientation.inverse());
      col.tail<3>() = d.angle() * d.axis() / (2 * h);
      worst_j = std::max(worst_j, (col - j.col(k)).norm() / std::max(j.col(k).norm(), 1e-9));
    }
  }
  v.require(failed == 0, std::to_string(failed) + " IK solves did not converge");
  v.require(worst_ik < kFkIkTol, "worst FK/IK error " + num(worst_ik) + " m");
  v.require(worst_j < kJacobianRelTol, "worst Jacobian error " + num(worst_j));
  if (v.pass) v.detail = "FK/IK " + num(worst_ik) + " m, Jacobian " + num(worst_j);
  return v;
}

// 8. The wall transition mission, nominal and with a hidden obstacle.
Verdict mission() {
  Verdict v;
  auto run = [](const std::string& name) {
    const Scenario s = load_scenario_file(scenario_path(name));
    return run_mission(s.map, initial_state(s.start, s.setup.kin), s.mission, s.setup);
  };
  auto anchored = [](const MissionReport& r) {
    if (r.anchors.size() != r.trajectory.samples.size()) return false;
    for (std::uint8_t a : r.anchors)
      if ((a & 3u) == 0) return false;
    return true;
  };
  const MissionReport nominal = run("fig7_wall_transition");
  v.require(nominal.final_state == MissionState::kGoalReached,
            std::string("nominal ended in ") + to_string(nominal.final_state));
  v.require(nominal.metrics.steps_executed == 4, "nominal took " + std::to_string(nominal.metrics.steps_executed) + " steps");
  int transitions = 0;
  if (!nominal.plans.empty())
    for (const PlanStep& st : nominal.plans.back().steps) transitions += st.from.face_id != st.to.face_id;
  v.require(transitions == 1, std::to_string(transitions) + " face transitions");
  v.require(anchored(nominal), "nominal run lost its anchors");

  const MissionReport hidden = run("fig7_hidden_obstacle");
  v.require(hidden.final_state == MissionState::kGoalReached,
            std::string("obstacle variant ended in ") + to_string(hidden.final_state));
  v.require(hidden.metrics.replans == 1, "obstacle variant re-planned " + std::to_string(hidden.metrics.replans) + " times");
  v.require(anchored(hidden), "obstacle variant lost its anchors");
  return v;
}

// 9. Two simulate runs of the command-line tool give identical files.
Verdict determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / ("mlivr_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const char* files[] = {"events.jsonl", "trajectory.csv", "servo_traces.csv", "metrics.json"};
  for (const char* name : {"fig7_hidden_obstacle", "fig7_noisy"}) {
    for (const char* run : {"a", "b"}) {
      fs::create_directories(root / name / run);
      const std::string cmd = std::string(MLIVR_CLI_PATH) + " simulate " + scenario_path(name) + " --out " +
                              (root / name / run).string() + " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      v.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, std::string(name) + ": simulate failed");
    }
    for (const char* f : files) {
      const std::string a = slurp(root / name / "a" / f), b = slurp(root / name / "b" / f);
      v.require(!a.empty() && a == b, std::string(name) + "/" + f + " differs");
    }
  }
  fs::remove_all(root);
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 when unbounded
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "stride bound", 1.0, stride_bound},
      {2, "rail topology", 5.0, rail_topology},
      {3, "planner optimality", 60.0, planner_optimality},
      {4, "visual servoing", 30.0, visual_servoing},
      {5, "interaction matrix fidelity", 0.0, interaction_fidelity},
      {6, "yaw tolerance", 0.0, yaw_tolerance},
      {7, "kinematics", 0.0, kinematics},
      {8, "mission end-to-end", 30.0, mission},
      {9, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0) v.require(secs < c.budget_s, "took " + num(secs) + " s, budget " + num(c.budget_s) + " s");
    failed += !v.pass;
    std::printf("%s %d %s (%.2f s)%s%s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                v.detail.empty() ? "" : ": ", v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
