#include "mlivr/executive.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "mlivr/error.hpp"

namespace mlivr {

const char* to_string(MissionState s) {
  switch (s) {
    case MissionState::kIdle: return "IDLE";
    case MissionState::kPlanning: return "PLANNING";
    case MissionState::kExecutingStep: return "EXECUTING_STEP";
    case MissionState::kAligning: return "ALIGNING";
    case MissionState::kGrasping: return "GRASPING";
    case MissionState::kVerifying: return "VERIFYING";
    case MissionState::kReplanning: return "REPLANNING";
    case MissionState::kGoalReached: return "GOAL_REACHED";
    case MissionState::kFault: return "FAULT";
  }
  return "?";
}

void MissionConfig::validate() const {
  if (servo_retries < 0) throw Error(ErrorCode::kValidation, "mission.servo_retries: must be >= 0");
  if (replan_limit < 0) throw Error(ErrorCode::kValidation, "mission.replan_limit: must be >= 0");
  if (!(localization_noise_sigma >= 0.0))
    throw Error(ErrorCode::kValidation, "mission.localization_noise_sigma: must be >= 0");
}

Pose localize(const RobotState& state, const RobotModel& kin, double noise_sigma,
              std::mt19937_64& rng) {
  if (state.anchor_count() == 0) throw Error(ErrorCode::kNoAnchor, "localize: no foot attached");
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  int n = 0;
  for (Limb l : {Limb::A, Limb::B}) {
    if (!state.attached(l)) continue;
    // Base-to-foot transform from the joint readings alone.
    const Pose rel = forward_kinematics(kin.limb(l), Pose::identity(), state.joints(l));
    const Vec3 x_ref = kin.base_orientation * rel.rotation().col(0);
    const Pose foot = grasp_pose(*state.attached(l), x_ref);
    const Pose base = foot * rel.inverse();
    if (n == 0) orientation = base.orientation;
    position += base.position;
    ++n;
  }
  Pose out;
  out.position = position / double(n);
  out.orientation = orientation;
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (int i = 0; i < 3; ++i) out.position(i) += noise(rng);
  }
  return out;
}

RobotState initial_state(const PlanNode& start, const RobotModel& kin) {
  if (start.a.rail_id.empty() || start.b.rail_id.empty())
    throw Error(ErrorCode::kInvalidStart, "both start feet must be on rails");
  Pose hint;
  hint.orientation = kin.base_orientation;
  RobotState s;
  try {
    s = solve_double_support(kin, start.a, start.b, hint);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidStart, std::string("start posture: ") + e.what());
  }
  s.attached_a = start.a;
  s.attached_b = start.b;
  return s;
}

namespace {

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a + 0.0);
  // Values that round to zero keep their sign in printf; drop it.
  if (buf[0] == '-' && std::strtod(buf, nullptr) == 0.0) return buf + 1;
  return buf;
}

std::uint8_t mask_of(const RobotState& s) {
  return std::uint8_t((s.attached_a ? 1 : 0) | (s.attached_b ? 2 : 0));
}

}  // namespace

struct Mission::Impl {
  EnvironmentMap map;
  RobotState robot;
  MissionConfig cfg;
  MissionSetup setup;
  MissionState st = MissionState::kIdle;
  MissionReport rep;
  std::mt19937_64 rng;

  std::optional<FootholdPlan> plan;
  std::size_t idx = 0;
  int retries = 0;
  DenyList deny;
  bool pending_replan = false;
  std::string replan_reason;
  GraspResult grip_result;

  Impl(EnvironmentMap m, RobotState r, MissionConfig c, MissionSetup s)
      : map(std::move(m)), robot(std::move(r)), cfg(std::move(c)), setup(std::move(s)),
        rng(cfg.noise_seed) {
    cfg.validate();
    cfg.goal.validate(map);
    setup.kin.validate();
    setup.planner.validate();
    setup.gait.validate();
    setup.servo.validate();
    setup.camera.validate();
    setup.grasp.validate();
    if (robot.anchor_count() == 0) throw Error(ErrorCode::kNoAnchor, "mission: no foot attached");
    rep.trajectory.dt = setup.gait.dt;
  }

  double now() const {
    return rep.trajectory.samples.empty() ? 0.0 : rep.trajectory.samples.back().t;
  }

  void event(const std::string& name, const std::string& detail = {},
             std::optional<Limb> limb = std::nullopt, const GraspPoint* g = nullptr) {
    MissionEvent e;
    e.t = now();
    e.state = st;
    e.event = name;
    e.detail = detail;
    e.limb = limb;
    if (g && !g->rail_id.empty()) {
      e.rail = g->rail_id;
      e.s = g->s;
    }
    rep.events.push_back(std::move(e));
  }

  // Appends samples and watches for obstacles from every base position.
  std::vector<Obstacle> play(const Trajectory& traj, std::uint8_t mask) {
    std::vector<Obstacle> fresh;
    for (const TrajectorySample& in : traj.samples) {
      TrajectorySample s = in;
      s.t = rep.trajectory.samples.empty() ? 0.0 : rep.trajectory.samples.back().t + setup.gait.dt;
      if (!rep.trajectory.samples.empty())
        rep.metrics.base_path_length +=
            (s.base.position - rep.trajectory.samples.back().base.position).norm();
      rep.trajectory.samples.push_back(s);
      rep.anchors.push_back(mask);
      for (const Obstacle& o : map.reveal_obstacles(s.base.position)) {
        event("obstacle_revealed",
              o.rail_id + " [" + fmt("%.6g", o.interval.lo) + ", " + fmt("%.6g", o.interval.hi) + "]");
        fresh.push_back(o);
      }
    }
    return fresh;
  }

  void hold(StepPhase phase) {
    Trajectory t;
    TrajectorySample s;
    s.base = robot.base;
    s.joints_a = robot.joints_a;
    s.joints_b = robot.joints_b;
    s.phase = phase;
    t.samples.push_back(s);
    play(t, mask_of(robot));
  }

  const PlanStep& current_step() const { return plan->steps[idx]; }

  std::optional<PlanNode> current_node() const {
    if (!robot.attached_a || !robot.attached_b) return std::nullopt;
    return PlanNode{*robot.attached_a, *robot.attached_b};
  }

  bool goal_met() const {
    const auto node = current_node();
    return node && cfg.goal.satisfied(*node);
  }

  MissionState fault(const std::string& name, const std::string& detail) {
    event(name, detail);
    return MissionState::kFault;
  }

  MissionState adopt(FootholdPlan p) {
    event("plan_adopted", "steps: " + std::to_string(p.steps.size()) + ", cost: " +
                              fmt("%.6f", p.total_cost));
    rep.plans.push_back(p);
    plan = std::move(p);
    idx = 0;
    retries = 0;
    pending_replan = false;
    if (plan->steps.empty()) {
      if (goal_met()) {
        event("goal_reached");
        return MissionState::kGoalReached;
      }
      return fault("fault", "empty plan but goal not met");
    }
    return MissionState::kExecutingStep;
  }

  MissionState planning() {
    if (cfg.fixed_plan) {
      const PlanNode& s = cfg.fixed_plan->start;
      const auto node = current_node();
      if (!node || !node->a.same_site(s.a) || !node->b.same_site(s.b))
        return fault("fault", "plan start does not match the robot's footholds");
      return adopt(*cfg.fixed_plan);
    }
    try {
      return adopt(replan(map, robot, cfg.goal, setup.planner, setup.kin, deny));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoPath) return fault("no_path", e.what());
      return fault("fault", e.what());
    }
  }

  MissionState failure(const std::string& what) {
    const PlanStep& step = current_step();
    ++retries;
    if (retries <= cfg.servo_retries) {
      event("retry", what + " (attempt " + std::to_string(retries + 1) + ")", step.swing, &step.to);
      return MissionState::kAligning;
    }
    deny.add(step.to);
    event("foothold_denied", what, step.swing, &step.to);
    replan_reason = "grasp failure";
    return MissionState::kReplanning;
  }

  bool blocks_remaining(std::size_t from) const {
    for (std::size_t i = from; i < plan->steps.size(); ++i) {
      const GraspPoint& g = plan->steps[i].to;
      if (map.is_blocked(g.rail_id, g.s)) return true;
    }
    return false;
  }

  MissionState executing() {
    const PlanStep step = current_step();
    const Limb swing = step.swing;
    if (!robot.attached(other(swing)))
      return fault("fault", "stance foot of the next step is not attached");
    if (map.is_blocked(step.to.rail_id, step.to.s)) {
      event("target_blocked", "planned foothold is blocked", swing, &step.to);
      replan_reason = "obstacle";
      return MissionState::kReplanning;
    }

    const Pose estimate = localize(robot, setup.kin, cfg.localization_noise_sigma, rng);
    event("localized", fmt("%.6f", estimate.position.x()) + " " + fmt("%.6f", estimate.position.y()) +
                           " " + fmt("%.6f", estimate.position.z()));
    std::optional<Pose> handoff;
    if (cfg.localization_noise_sigma > 0.0) {
      // The arm is commanded in the estimated base frame, so the hand arrives
      // where those joint angles put it from the true base.
      const LimbParams& limb = setup.kin.limb(swing);
      const Pose hand = forward_kinematics(limb, robot.base, robot.joints(swing));
      const Pose pre = pre_grasp_pose(step.to, hand.rotation().col(0), setup.gait.clearance);
      try {
        const GraspPoint& stance = *robot.attached(other(swing));
        const RobotState next = swing == Limb::A
                                    ? solve_double_support(setup.kin, step.to, stance, robot.base)
                                    : solve_double_support(setup.kin, stance, step.to, robot.base);
        const Pose believed = estimate * robot.base.inverse() * next.base;
        IkOptions opt;
        opt.position_priority = true;
        const IkResult ik = inverse_kinematics(limb, believed, pre, next.joints(swing), opt);
        if (ik.converged) handoff = forward_kinematics(limb, next.base, ik.q);
      } catch (const Error&) {
        // generate_step reports the infeasible pair below
      }
    }

    GaitStep g;
    try {
      g = generate_step(robot, step, setup.kin, setup.gait, handoff);
    } catch (const Error& e) {
      deny.add(step.to);
      event("step_infeasible", e.what(), swing, &step.to);
      replan_reason = "infeasible step";
      return MissionState::kReplanning;
    }

    if (robot.attached(swing)) {
      const GraspPoint from = *robot.attached(swing);
      robot = release(robot, swing);
      event("release", {}, swing, &from);
    }
    event("swing", "to " + step.to.rail_id + " @ " + fmt("%.6g", step.to.s), swing, &step.to);
    const std::vector<Obstacle> fresh = play(g.trajectory, mask_of(robot));
    robot = g.end_state;

    if (!fresh.empty()) {
      if (map.is_blocked(step.to.rail_id, step.to.s)) {
        event("target_blocked", "foothold revealed blocked during the swing", swing, &step.to);
        replan_reason = "obstacle";
        return MissionState::kReplanning;
      }
      if (blocks_remaining(idx + 1)) {
        pending_replan = true;
        event("replan_pending", "obstacle on a later foothold");
      }
    }
    return MissionState::kAligning;
  }

  MissionState aligning() {
    const PlanStep& step = current_step();
    const Limb swing = step.swing;
    const LimbParams& limb = setup.kin.limb(swing);
    Pose hand = forward_kinematics(limb, robot.base, robot.joints(swing));

    if (retries > 0) {
      // Back off to the approach pose before servoing again.
      const Pose pre = pre_grasp_pose(step.to, hand.rotation().col(0), setup.servo.standoff);
      try {
        const Trajectory back = move_hand(robot, swing, pre, setup.kin, setup.gait, StepPhase::kAlign);
        play(back, mask_of(robot));
        robot.joints_a = back.samples.back().joints_a;
        robot.joints_b = back.samples.back().joints_b;
      } catch (const Error& e) {
        return failure(std::string("retreat failed: ") + e.what());
      }
      hand = forward_kinematics(limb, robot.base, robot.joints(swing));
    }

    const ServoResult res =
        run_servo(hand, step.to,
                  make_markers(step.to, setup.servo.marker_length, setup.servo.marker_width),
                  setup.camera, setup.servo);
    ServoRun run;
    run.run = int(rep.servo_runs.size());
    run.limb = swing;
    run.target = step.to;
    run.status = res.status;
    run.trace = res.trace;
    rep.servo_runs.push_back(std::move(run));
    rep.metrics.servo_iterations_total += res.iterations;

    // The arm follows the camera pose iteration by iteration.
    Trajectory follow;
    JointVector q = robot.joints(swing);
    for (std::size_t k = 1; k < res.hand_poses.size(); ++k) {
      // A 5-joint limb cannot match every camera pose exactly; the claws go
      // where commanded and the tilt is left to the grasp tolerances.
      IkOptions opt;
      opt.position_priority = true;
      const IkResult ik = inverse_kinematics(limb, robot.base, res.hand_poses[k], q, opt);
      if (!ik.converged) {
        play(follow, mask_of(robot));
        robot.joints(swing) = q;
        event("servo_failed", "servo pose out of the limb workspace", swing, &step.to);
        return failure("servo");
      }
      q = ik.q;
      TrajectorySample s;
      s.base = robot.base;
      s.joints_a = robot.joints_a;
      s.joints_b = robot.joints_b;
      (swing == Limb::A ? s.joints_a : s.joints_b) = q;
      s.phase = StepPhase::kAlign;
      follow.samples.push_back(s);
    }
    play(follow, mask_of(robot));
    robot.joints(swing) = q;

    if (!res.converged()) {
      event("servo_failed", std::string(to_string(res.status)) + ": " + res.detail, swing, &step.to);
      return failure("servo");
    }
    event("servo_converged", "iterations: " + std::to_string(res.iterations), swing, &step.to);
    return MissionState::kGrasping;
  }

  MissionState grasping() {
    const PlanStep& step = current_step();
    const Limb swing = step.swing;
    const Pose hand = forward_kinematics(setup.kin.limb(swing), robot.base, robot.joints(swing));
    PressResult pr;
    try {
      pr = press(hand, step.to, setup.grasp, setup.gripper);
      const Trajectory down =
          move_hand(robot, swing, pr.settled_pose, setup.kin, setup.gait, StepPhase::kPress, true);
      play(down, mask_of(robot));
      robot.joints_a = down.samples.back().joints_a;
      robot.joints_b = down.samples.back().joints_b;
    } catch (const Error& e) {
      event("press_failed", e.what(), swing, &step.to);
      grip_result = GraspResult{};
      grip_result.failed_axes.emplace_back(to_string(e.code()));
      return MissionState::kVerifying;
    }
    event("press", "contacts: " + std::to_string(int(pr.contacts[0]) + int(pr.contacts[1]) +
                                                 int(pr.contacts[2]) + int(pr.contacts[3])),
          swing, &step.to);

    const GraspResult alignment = check_alignment(pr.settled_pose, step.to, setup.grasp);
    grip_result = grip(alignment, pr.contacts, !map.has_defect(step.to.rail_id, step.to.s));
    if (grip_result.success) {
      try {
        robot = snap_to_grasp(robot, swing, step.to, setup.kin);
      } catch (const Error& e) {
        grip_result.success = false;
        grip_result.failed_axes.emplace_back("snap");
      }
    }
    if (grip_result.success) {
      event("grip", {}, swing, &step.to);
    } else {
      std::string axes;
      for (const std::string& a : grip_result.failed_axes) axes += (axes.empty() ? "" : ",") + a;
      event("grip_failed", axes, swing, &step.to);
    }
    hold(StepPhase::kGrip);
    return MissionState::kVerifying;
  }

  MissionState verifying() {
    const PlanStep& step = current_step();
    const Limb swing = step.swing;
    bool ok = grip_result.success && robot.attached(swing).has_value();
    if (ok) {
      const Vec3 foot =
          forward_kinematics(setup.kin.limb(swing), robot.base, robot.joints(swing)).position;
      ok = (foot - step.to.position).norm() <= 1e-6;
    }
    hold(StepPhase::kVerify);
    if (!ok) return failure("grip");

    event("step_verified", {}, swing, &step.to);
    ++rep.metrics.steps_executed;
    ++idx;
    retries = 0;
    if (goal_met()) {
      event("goal_reached");
      return MissionState::kGoalReached;
    }
    if (pending_replan || blocks_remaining(idx)) {
      replan_reason = "obstacle";
      return MissionState::kReplanning;
    }
    if (idx >= plan->steps.size()) {
      replan_reason = "plan exhausted";
      return MissionState::kReplanning;
    }
    return MissionState::kExecutingStep;
  }

  MissionState replanning() {
    if (cfg.fixed_plan) return fault("fault", "replay cannot re-plan (" + replan_reason + ")");
    if (rep.metrics.replans >= cfg.replan_limit)
      return fault("fault", "re-plan limit reached (" + replan_reason + ")");
    ++rep.metrics.replans;
    event("replan", replan_reason);
    try {
      return adopt(replan(map, robot, cfg.goal, setup.planner, setup.kin, deny));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoPath) return fault("no_path", e.what());
      return fault("fault", e.what());
    }
  }

  MissionState transition() {
    switch (st) {
      case MissionState::kIdle:
        event("mission_start");
        return MissionState::kPlanning;
      case MissionState::kPlanning: return planning();
      case MissionState::kExecutingStep: return executing();
      case MissionState::kAligning: return aligning();
      case MissionState::kGrasping: return grasping();
      case MissionState::kVerifying: return verifying();
      case MissionState::kReplanning: return replanning();
      case MissionState::kGoalReached:
      case MissionState::kFault: break;
    }
    throw Error(ErrorCode::kInvalidState, "mission already finished");
  }
};

Mission::Mission(EnvironmentMap map, RobotState initial, MissionConfig config, MissionSetup setup)
    : impl_(std::make_unique<Impl>(std::move(map), std::move(initial), std::move(config),
                                   std::move(setup))) {}
Mission::~Mission() = default;
Mission::Mission(Mission&&) noexcept = default;
Mission& Mission::operator=(Mission&&) noexcept = default;

MissionState Mission::state() const { return impl_->st; }

bool Mission::terminal() const {
  return impl_->st == MissionState::kGoalReached || impl_->st == MissionState::kFault;
}

MissionState Mission::step() {
  if (terminal()) throw Error(ErrorCode::kInvalidState, "mission already finished");
  MissionState next;
  try {
    next = impl_->transition();
  } catch (const Error& e) {
    next = impl_->fault("fault", e.what());
  }
  impl_->st = next;
  impl_->rep.final_state = next;
  impl_->rep.metrics.simulated_duration = impl_->now();
  return next;
}

const MissionReport& Mission::report() const { return impl_->rep; }
const RobotState& Mission::robot() const { return impl_->robot; }
const EnvironmentMap& Mission::map() const { return impl_->map; }
const FootholdPlan* Mission::current_plan() const {
  return impl_->plan ? &*impl_->plan : nullptr;
}

MissionReport run_mission(EnvironmentMap map, const RobotState& initial, const MissionConfig& config,
                          const MissionSetup& setup) {
  Mission m(std::move(map), initial, config, setup);
  while (!m.terminal()) m.step();
  return m.report();
}

}  // namespace mlivr
