#include "mlivr/gait.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "mlivr/error.hpp"

namespace mlivr {

const char* to_string(StepPhase p) {
  switch (p) {
    case StepPhase::kDetach: return "DETACH";
    case StepPhase::kSwing: return "SWING";
    case StepPhase::kAlign: return "ALIGN";
    case StepPhase::kPress: return "PRESS";
    case StepPhase::kGrip: return "GRIP";
    case StepPhase::kVerify: return "VERIFY";
    case StepPhase::kBaseShift: return "BASE_SHIFT";
  }
  return "?";
}

void GaitConfig::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorCode::kValidation, "gait.dt: must be positive");
  if (!(clearance >= 0.0)) throw Error(ErrorCode::kValidation, "gait.clearance: must be >= 0");
  if (!(joint_rate_limit > 0.0))
    throw Error(ErrorCode::kValidation, "gait.joint_rate_limit: must be positive");
  if (!(path_resolution > 0.0))
    throw Error(ErrorCode::kValidation, "gait.path_resolution: must be positive");
}

namespace {

constexpr double kRateHeadroom = 0.95;

// Lift segment then straight traverse, orientation slerped over the whole length.
struct SwingCurve {
  Vec3 p0, p1, p2;
  Quat r0, r2;
  double lift = 0.0;
  double total = 0.0;

  SwingCurve(const Pose& start, const Pose& end, double clearance) {
    p0 = start.position;
    p1 = start.position + clearance * start.rotation().col(2);
    p2 = end.position;
    r0 = start.orientation;
    r2 = end.orientation;
    lift = (p1 - p0).norm();
    total = lift + (p2 - p1).norm();
  }

  Pose at(double u) const {
    Pose p;
    p.orientation = r0.slerp(u, r2);
    const double d = u * total;
    if (total <= 0.0) {
      p.position = p2;
    } else if (d <= lift) {
      p.position = lift > 0.0 ? p0 + (d / lift) * (p1 - p0) : p0;
    } else {
      const double rest = total - lift;
      p.position = p1 + ((d - lift) / rest) * (p2 - p1);
    }
    if (u >= 1.0) p.position = p2;
    return p;
  }

  bool lifting(double u) const { return u * total <= lift + 1e-12; }

  // The base stays put while the foot lifts, then tracks the traverse.
  double traverse_fraction(double u) const {
    const double rest = total - lift;
    if (rest <= 0.0) return u;
    return std::clamp((u * total - lift) / rest, 0.0, 1.0);
  }

  std::vector<double> grid(double resolution) const {
    std::vector<double> us{0.0};
    auto add = [&](double from, double to) {
      const double len = to - from;
      const int n = std::max(1, int(std::ceil(len / resolution - 1e-9)));
      for (int i = 1; i <= n; ++i) us.push_back((from + len * i / n) / total);
    };
    if (total <= 0.0) return {1.0};
    if (lift > 0.0) add(0.0, lift);
    if (total - lift > 0.0) add(lift, total);
    us.back() = 1.0;
    return us;
  }
};

struct Solved {
  Pose base;
  JointVector qa, qb;
  StepPhase phase;
};

using Solve = std::function<bool(double u, const JointVector& seed_a, const JointVector& seed_b,
                                 Solved& out)>;

double joint_change(const Solved& a, const Solved& b) {
  return std::max((a.qa - b.qa).cwiseAbs().maxCoeff(), (a.qb - b.qb).cwiseAbs().maxCoeff());
}

[[noreturn]] void fail(const char* what, std::size_t index) {
  throw Error(ErrorCode::kInfeasible,
              std::string(what) + ": inverse kinematics failed at sample " + std::to_string(index));
}

// Solves on the fine grid, then resamples uniformly in joint progress so that
// every joint stays under the rate limit.
Trajectory retime(const std::vector<double>& fine_us, const Solve& solve, const JointVector& qa0,
                  const JointVector& qb0, const GaitConfig& config, const char* what) {
  std::vector<Solved> fine(fine_us.size());
  std::vector<double> progress(fine_us.size(), 0.0);
  JointVector sa = qa0, sb = qb0;
  for (std::size_t k = 0; k < fine_us.size(); ++k) {
    if (!solve(fine_us[k], sa, sb, fine[k])) fail(what, k);
    sa = fine[k].qa;
    sb = fine[k].qb;
    if (k > 0) progress[k] = progress[k - 1] + joint_change(fine[k - 1], fine[k]);
  }

  Trajectory traj;
  traj.dt = config.dt;
  const double total = progress.back();
  const double step_limit = config.joint_rate_limit * config.dt;
  traj.motion_time = total / (kRateHeadroom * config.joint_rate_limit);

  auto emit = [&](const Solved& s) {
    TrajectorySample out;
    out.t = double(traj.samples.size()) * config.dt;
    out.base = s.base;
    out.joints_a = s.qa;
    out.joints_b = s.qb;
    out.phase = s.phase;
    traj.samples.push_back(out);
  };

  if (fine_us.size() == 1 || total <= 0.0) {
    emit(fine.back());
    return traj;
  }

  auto u_at = [&](double c) {
    const auto it = std::lower_bound(progress.begin(), progress.end(), c);
    if (it == progress.begin()) return fine_us.front();
    if (it == progress.end()) return fine_us.back();
    const std::size_t k = std::size_t(it - progress.begin());
    const double span = progress[k] - progress[k - 1];
    const double w = span > 0.0 ? (c - progress[k - 1]) / span : 1.0;
    return fine_us[k - 1] + w * (fine_us[k] - fine_us[k - 1]);
  };

  long n = std::max(1L, long(std::ceil(traj.motion_time / config.dt - 1e-9)));
  for (int attempt = 0; attempt < 12; ++attempt) {
    std::vector<Solved> coarse(std::size_t(n) + 1);
    JointVector ca = qa0, cb = qb0;
    bool ok = true;
    for (long i = 0; i <= n; ++i) {
      const double u = i == n ? 1.0 : u_at(total * double(i) / double(n));
      if (!solve(u, ca, cb, coarse[std::size_t(i)])) fail(what, std::size_t(i));
      ca = coarse[std::size_t(i)].qa;
      cb = coarse[std::size_t(i)].qb;
      if (i > 0 && joint_change(coarse[std::size_t(i) - 1], coarse[std::size_t(i)]) > step_limit) {
        ok = false;
        break;
      }
    }
    if (ok) {
      for (const Solved& s : coarse) emit(s);
      return traj;
    }
    n = long(std::ceil(double(n) * 1.25)) + 1;
  }
  throw Error(ErrorCode::kInfeasible, std::string(what) + ": joint rate limit cannot be met");
}

bool solve_pinned(const LimbParams& limb, const Pose& base, const Pose& foot, const JointVector& seed,
                  JointVector& q) {
  const IkResult r = inverse_kinematics(limb, base, foot, seed);
  q = r.q;
  return r.converged;
}

}  // namespace

Pose pre_grasp_pose(const GraspPoint& target, const Vec3& reference_x, double clearance) {
  Pose p = grasp_pose(target, reference_x);
  p.position += clearance * target.face_normal;
  return p;
}

std::vector<Pose> swing_path(const Pose& start_pose, const GraspPoint& target, double clearance,
                             double resolution) {
  const Pose end = pre_grasp_pose(target, start_pose.rotation().col(0), clearance);
  if ((start_pose.position - target.position).norm() < 1e-12) return {end};
  const SwingCurve curve(start_pose, end, clearance);
  std::vector<Pose> out;
  for (double u : curve.grid(resolution)) out.push_back(curve.at(u));
  return out;
}

GaitStep generate_step(const RobotState& state, const PlanStep& step, const RobotModel& kin,
                       const GaitConfig& config, const std::optional<Pose>& handoff) {
  config.validate();
  const Limb swing = step.swing;
  const Limb stance = other(swing);
  if (!state.attached(stance))
    throw Error(ErrorCode::kInvalidState, "generate_step: stance foot is not attached");

  const LimbParams& swing_limb = kin.limb(swing);
  const LimbParams& stance_limb = kin.limb(stance);
  const Pose start = forward_kinematics(swing_limb, state.base, state.joints(swing));
  const Pose stance_foot = forward_kinematics(stance_limb, state.base, state.joints(stance));

  GaitStep out;
  out.plan_step = step;
  out.target_pose = grasp_pose(step.to, start.rotation().col(0));
  out.pre_grasp_pose = pre_grasp_pose(step.to, start.rotation().col(0), config.clearance);
  const Pose end = handoff ? *handoff : out.pre_grasp_pose;

  const GraspPoint& stance_grasp = *state.attached(stance);
  const RobotState next = swing == Limb::A
                              ? solve_double_support(kin, step.to, stance_grasp, state.base)
                              : solve_double_support(kin, stance_grasp, step.to, state.base);
  const Pose base0 = state.base;
  const Pose base1 = next.base;

  const SwingCurve curve(start, end, config.clearance);
  const Solve solve = [&](double u, const JointVector& seed_a, const JointVector& seed_b, Solved& s) {
    s.base = interpolate(base0, base1, curve.traverse_fraction(u));
    s.phase = curve.lifting(u) && u < 1.0 ? StepPhase::kDetach : StepPhase::kSwing;
    JointVector& q_stance = stance == Limb::A ? s.qa : s.qb;
    JointVector& q_swing = swing == Limb::A ? s.qa : s.qb;
    const JointVector& seed_stance = stance == Limb::A ? seed_a : seed_b;
    const JointVector& seed_swing = swing == Limb::A ? seed_a : seed_b;
    if (!solve_pinned(stance_limb, s.base, stance_foot, seed_stance, q_stance)) return false;
    IkOptions opt;
    opt.position_priority = u < 1.0;
    const IkResult r = inverse_kinematics(swing_limb, s.base, curve.at(u), seed_swing, opt);
    q_swing = r.q;
    return r.converged;
  };

  out.trajectory = retime(curve.grid(config.path_resolution), solve, state.joints_a,
                          state.joints_b, config, "swing");

  // Hand-off to visual servoing holds the final pose for one tick.
  TrajectorySample align = out.trajectory.samples.back();
  align.t += config.dt;
  align.phase = StepPhase::kAlign;
  out.trajectory.samples.push_back(align);

  out.end_state = state;
  out.end_state.base = align.base;
  out.end_state.joints_a = align.joints_a;
  out.end_state.joints_b = align.joints_b;
  out.end_state.attached(swing).reset();
  return out;
}

Trajectory move_hand(const RobotState& state, Limb limb, const Pose& target, const RobotModel& kin,
                     const GaitConfig& config, StepPhase phase, bool position_only) {
  config.validate();
  const Limb held = other(limb);
  const LimbParams& moving = kin.limb(limb);
  const LimbParams& pinned = kin.limb(held);
  const Pose start = forward_kinematics(moving, state.base, state.joints(limb));
  const Pose foot = forward_kinematics(pinned, state.base, state.joints(held));
  const SwingCurve curve(start, target, 0.0);

  const double angle = rotation_angle_between(start.orientation, target.orientation);
  const double length = curve.total + kin.reach * angle;
  std::vector<double> us{0.0};
  if (length > 0.0) {
    const int n = std::max(1, int(std::ceil(length / config.path_resolution - 1e-9)));
    for (int i = 1; i <= n; ++i) us.push_back(double(i) / n);
  }

  const Solve solve = [&](double u, const JointVector& seed_a, const JointVector& seed_b, Solved& s) {
    s.base = state.base;
    s.phase = phase;
    JointVector& q_move = limb == Limb::A ? s.qa : s.qb;
    JointVector& q_held = limb == Limb::A ? s.qb : s.qa;
    const JointVector& seed_move = limb == Limb::A ? seed_a : seed_b;
    const JointVector& seed_held = limb == Limb::A ? seed_b : seed_a;
    if (!solve_pinned(pinned, s.base, foot, seed_held, q_held)) return false;
    IkOptions opt;
    opt.position_priority = position_only;
    const IkResult r = inverse_kinematics(moving, s.base, curve.at(u), seed_move, opt);
    q_move = r.q;
    return r.converged;
  };
  return retime(us, solve, state.joints_a, state.joints_b, config, "hand move");
}

Trajectory base_shift(const RobotState& state, const Pose& target_base, const RobotModel& kin,
                      const GaitConfig& config) {
  config.validate();
  if (state.anchor_count() != 2)
    throw Error(ErrorCode::kInvalidState, "base_shift: both feet must be attached");
  const Pose foot_a = forward_kinematics(kin.limb_a, state.base, state.joints_a);
  const Pose foot_b = forward_kinematics(kin.limb_b, state.base, state.joints_b);

  const double dist = (target_base.position - state.base.position).norm();
  const double angle = rotation_angle_between(state.base.orientation, target_base.orientation);
  // Rotation counted at the limb reach so both parts get a similar resolution.
  const double length = dist + kin.reach * angle;
  std::vector<double> us{0.0};
  if (length > 0.0) {
    const int n = std::max(1, int(std::ceil(length / config.path_resolution - 1e-9)));
    for (int i = 1; i <= n; ++i) us.push_back(double(i) / n);
  }

  const Solve solve = [&](double u, const JointVector& seed_a, const JointVector& seed_b, Solved& s) {
    s.base = interpolate(state.base, target_base, u);
    s.phase = StepPhase::kBaseShift;
    return solve_pinned(kin.limb_a, s.base, foot_a, seed_a, s.qa) &&
           solve_pinned(kin.limb_b, s.base, foot_b, seed_b, s.qb);
  };
  return retime(us, solve, state.joints_a, state.joints_b, config, "base shift");
}

}  // namespace mlivr
