#pragma once

#include <optional>
#include <vector>

#include "mlivr/kinematics.hpp"
#include "mlivr/planner.hpp"

namespace mlivr {

enum class StepPhase { kDetach, kSwing, kAlign, kPress, kGrip, kVerify, kBaseShift };

const char* to_string(StepPhase p);

struct GaitConfig {
  double dt = 0.02;
  double clearance = 0.05;       // lift off the rail, and pre-grasp standoff
  double joint_rate_limit = 0.5;  // rad/s, every joint
  double path_resolution = 0.005;  // metres between IK solves before retiming

  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  Pose base;
  JointVector joints_a = JointVector::Zero();
  JointVector joints_b = JointVector::Zero();
  StepPhase phase = StepPhase::kSwing;

  const JointVector& joints(Limb l) const { return l == Limb::A ? joints_a : joints_b; }
};

struct Trajectory {
  double dt = 0.02;
  std::vector<TrajectorySample> samples;
  // Time the joints need at the rate limit (with 5 % headroom), before rounding to dt.
  double motion_time = 0.0;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
};

struct GaitStep {
  PlanStep plan_step;
  Pose target_pose;     // gripper pose on the target grasp point
  Pose pre_grasp_pose;  // target_pose lifted by the clearance along the face normal
  Trajectory trajectory;
  RobotState end_state;  // swing foot detached at the hand-off pose
};

// Lift, traverse, and approach poses at about `resolution` spacing. The first
// pose is start_pose; the last is the pre-grasp pose.
std::vector<Pose> swing_path(const Pose& start_pose, const GraspPoint& target, double clearance,
                             double resolution = 0.005);

// Pre-grasp pose for `target`, claw axis signed to agree with `reference_x`.
Pose pre_grasp_pose(const GraspPoint& target, const Vec3& reference_x, double clearance);

// Expands one plan step. The base moves from state.base to the double-support
// pose of the new foot pair while the swing foot travels. `handoff` replaces
// the pre-grasp pose as the swing end point (used when the base estimate is off).
// Throws Error(kInfeasible) naming the failing sample.
GaitStep generate_step(const RobotState& state, const PlanStep& step, const RobotModel& kin,
                       const GaitConfig& config, const std::optional<Pose>& handoff = std::nullopt);

// Straight-line hand motion of one limb with the base fixed and the other
// foot pinned. Used for the press and the retreat around a grasp. With
// `position_only` the orientation is tracked as closely as the limb allows.
Trajectory move_hand(const RobotState& state, Limb limb, const Pose& target, const RobotModel& kin,
                     const GaitConfig& config, StepPhase phase, bool position_only = false);

// Double-support base motion with both feet pinned.
Trajectory base_shift(const RobotState& state, const Pose& target_base, const RobotModel& kin,
                      const GaitConfig& config);

}  // namespace mlivr
