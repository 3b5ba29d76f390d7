#pragma once

#include <array>
#include <string>
#include <vector>

#include "mlivr/env.hpp"
#include "mlivr/kinematics.hpp"

namespace mlivr {

struct GraspTolerance {
  double lateral = 0.01;
  double normal_gap = 0.005;
  double yaw = deg2rad(15.0);
  double pitch_roll = deg2rad(5.0);
  double contact_epsilon = 1e-3;

  void validate() const;
};

// Half extents of the gripper base; contact sensors sit on its corners.
struct GripperGeometry {
  double half_length = 0.04;  // along the claw axis
  double half_width = 0.02;

  std::array<Vec3, 4> corners() const;  // hand frame
};

struct GraspErrors {
  double lateral = 0.0;
  double normal = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

using Contacts = std::array<bool, 4>;

struct GraspResult {
  bool success = false;
  GraspErrors errors;
  std::vector<std::string> failed_axes;
  Contacts contacts{};
};

struct PressResult {
  Pose settled_pose;
  Contacts contacts{};
  std::array<double, 4> corner_heights{};
};

// Hand pose relative to the rail frame. Travel along the rail is free.
GraspResult check_alignment(const Pose& hand_pose, const GraspPoint& target,
                            const GraspTolerance& tol);

// Lowers the hand onto the face. Tilt up to the pitch/roll tolerance is taken
// up by the gripper compliance. Throws Error(kJam) when pitch and roll both
// exceed twice the tolerance, Error(kInvalidState) when the hand is below the face.
PressResult press(const Pose& hand_pose, const GraspPoint& target, const GraspTolerance& tol,
                  const GripperGeometry& gripper = {});

// Success iff the alignment passed, all contacts closed and the claws locked
// in the groove.
GraspResult grip(const GraspResult& alignment, const Contacts& contacts, bool groove_ok = true);

// Moves the limb onto the grasp pose exactly and marks it attached.
RobotState snap_to_grasp(const RobotState& state, Limb limb, const GraspPoint& target,
                         const RobotModel& kin);

// Throws Error(kLastAnchor) if `limb` is the only attached foot.
RobotState release(const RobotState& state, Limb limb);

}  // namespace mlivr
