#pragma once

#include <array>
#include <optional>
#include <string>

#include "mlivr/env.hpp"
#include "mlivr/geometry.hpp"

namespace mlivr {

enum class Limb { A = 0, B = 1 };

inline Limb other(Limb l) { return l == Limb::A ? Limb::B : Limb::A; }
inline const char* to_string(Limb l) { return l == Limb::A ? "A" : "B"; }

constexpr int kJointsPerLimb = 5;

using JointVector = Eigen::Matrix<double, kJointsPerLimb, 1>;
using LimbJacobian = Eigen::Matrix<double, 6, kJointsPerLimb>;

struct JointParams {
  Vec3 axis = Vec3::UnitZ();      // unit, in the parent frame
  Vec3 link_offset = Vec3::Zero();  // applied after the joint rotation
  double limit_lo = -kPi;
  double limit_hi = kPi;
};

struct LimbParams {
  Limb limb = Limb::A;
  Pose mount;  // base -> limb root
  std::array<JointParams, kJointsPerLimb> joints;

  double total_link_length() const;
  JointVector clamp(const JointVector& q) const;
  bool within_limits(const JointVector& q, double eps = 1e-12) const;
  void validate() const;
};

// Whole-robot kinematic description.
struct RobotModel {
  LimbParams limb_a;
  LimbParams limb_b;
  double reach = 0.6;       // per limb, from limb root
  double min_stride = 0.2;
  double max_stride = 1.2;
  double clearance = 0.1;   // base standoff from the foot midpoint along the mean face normal
  Quat base_orientation = Quat::Identity();  // base is kept parallel to the floor

  const LimbParams& limb(Limb l) const { return l == Limb::A ? limb_a : limb_b; }
  void validate() const;

  // Yaw-pitch-pitch-pitch-yaw limb with its root 0.1 m below the base
  // reference point, realising a 1.2 m stride between two 0.6 m reaches.
  static RobotModel default_model();
};

struct RobotState {
  Pose base;
  JointVector joints_a = JointVector::Zero();
  JointVector joints_b = JointVector::Zero();
  std::optional<GraspPoint> attached_a;
  std::optional<GraspPoint> attached_b;

  const JointVector& joints(Limb l) const { return l == Limb::A ? joints_a : joints_b; }
  JointVector& joints(Limb l) { return l == Limb::A ? joints_a : joints_b; }
  const std::optional<GraspPoint>& attached(Limb l) const {
    return l == Limb::A ? attached_a : attached_b;
  }
  std::optional<GraspPoint>& attached(Limb l) { return l == Limb::A ? attached_a : attached_b; }
  int anchor_count() const { return int(attached_a.has_value()) + int(attached_b.has_value()); }
};

Pose limb_root(const LimbParams& params, const Pose& base);

// End-effector frame: z points away from the gripper base (tool axis is -z),
// x is the claw axis that aligns with the rail.
Pose forward_kinematics(const LimbParams& params, const Pose& base, const JointVector& q);

// Geometric Jacobian in the module frame; rows 0-2 linear, 3-5 angular.
LimbJacobian limb_jacobian(const LimbParams& params, const Pose& base, const JointVector& q);

struct IkOptions {
  double tol_position = 1e-6;
  double tol_orientation = 1e-6;
  int max_iter = 200;
  double damping = 0.01;
  double step_clamp = 0.2;  // rad per iteration
  // Position is solved exactly; orientation is pursued only in the null space
  // of the position task. Used for mid-swing poses a 5-DOF limb cannot match.
  bool position_priority = false;
};

struct IkResult {
  JointVector q = JointVector::Zero();
  bool converged = false;
  double position_error = 0.0;
  double orientation_error = 0.0;
  int iterations = 0;
};

IkResult inverse_kinematics(const LimbParams& params, const Pose& base, const Pose& target,
                            const JointVector& seed, const IkOptions& options = {});

bool reachable(const LimbParams& params, const Pose& base, const Vec3& point, double reach);

// Gripper pose that anchors on `g`: z along the face normal, x along the rail
// with the sign that agrees with `reference_x`.
Pose grasp_pose(const GraspPoint& g, const Vec3& reference_x);

// Joint guess that points the limb at `target` with the right tool direction.
JointVector nominal_seed(const LimbParams& params, const Pose& base, const Pose& target);

// Base pose and joints holding both feet on their grasp points. Throws
// Error(kInfeasible) when the stride is out of bounds or the chain cannot close.
RobotState solve_double_support(const RobotModel& model, const GraspPoint& grasp_a,
                                const GraspPoint& grasp_b, const Pose& base_hint);

// Preferred base position for a foot pair (midpoint lifted along the mean normal).
Vec3 nominal_base_position(const RobotModel& model, const GraspPoint& a, const GraspPoint& b);

}  // namespace mlivr
