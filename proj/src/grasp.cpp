#include "mlivr/grasp.hpp"

#include <algorithm>
#include <cmath>

#include "mlivr/error.hpp"

namespace mlivr {

namespace {

constexpr double kBoundaryEps = 1e-9;

Mat3 rail_frame(const GraspPoint& g, const Vec3& hand_x) {
  const Vec3 z = g.face_normal.normalized();
  Vec3 x = (g.rail_dir - g.rail_dir.dot(z) * z).normalized();
  if (x.dot(hand_x) < 0.0) x = -x;
  Mat3 r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  return r;
}

Mat3 zyx(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

double give(double angle, double tol) {
  const double rest = std::max(0.0, std::abs(angle) - tol);
  return angle < 0.0 ? -rest : rest;
}

}  // namespace

void GraspTolerance::validate() const {
  if (!(lateral > 0.0 && normal_gap > 0.0 && yaw > 0.0 && pitch_roll > 0.0 && contact_epsilon > 0.0))
    throw Error(ErrorCode::kValidation, "grasp: tolerances must be positive");
}

std::array<Vec3, 4> GripperGeometry::corners() const {
  return {Vec3(half_length, half_width, 0.0), Vec3(-half_length, half_width, 0.0),
          Vec3(-half_length, -half_width, 0.0), Vec3(half_length, -half_width, 0.0)};
}

GraspResult check_alignment(const Pose& hand_pose, const GraspPoint& target,
                            const GraspTolerance& tol) {
  const Mat3 hand = hand_pose.rotation();
  const Mat3 rail = rail_frame(target, hand.col(0));
  const Vec3 d = hand_pose.position - target.position;
  const Mat3 rel = rail.transpose() * hand;

  GraspResult r;
  r.errors.lateral = d.dot(rail.col(1));
  r.errors.normal = d.dot(rail.col(2));
  r.errors.yaw = std::atan2(rel(1, 0), rel(0, 0));
  r.errors.pitch = std::asin(std::clamp(-rel(2, 0), -1.0, 1.0));
  r.errors.roll = std::atan2(rel(2, 1), rel(2, 2));

  auto check = [&](const char* axis, double value, double limit) {
    if (std::abs(value) > limit + kBoundaryEps) r.failed_axes.emplace_back(axis);
  };
  check("lateral", r.errors.lateral, tol.lateral);
  check("normal", r.errors.normal, tol.normal_gap);
  check("yaw", r.errors.yaw, tol.yaw);
  check("pitch", r.errors.pitch, tol.pitch_roll);
  check("roll", r.errors.roll, tol.pitch_roll);
  r.success = r.failed_axes.empty();
  return r;
}

PressResult press(const Pose& hand_pose, const GraspPoint& target, const GraspTolerance& tol,
                  const GripperGeometry& gripper) {
  const GraspResult a = check_alignment(hand_pose, target, tol);
  if (a.errors.normal < -kBoundaryEps)
    throw Error(ErrorCode::kInvalidState, "press: hand is below the face");
  if (std::abs(a.errors.pitch) > 2.0 * tol.pitch_roll &&
      std::abs(a.errors.roll) > 2.0 * tol.pitch_roll)
    throw Error(ErrorCode::kJam, "press: pitch and roll both beyond twice the tolerance");

  const Mat3 rail = rail_frame(target, hand_pose.rotation().col(0));
  const Mat3 settled = rail * zyx(a.errors.yaw, give(a.errors.pitch, tol.pitch_roll),
                                  give(a.errors.roll, tol.pitch_roll));
  const Vec3 n = rail.col(2);

  PressResult out;
  const auto corners = gripper.corners();
  double lowest = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    out.corner_heights[i] = n.dot(settled * corners[i]);
    lowest = i == 0 ? out.corner_heights[i] : std::min(lowest, out.corner_heights[i]);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    out.corner_heights[i] -= lowest;
    out.contacts[i] = out.corner_heights[i] <= tol.contact_epsilon;
  }

  const Vec3 d = hand_pose.position - target.position;
  out.settled_pose.position =
      target.position + d.dot(rail.col(0)) * rail.col(0) + d.dot(rail.col(1)) * rail.col(1) - lowest * n;
  out.settled_pose.orientation = Quat(settled);
  return out;
}

GraspResult grip(const GraspResult& alignment, const Contacts& contacts, bool groove_ok) {
  GraspResult r = alignment;
  r.contacts = contacts;
  for (std::size_t i = 0; i < 4; ++i)
    if (!contacts[i]) r.failed_axes.push_back("contact_" + std::to_string(i));
  if (!groove_ok) r.failed_axes.emplace_back("claw_lock");
  r.success = r.failed_axes.empty();
  if (r.success) r.errors = GraspErrors{};
  return r;
}

RobotState snap_to_grasp(const RobotState& state, Limb limb, const GraspPoint& target,
                         const RobotModel& kin) {
  const LimbParams& params = kin.limb(limb);
  const Pose hand = forward_kinematics(params, state.base, state.joints(limb));
  IkOptions opt;
  opt.tol_position = 1e-11;
  opt.tol_orientation = 1e-11;
  const IkResult ik = inverse_kinematics(params, state.base, grasp_pose(target, hand.rotation().col(0)),
                                         state.joints(limb), opt);
  if (!ik.converged)
    throw Error(ErrorCode::kInfeasible, "grip: limb cannot reach the grasp pose");
  RobotState out = state;
  out.joints(limb) = ik.q;
  out.attached(limb) = target;
  return out;
}

RobotState release(const RobotState& state, Limb limb) {
  if (!state.attached(limb)) return state;
  if (!state.attached(other(limb)))
    throw Error(ErrorCode::kLastAnchor, std::string("release: limb ") + to_string(limb) +
                                            " is the last anchor");
  RobotState out = state;
  out.attached(limb).reset();
  return out;
}

}  // namespace mlivr
