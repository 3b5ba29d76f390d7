#include "mlivr/kinematics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mlivr/error.hpp"

namespace mlivr {

double LimbParams::total_link_length() const {
  double sum = 0.0;
  for (const JointParams& j : joints) sum += j.link_offset.norm();
  return sum;
}

JointVector LimbParams::clamp(const JointVector& q) const {
  JointVector out;
  for (int i = 0; i < kJointsPerLimb; ++i)
    out(i) = std::clamp(q(i), joints[i].limit_lo, joints[i].limit_hi);
  return out;
}

bool LimbParams::within_limits(const JointVector& q, double eps) const {
  for (int i = 0; i < kJointsPerLimb; ++i)
    if (q(i) < joints[i].limit_lo - eps || q(i) > joints[i].limit_hi + eps) return false;
  return true;
}

void LimbParams::validate() const {
  const std::string where = std::string("limb ") + to_string(limb);
  for (int i = 0; i < kJointsPerLimb; ++i) {
    const JointParams& j = joints[i];
    if (std::abs(j.axis.norm() - 1.0) > 1e-9)
      throw Error(ErrorCode::kValidation, where + " joint " + std::to_string(i + 1) + ": axis must be a unit vector");
    if (!(j.limit_lo < j.limit_hi))
      throw Error(ErrorCode::kValidation, where + " joint " + std::to_string(i + 1) + ": limit_lo must be below limit_hi");
  }
  if (total_link_length() < 0.6 - 1e-12)
    throw Error(ErrorCode::kValidation, where + ": link lengths must sum to at least 0.6 m");
}

void RobotModel::validate() const {
  limb_a.validate();
  limb_b.validate();
  if (!(reach > 0.0)) throw Error(ErrorCode::kValidation, "robot.reach: must be positive");
  if (!(min_stride >= 0.0 && min_stride < max_stride))
    throw Error(ErrorCode::kValidation, "robot: need 0 <= min_stride < max_stride");
  if (!(clearance >= 0.0)) throw Error(ErrorCode::kValidation, "robot.clearance: must be non-negative");
}

RobotModel RobotModel::default_model() {
  RobotModel m;
  LimbParams limb;
  limb.mount.position = Vec3(0.0, 0.0, -0.1);
  const double big = deg2rad(270.0);
  limb.joints[0] = {Vec3::UnitZ(), Vec3(0.0, 0.0, 0.0), -big, big};
  limb.joints[1] = {Vec3::UnitY(), Vec3(0.34, 0.0, 0.0), -big, big};
  limb.joints[2] = {Vec3::UnitY(), Vec3(0.30, 0.0, 0.0), -big, big};
  limb.joints[3] = {Vec3::UnitY(), Vec3(0.0, 0.0, -0.05), -big, big};
  limb.joints[4] = {Vec3::UnitZ(), Vec3(0.0, 0.0, -0.05), -big, big};
  m.limb_a = limb;
  m.limb_a.limb = Limb::A;
  m.limb_b = limb;
  m.limb_b.limb = Limb::B;
  return m;
}

Pose limb_root(const LimbParams& params, const Pose& base) { return base * params.mount; }

namespace {

Pose joint_transform(const JointParams& j, double angle) {
  Pose p;
  p.orientation = Quat(Eigen::AngleAxisd(angle, j.axis));
  p.position = p.orientation * j.link_offset;
  return p;
}

}  // namespace

Pose forward_kinematics(const LimbParams& params, const Pose& base, const JointVector& q) {
  Pose t = limb_root(params, base);
  for (int i = 0; i < kJointsPerLimb; ++i) t = t * joint_transform(params.joints[i], q(i));
  return t;
}

LimbJacobian limb_jacobian(const LimbParams& params, const Pose& base, const JointVector& q) {
  std::array<Vec3, kJointsPerLimb> axes;
  std::array<Vec3, kJointsPerLimb> origins;
  Pose t = limb_root(params, base);
  for (int i = 0; i < kJointsPerLimb; ++i) {
    origins[i] = t.position;
    axes[i] = t.orientation * params.joints[i].axis;
    t = t * joint_transform(params.joints[i], q(i));
  }
  LimbJacobian jac;
  for (int i = 0; i < kJointsPerLimb; ++i) {
    jac.block<3, 1>(0, i) = axes[i].cross(t.position - origins[i]);
    jac.block<3, 1>(3, i) = axes[i];
  }
  return jac;
}

namespace {

template <int Rows>
Eigen::Matrix<double, kJointsPerLimb, 1> damped_step(
    const Eigen::Matrix<double, Rows, kJointsPerLimb>& jac,
    const Eigen::Matrix<double, Rows, 1>& err, double damping) {
  const Eigen::Matrix<double, Rows, Rows> jjt =
      jac * jac.transpose() + damping * damping * Eigen::Matrix<double, Rows, Rows>::Identity();
  return jac.transpose() * jjt.ldlt().solve(err);
}

JointVector clamp_step(JointVector dq, double limit) {
  const double m = dq.cwiseAbs().maxCoeff();
  if (m > limit) dq *= limit / m;
  return dq;
}

}  // namespace

IkResult inverse_kinematics(const LimbParams& params, const Pose& base, const Pose& target,
                            const JointVector& seed, const IkOptions& opt) {
  IkResult res;
  JointVector q = seed;
  double prev_rot = std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    const Pose ee = forward_kinematics(params, base, q);
    const Vec3 ep = target.position - ee.position;
    const Vec3 eo = orientation_error(ee.orientation, target.orientation);
    res.q = q;
    res.position_error = ep.norm();
    res.orientation_error = eo.norm();
    res.iterations = iter;
    const bool pos_ok = res.position_error <= opt.tol_position;
    const bool rot_ok = res.orientation_error <= opt.tol_orientation;
    if (pos_ok && rot_ok) {
      res.converged = true;
      return res;
    }
    if (opt.position_priority && pos_ok && std::abs(prev_rot - res.orientation_error) < 1e-10) {
      res.converged = true;
      return res;
    }
    if (iter >= opt.max_iter) return res;
    prev_rot = res.orientation_error;

    const LimbJacobian jac = limb_jacobian(params, base, q);
    // Fixed damping stalls along near-singular directions; once inside the
    // final basin the damping is dropped (Gauss-Newton polish).
    const bool polish = res.position_error < 1e-3 && (opt.position_priority || res.orientation_error < 1e-3);
    const double damping = polish ? 0.0 : opt.damping;
    JointVector dq;
    if (!opt.position_priority) {
      Vec6 e;
      e << ep, eo;
      dq = polish ? JointVector(pseudo_inverse(jac, 1e-6) * e) : damped_step<6>(jac, e, damping);
    } else {
      const Eigen::Matrix<double, 3, kJointsPerLimb> jp = jac.topRows<3>();
      const Eigen::Matrix<double, 3, kJointsPerLimb> jo = jac.bottomRows<3>();
      const JointVector dq1 = polish ? JointVector(pseudo_inverse(jp, 1e-6) * ep) : damped_step<3>(jp, ep, damping);
      const Eigen::MatrixXd jp_pinv = pseudo_inverse(jp, 1e-8);
      const Eigen::Matrix<double, kJointsPerLimb, kJointsPerLimb> null =
          Eigen::Matrix<double, kJointsPerLimb, kJointsPerLimb>::Identity() - jp_pinv * jp;
      const Eigen::Matrix<double, 3, kJointsPerLimb> jon = jo * null;
      const Vec3 residual = eo - jo * dq1;
      dq = dq1 + null * damped_step<3>(jon, residual, opt.damping);
    }
    q = params.clamp(q + clamp_step(dq, opt.step_clamp));
  }
}

bool reachable(const LimbParams& params, const Pose& base, const Vec3& point, double reach) {
  return (point - limb_root(params, base).position).norm() <= reach + 1e-9;
}

Pose grasp_pose(const GraspPoint& g, const Vec3& reference_x) {
  const Vec3 x = g.rail_dir.dot(reference_x) >= -1e-9 ? g.rail_dir : Vec3(-g.rail_dir);
  Pose p;
  p.position = g.position;
  p.orientation = frame_from_xz(x, g.face_normal);
  return p;
}

namespace {

double fit_to_limits(double a, const JointParams& j) {
  const double mid = 0.5 * (j.limit_lo + j.limit_hi);
  while (a - mid > kPi && a - 2 * kPi >= j.limit_lo) a -= 2 * kPi;
  while (mid - a > kPi && a + 2 * kPi <= j.limit_hi) a += 2 * kPi;
  return std::clamp(a, j.limit_lo, j.limit_hi);
}

}  // namespace

JointVector nominal_seed(const LimbParams& params, const Pose& base, const Pose& target) {
  const auto& js = params.joints;
  const bool yppp_y = js[0].axis.isApprox(Vec3::UnitZ()) && js[1].axis.isApprox(Vec3::UnitY()) &&
                      js[2].axis.isApprox(Vec3::UnitY()) && js[3].axis.isApprox(Vec3::UnitY()) &&
                      js[4].axis.isApprox(Vec3::UnitZ());
  JointVector q;
  q << 0.0, -0.5, 1.0, -0.5, 0.0;
  if (!yppp_y) return params.clamp(q);

  const Pose root = limb_root(params, base);
  const Pose local = root.inverse() * target;
  const Mat3 r = local.rotation();
  const Vec3 z_t = r.col(2);
  const Vec3 x_t = r.col(0);
  const double tool = -(js[3].link_offset.z() + js[4].link_offset.z());
  const Vec3 wrist = local.position + tool * z_t;

  const double heading = std::atan2(wrist.y(), wrist.x());
  const double l2 = js[1].link_offset.norm();
  const double l3 = js[2].link_offset.norm();
  const double radial = std::hypot(wrist.x(), wrist.y()) - js[0].link_offset.x();
  const double height = wrist.z() - js[0].link_offset.z();
  const double d2 = radial * radial + height * height;
  const double c = std::clamp((d2 - l2 * l2 - l3 * l3) / (2 * l2 * l3), -1.0, 1.0);
  const double gamma = std::acos(c);
  const double alpha = std::atan2(l3 * std::sin(gamma), l2 + l3 * std::cos(gamma));
  q(0) = heading;
  q(1) = -(std::atan2(height, radial) + alpha);
  q(2) = gamma;

  const Vec3 z_leg = Eigen::AngleAxisd(-heading, Vec3::UnitZ()) * z_t;
  const double theta = std::atan2(z_leg.x(), z_leg.z());
  q(3) = wrap_angle(theta - q(1) - q(2));

  q(4) = 0.0;
  const Mat3 r0 = (Eigen::AngleAxisd(heading, Vec3::UnitZ()) *
                   Eigen::AngleAxisd(theta, Vec3::UnitY())).toRotationMatrix();
  const Vec3 x0 = r0.col(0);
  q(4) = std::atan2(x0.cross(x_t).dot(z_t), x0.dot(x_t));

  for (int i = 0; i < kJointsPerLimb; ++i) q(i) = fit_to_limits(q(i), js[i]);
  return q;
}

Vec3 nominal_base_position(const RobotModel& model, const GraspPoint& a, const GraspPoint& b) {
  Vec3 n = a.face_normal + b.face_normal;
  if (n.norm() < 1e-9) n = a.face_normal;
  return 0.5 * (a.position + b.position) + model.clearance * n.normalized();
}

namespace {

struct ClosedChainResult {
  bool ok = false;
  RobotState state;
};

ClosedChainResult close_chain(const RobotModel& model, const Pose& target_a, const Pose& target_b,
                              const Vec3& start, const Vec3& preferred, const Quat& orientation) {
  using Mat12x13 = Eigen::Matrix<double, 12, 13>;
  Pose base;
  base.position = start;
  base.orientation = orientation;
  JointVector qa = nominal_seed(model.limb_a, base, target_a);
  JointVector qb = nominal_seed(model.limb_b, base, target_b);

  const double damping = 0.01;
  const double pull = 0.5;
  for (int iter = 0; iter < 600; ++iter) {
    const Pose fa = forward_kinematics(model.limb_a, base, qa);
    const Pose fb = forward_kinematics(model.limb_b, base, qb);
    Eigen::Matrix<double, 12, 1> e;
    e << target_a.position - fa.position, orientation_error(fa.orientation, target_a.orientation),
        target_b.position - fb.position, orientation_error(fb.orientation, target_b.orientation);

    Mat12x13 jac = Mat12x13::Zero();
    jac.block<3, 3>(0, 0).setIdentity();
    jac.block<3, 3>(6, 0).setIdentity();
    jac.block<6, 5>(0, 3) = limb_jacobian(model.limb_a, base, qa);
    jac.block<6, 5>(6, 8) = limb_jacobian(model.limb_b, base, qb);

    const Eigen::Matrix<double, 12, 12> jjt =
        jac * jac.transpose() + damping * damping * Eigen::Matrix<double, 12, 12>::Identity();
    Eigen::Matrix<double, 13, 1> dx = jac.transpose() * jjt.ldlt().solve(e);

    const Eigen::MatrixXd pinv = pseudo_inverse(jac, 1e-8);
    const Eigen::Matrix<double, 13, 13> null =
        Eigen::Matrix<double, 13, 13>::Identity() - pinv * jac;
    Eigen::Matrix<double, 13, 1> g = Eigen::Matrix<double, 13, 1>::Zero();
    g.head<3>() = pull * (preferred - base.position);
    const Eigen::Matrix<double, 13, 1> secondary = null * g;
    dx += secondary;

    if (e.norm() < 1e-11 && secondary.norm() < 1e-10) break;

    const double m = dx.tail<10>().cwiseAbs().maxCoeff();
    if (m > 0.2) dx *= 0.2 / m;
    base.position += dx.head<3>();
    qa = model.limb_a.clamp(qa + dx.segment<5>(3));
    qb = model.limb_b.clamp(qb + dx.segment<5>(8));
  }

  // Polish each limb against the final base so the feet sit on their targets.
  ClosedChainResult out;
  const IkResult ra = inverse_kinematics(model.limb_a, base, target_a, qa);
  const IkResult rb = inverse_kinematics(model.limb_b, base, target_b, qb);
  if (!ra.converged || !rb.converged) return out;
  out.ok = true;
  out.state.base = base;
  out.state.joints_a = ra.q;
  out.state.joints_b = rb.q;
  return out;
}

}  // namespace

RobotState solve_double_support(const RobotModel& model, const GraspPoint& grasp_a,
                                const GraspPoint& grasp_b, const Pose& base_hint) {
  const double stride = (grasp_a.position - grasp_b.position).norm();
  if (stride > model.max_stride + 1e-9)
    throw Error(ErrorCode::kInfeasible, "stride " + std::to_string(stride) +
                                            " m exceeds maximum " + std::to_string(model.max_stride) + " m");
  if (stride < model.min_stride - 1e-9)
    throw Error(ErrorCode::kInfeasible, "stride " + std::to_string(stride) +
                                            " m below minimum " + std::to_string(model.min_stride) + " m");

  const Quat orientation = base_hint.orientation.normalized();
  const Vec3 ref_x = orientation * Vec3::UnitX();
  const Pose target_a = grasp_pose(grasp_a, ref_x);
  const Pose target_b = grasp_pose(grasp_b, ref_x);
  const Vec3 preferred = nominal_base_position(model, grasp_a, grasp_b);

  ClosedChainResult r = close_chain(model, target_a, target_b, preferred, preferred, orientation);
  if (!r.ok && (base_hint.position - preferred).norm() > 1e-9)
    r = close_chain(model, target_a, target_b, base_hint.position, preferred, orientation);
  if (!r.ok)
    throw Error(ErrorCode::kInfeasible, "no closed-chain posture for grasps " + grasp_a.rail_id +
                                            "@" + std::to_string(grasp_a.s) + " and " +
                                            grasp_b.rail_id + "@" + std::to_string(grasp_b.s));
  r.state.attached_a = grasp_a;
  r.state.attached_b = grasp_b;
  return r.state;
}

}  // namespace mlivr
