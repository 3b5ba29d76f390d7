#include "mlivr/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "mlivr/error.hpp"

namespace mlivr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kUnknownId: return "unknown identifier";
    case ErrorCode::kUnreachable: return "unreachable";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kNoPath: return "no path";
    case ErrorCode::kInvalidStart: return "invalid start";
    case ErrorCode::kBehindCamera: return "behind camera";
    case ErrorCode::kRankDeficient: return "rank deficient";
    case ErrorCode::kNonPositiveDepth: return "non-positive depth";
    case ErrorCode::kJam: return "jam";
    case ErrorCode::kLastAnchor: return "last anchor";
    case ErrorCode::kNoAnchor: return "no anchor";
    case ErrorCode::kHashMismatch: return "hash mismatch";
    case ErrorCode::kInvalidState: return "invalid state";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

Pose Pose::from_isometry(const Eigen::Isometry3d& t) {
  Pose p;
  p.position = t.translation();
  p.orientation = Quat(t.rotation()).normalized();
  return p;
}

Eigen::Isometry3d Pose::isometry() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = orientation.toRotationMatrix();
  t.translation() = position;
  return t;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.position = position + orientation * rhs.position;
  out.orientation = (orientation * rhs.orientation).normalized();
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.orientation = orientation.conjugate();
  out.position = -(out.orientation * position);
  return out;
}

Vec3 rotation_vector(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0) q.coeffs() *= -1.0;
  const double s = q.vec().norm();
  if (s < 1e-12) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(s, q.w());
  return q.vec() * (angle / s);
}

Quat quat_from_rotation_vector(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    return q.normalized();
  }
  return Quat(Eigen::AngleAxisd(angle, w / angle));
}

double rotation_angle_between(const Quat& a, const Quat& b) {
  return rotation_vector(a.conjugate() * b).norm();
}

Vec3 orientation_error(const Quat& current, const Quat& target) {
  return rotation_vector(target * current.conjugate());
}

static Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Pose se3_exp(const Vec3& v, const Vec3& w, double dt) {
  const Vec3 phi = w * dt;
  const Vec3 rho = v * dt;
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  Mat3 jac;
  if (theta < 1e-9) {
    jac = Mat3::Identity() + 0.5 * k + k * k / 6.0;
  } else {
    const double t2 = theta * theta;
    jac = Mat3::Identity() + (1.0 - std::cos(theta)) / t2 * k +
          (theta - std::sin(theta)) / (t2 * theta) * k * k;
  }
  Pose out;
  out.orientation = quat_from_rotation_vector(phi);
  out.position = jac * rho;
  return out;
}

Pose interpolate(const Pose& a, const Pose& b, double u) {
  Pose out;
  out.position = (1.0 - u) * a.position + u * b.position;
  out.orientation = a.orientation.slerp(u, b.orientation).normalized();
  return out;
}

Quat frame_from_xz(const Vec3& x_in, const Vec3& z_in) {
  const Vec3 z = z_in.normalized();
  Vec3 x = x_in - x_in.dot(z) * z;
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Quat(r).normalized();
}

Quat quat_from_rpy(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .normalized();
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_threshold,
                               int* rank) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? rel_threshold * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) {
      inv(i) = 1.0 / sv(i);
      ++r;
    }
  }
  if (rank) *rank = r;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace mlivr
