#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mlivr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Rigid pose: position plus unit quaternion, module frame unless stated.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  static Pose identity() { return {}; }
  static Pose from_isometry(const Eigen::Isometry3d& t);
  Eigen::Isometry3d isometry() const;

  Pose operator*(const Pose& rhs) const;
  Pose inverse() const;
  Vec3 transform(const Vec3& p) const { return position + orientation * p; }
  Mat3 rotation() const { return orientation.toRotationMatrix(); }
};

// Rotation vector (axis * angle) of a rotation, angle in [0, pi].
Vec3 rotation_vector(const Quat& q);
Quat quat_from_rotation_vector(const Vec3& w);

// Angle of the relative rotation a^-1 b.
double rotation_angle_between(const Quat& a, const Quat& b);

// Orientation error a->b expressed in the world frame as a rotation vector.
Vec3 orientation_error(const Quat& current, const Quat& target);

// SE(3) exponential of a body twist (v, w) scaled by dt.
Pose se3_exp(const Vec3& v, const Vec3& w, double dt);

Pose interpolate(const Pose& a, const Pose& b, double u);

// Builds an orientation whose x axis is `x` and z axis is `z` (x is
// re-orthogonalised against z).
Quat frame_from_xz(const Vec3& x, const Vec3& z);

Quat quat_from_rpy(double roll, double pitch, double yaw);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

double wrap_angle(double a);

// Moore-Penrose pseudoinverse via SVD, singular values below
// rel_threshold * sigma_max treated as zero. `rank` receives the numerical rank.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_threshold,
                               int* rank = nullptr);

}  // namespace mlivr
