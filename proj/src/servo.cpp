#include "mlivr/servo.hpp"

#include <cmath>
#include <string>

#include "mlivr/error.hpp"
#include "mlivr/kinematics.hpp"

namespace mlivr {

Pose CameraModel::default_mount() {
  Pose p;
  p.position = Vec3(0.0, 0.0, 0.3);
  Mat3 r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  p.orientation = Quat(r);
  return p;
}

void CameraModel::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw Error(ErrorCode::kValidation, "camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kValidation, "camera: image size must be positive");
  if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height))
    throw Error(ErrorCode::kValidation, "camera: principal point must lie inside the image");
}

bool CameraModel::in_image(double x, double y) const {
  const double u = cx + fx * x;
  const double v = cy + fy * y;
  return u >= 0.0 && u <= width && v >= 0.0 && v <= height;
}

void ServoConfig::validate() const {
  if (!(gain > 0.0)) throw Error(ErrorCode::kValidation, "servo.gain: must be positive");
  if (!(dt > 0.0)) throw Error(ErrorCode::kValidation, "servo.dt: must be positive");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::kValidation, "servo.tolerance: must be positive");
  if (max_iter < 0) throw Error(ErrorCode::kValidation, "servo.max_iter: must be >= 0");
  if (!(marker_length > 0.0 && marker_width > 0.0))
    throw Error(ErrorCode::kValidation, "servo: marker rectangle must have positive size");
}

const char* to_string(ServoResult::Status s) {
  switch (s) {
    case ServoResult::Status::kConverged: return "converged";
    case ServoResult::Status::kNonConvergence: return "non_convergence";
    case ServoResult::Status::kBehindCamera: return "behind_camera";
  }
  return "?";
}

MarkerSet make_markers(const GraspPoint& g, double length, double width) {
  const Vec3 along = g.rail_dir.normalized();
  const Vec3 across = g.face_normal.cross(along).normalized();
  const Vec3 a = 0.5 * length * along;
  const Vec3 c = 0.5 * width * across;
  return {g.position + a + c, g.position - a + c, g.position - a - c, g.position + a - c};
}

namespace {

void check_markers(const MarkerSet& m) {
  Eigen::Matrix<double, 3, 4> centred;
  const Vec3 mean = 0.25 * (m[0] + m[1] + m[2] + m[3]);
  for (int i = 0; i < 4; ++i) centred.col(i) = m[std::size_t(i)] - mean;
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(centred);
  const auto sv = svd.singularValues();
  if (!(sv(1) > 1e-9 * std::max(1.0, sv(0))))
    throw Error(ErrorCode::kValidation, "markers: points are collinear");
}

}  // namespace

FeatureVector project(const Pose& camera_pose, const CameraModel& camera, const MarkerSet& markers) {
  (void)camera;  // normalized coordinates do not depend on the intrinsics
  const Pose inv = camera_pose.inverse();
  FeatureVector s;
  for (int i = 0; i < 4; ++i) {
    const Vec3 p = inv.transform(markers[std::size_t(i)]);
    if (!(p.z() > 1e-6))
      throw Error(ErrorCode::kBehindCamera, "marker " + std::to_string(i) + " is behind the camera");
    s(2 * i) = p.x() / p.z();
    s(2 * i + 1) = p.y() / p.z();
  }
  return s;
}

std::array<double, 4> marker_depths(const Pose& camera_pose, const MarkerSet& markers) {
  const Pose inv = camera_pose.inverse();
  std::array<double, 4> z{};
  for (std::size_t i = 0; i < 4; ++i) z[i] = inv.transform(markers[i]).z();
  return z;
}

InteractionMatrix interaction_matrix(const FeatureVector& s, const std::array<double, 4>& depths) {
  InteractionMatrix L;
  for (int i = 0; i < 4; ++i) {
    const double z = depths[std::size_t(i)];
    if (!(z > 0.0))
      throw Error(ErrorCode::kNonPositiveDepth, "depth of point " + std::to_string(i) + " is not positive");
    const double x = s(2 * i), y = s(2 * i + 1);
    L.row(2 * i) << -1.0 / z, 0.0, x / z, x * y, -(1.0 + x * x), y;
    L.row(2 * i + 1) << 0.0, -1.0 / z, y / z, 1.0 + y * y, -x * y, -x;
  }
  return L;
}

CameraTwist control_law(const FeatureVector& s, const FeatureVector& s_star,
                        const InteractionMatrix& L, double gain) {
  int rank = 0;
  const Eigen::MatrixXd pinv = pseudo_inverse(L, 1e-8, &rank);
  if (rank < 6)
    throw Error(ErrorCode::kRankDeficient,
                "interaction matrix has rank " + std::to_string(rank) + " < 6");
  return -gain * (pinv * (s - s_star));
}

ServoResult run_servo(const Pose& initial_hand_pose, const GraspPoint& target,
                      const MarkerSet& markers, const CameraModel& camera,
                      const ServoConfig& config) {
  config.validate();
  camera.validate();
  check_markers(markers);

  ServoResult out;
  Pose desired = grasp_pose(target, initial_hand_pose.rotation().col(0));
  desired.position += config.standoff * target.face_normal;
  out.desired_hand_pose = desired;

  const Pose cam_desired = desired * camera.hand_to_camera;
  const FeatureVector s_star = project(cam_desired, camera, markers);
  const std::array<double, 4> z_star = marker_depths(cam_desired, markers);
  const Pose camera_to_hand = camera.hand_to_camera.inverse();

  Pose cam = initial_hand_pose * camera.hand_to_camera;
  for (int k = 0;; ++k) {
    const Pose hand = cam * camera_to_hand;
    out.final_hand_pose = hand;
    out.iterations = k;
    FeatureVector s;
    try {
      s = project(cam, camera, markers);
    } catch (const Error& e) {
      out.status = ServoResult::Status::kBehindCamera;
      out.detail = e.what();
      return out;
    }
    for (int i = 0; i < 4; ++i) {
      if (!camera.in_image(s(2 * i), s(2 * i + 1))) {
        out.status = ServoResult::Status::kNonConvergence;
        out.detail = "marker " + std::to_string(i) + " left the image";
        return out;
      }
    }
    ServoTraceEntry entry;
    entry.iteration = k;
    entry.error_norm = (s - s_star).norm();
    out.hand_poses.push_back(hand);
    if (entry.error_norm <= config.tolerance) {
      out.trace.push_back(entry);
      out.status = ServoResult::Status::kConverged;
      return out;
    }
    if (k >= config.max_iter) {
      out.trace.push_back(entry);
      out.status = ServoResult::Status::kNonConvergence;
      out.detail = "no convergence after " + std::to_string(config.max_iter) + " iterations";
      return out;
    }
    const std::array<double, 4> z = config.depth_mode == ServoConfig::DepthMode::kTrueDepth
                                        ? marker_depths(cam, markers)
                                        : z_star;
    try {
      entry.twist = control_law(s, s_star, interaction_matrix(s, z), config.gain);
    } catch (const Error& e) {
      out.trace.push_back(entry);
      out.status = ServoResult::Status::kNonConvergence;
      out.detail = e.what();
      return out;
    }
    out.trace.push_back(entry);
    cam = cam * se3_exp(entry.twist.head<3>(), entry.twist.tail<3>(), config.dt);
  }
}

}  // namespace mlivr
