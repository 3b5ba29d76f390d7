#pragma once

#include <array>
#include <vector>

#include "mlivr/env.hpp"
#include "mlivr/geometry.hpp"

namespace mlivr {

struct CameraModel {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  // Looks back along the gripper axis from 0.3 m behind the claws.
  Pose hand_to_camera = default_mount();

  static Pose default_mount();
  void validate() const;
  bool in_image(double x, double y) const;  // normalized coordinates
};

using MarkerSet = std::array<Vec3, 4>;
using FeatureVector = Eigen::Matrix<double, 8, 1>;
using InteractionMatrix = Eigen::Matrix<double, 8, 6>;
using CameraTwist = Vec6;  // v then w, camera frame

struct ServoConfig {
  enum class DepthMode { kTrueDepth, kDesiredDepth };

  double gain = 1.0;
  double dt = 0.02;
  double tolerance = 1e-3;
  int max_iter = 500;
  DepthMode depth_mode = DepthMode::kTrueDepth;
  double standoff = 0.05;  // desired hand height above the grasp point
  double marker_length = 0.08;  // along the rail
  double marker_width = 0.04;

  void validate() const;
};

// Corners of the marker rectangle centred on the grasp point, in the face plane.
MarkerSet make_markers(const GraspPoint& g, double length = 0.08, double width = 0.04);

// Throws Error(kBehindCamera) naming the marker.
FeatureVector project(const Pose& camera_pose, const CameraModel& camera, const MarkerSet& markers);

std::array<double, 4> marker_depths(const Pose& camera_pose, const MarkerSet& markers);

// Throws Error(kNonPositiveDepth).
InteractionMatrix interaction_matrix(const FeatureVector& s, const std::array<double, 4>& depths);

// Throws Error(kRankDeficient) when L has rank below 6.
CameraTwist control_law(const FeatureVector& s, const FeatureVector& s_star,
                        const InteractionMatrix& L, double gain);

struct ServoTraceEntry {
  int iteration = 0;
  double error_norm = 0.0;
  CameraTwist twist = CameraTwist::Zero();
};

struct ServoResult {
  enum class Status { kConverged, kNonConvergence, kBehindCamera };

  Status status = Status::kNonConvergence;
  Pose final_hand_pose;
  Pose desired_hand_pose;
  std::vector<ServoTraceEntry> trace;
  std::vector<Pose> hand_poses;  // one per trace entry, before that entry's twist
  int iterations = 0;
  std::string detail;

  bool converged() const { return status == Status::kConverged; }
};

const char* to_string(ServoResult::Status s);

// Closed-loop alignment of a free-flying hand toward the pre-grasp pose of `target`.
ServoResult run_servo(const Pose& initial_hand_pose, const GraspPoint& target,
                      const MarkerSet& markers, const CameraModel& camera,
                      const ServoConfig& config);

}  // namespace mlivr
