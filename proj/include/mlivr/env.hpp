#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlivr/geometry.hpp"

namespace mlivr {

// Planar interior surface of the module. normal = axis_u x axis_v and points
// into the module interior.
struct Face {
  std::string id;
  Vec3 origin = Vec3::Zero();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
  double extent_u = 1.0;
  double extent_v = 1.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double s, double eps = 1e-9) const {
    return s >= lo - eps && s <= hi + eps;
  }
};

// Straight seat-track segment in face coordinates.
struct RailSegment {
  std::string id;
  std::string face_id;
  Vec2 start_uv = Vec2::Zero();
  Vec2 direction_uv = Vec2::UnitX();
  double length = 2.0;
  std::vector<Interval> blocked;  // static non-graspable sections
};

struct Obstacle {
  std::string rail_id;
  Interval interval;
  bool revealed = false;
  double reveal_radius = 0.5;
};

// Rail section where the claws cannot lock (fouled groove). Sensing cannot see
// it; only a failed grip exposes it.
struct GripDefect {
  std::string rail_id;
  Interval interval;
};

struct GraspPoint {
  std::string rail_id;
  std::string face_id;
  double s = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 rail_dir = Vec3::UnitX();
  Vec3 face_normal = Vec3::UnitZ();

  bool same_site(const GraspPoint& o) const {
    return rail_id == o.rail_id && s == o.s;
  }
};

class EnvironmentMap {
 public:
  std::vector<Face> faces;
  std::vector<RailSegment> rails;
  std::vector<Obstacle> obstacles;
  std::vector<GripDefect> defects;
  double grasp_pitch = 0.05;

  // Throws Error(kValidation) naming the offending element.
  void validate() const;

  const Face& face(std::string_view id) const;
  const RailSegment& rail(std::string_view id) const;
  const Face* find_face(std::string_view id) const;
  const RailSegment* find_rail(std::string_view id) const;

  Vec3 rail_point_world(std::string_view rail_id, double s) const;
  Vec3 rail_direction_world(std::string_view rail_id) const;
  GraspPoint grasp_point(std::string_view rail_id, double s) const;

  // True if s lies in a static blocked interval or a revealed obstacle.
  bool is_blocked(std::string_view rail_id, double s) const;
  bool has_defect(std::string_view rail_id, double s) const;

  // Discretised footholds ordered by (rail id, s).
  std::vector<GraspPoint> graspable_points() const;

  // Marks obstacles within their reveal radius of sensor_position; returns the
  // newly revealed ones.
  std::vector<Obstacle> reveal_obstacles(const Vec3& sensor_position);

  bool faces_adjacent(std::string_view a, std::string_view b) const;
};

EnvironmentMap load_environment(std::string_view document);

}  // namespace mlivr
