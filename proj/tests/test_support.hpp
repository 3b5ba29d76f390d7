#pragma once

// Shared fixtures and small generators for the unit tests.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "mlivr/env.hpp"
#include "mlivr/error.hpp"
#include "mlivr/geometry.hpp"
#include "mlivr/kinematics.hpp"

namespace testing_support {

using namespace mlivr;

inline Face make_face(std::string id, Vec3 origin, Vec3 u, Vec3 v, double eu, double ev) {
  Face f;
  f.id = std::move(id);
  f.origin = origin;
  f.axis_u = u;
  f.axis_v = v;
  f.normal = u.cross(v);
  f.extent_u = eu;
  f.extent_v = ev;
  return f;
}

inline RailSegment make_rail(std::string id, std::string face, Vec2 start, Vec2 dir, double length = 2.0) {
  RailSegment r;
  r.id = std::move(id);
  r.face_id = std::move(face);
  r.start_uv = start;
  r.direction_uv = dir;
  r.length = length;
  return r;
}

// Rails running along y on the floor, one every `pitch` metres in x starting at x = 0.
inline EnvironmentMap parallel_rails(int count, double pitch = 1.0, double length = 2.0) {
  EnvironmentMap m;
  m.faces.push_back(make_face("floor", Vec3(-0.5, 0, 0), Vec3::UnitX(), Vec3::UnitY(),
                              pitch * (count - 1) + 1.0, length));
  for (int i = 0; i < count; ++i)
    m.rails.push_back(make_rail("R" + std::to_string(i), "floor", Vec2(0.5 + pitch * i, 0.0),
                                Vec2(0, 1), length));
  m.validate();
  return m;
}

// Code of the Error thrown by f, or nullopt when nothing was thrown.
template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Quat random_rotation(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> a(-max_angle, max_angle);
  return Quat(Eigen::AngleAxisd(a(rng), random_unit(rng)));
}

inline JointVector random_joints(std::mt19937_64& rng, double span) {
  std::uniform_real_distribution<double> a(-span, span);
  JointVector q;
  for (int i = 0; i < kJointsPerLimb; ++i) q(i) = a(rng);
  return q;
}

inline double rel_err(double a, double b, double floor = 1e-9) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing_support
