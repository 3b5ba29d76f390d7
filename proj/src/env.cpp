#include "mlivr/env.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json_util.hpp"
#include "mlivr/error.hpp"

namespace mlivr {

namespace {

constexpr double kUnitTol = 1e-9;
constexpr double kAdjacencyTol = 1e-6;

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

struct Edge {
  Vec3 a;
  Vec3 b;
};

std::vector<Edge> face_edges(const Face& f) {
  const Vec3 o = f.origin;
  const Vec3 u = f.axis_u * f.extent_u;
  const Vec3 v = f.axis_v * f.extent_v;
  return {{o, o + u}, {o + v, o + u + v}, {o, o + v}, {o + u, o + u + v}};
}

bool edges_share_segment(const Edge& e1, const Edge& e2) {
  const Vec3 d = e1.b - e1.a;
  const double len = d.norm();
  if (len < kAdjacencyTol) return false;
  const Vec3 dir = d / len;
  // Both endpoints of e2 must lie on the line through e1.
  auto off_line = [&](const Vec3& p) {
    const Vec3 w = p - e1.a;
    return (w - w.dot(dir) * dir).norm();
  };
  if (off_line(e2.a) > kAdjacencyTol || off_line(e2.b) > kAdjacencyTol) return false;
  const double t0 = (e2.a - e1.a).dot(dir);
  const double t1 = (e2.b - e1.a).dot(dir);
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(len, std::max(t0, t1));
  return hi - lo > kAdjacencyTol;
}

}  // namespace

void EnvironmentMap::validate() const {
  if (faces.empty()) throw Error(ErrorCode::kValidation, "faces: at least one face is required");
  if (!(grasp_pitch > 0.0)) throw Error(ErrorCode::kValidation, "grasp_pitch: must be positive");

  std::set<std::string> face_ids;
  for (const Face& f : faces) {
    const std::string where = "face '" + f.id + "'";
    if (!face_ids.insert(f.id).second) throw Error(ErrorCode::kValidation, where + ": duplicate id");
    if (std::abs(f.axis_u.norm() - 1.0) > kUnitTol || std::abs(f.axis_v.norm() - 1.0) > kUnitTol)
      throw Error(ErrorCode::kValidation, where + ": axes must be unit vectors");
    if (std::abs(f.axis_u.dot(f.axis_v)) > kUnitTol)
      throw Error(ErrorCode::kValidation, where + ": axes are not orthogonal");
    if ((f.normal - f.axis_u.cross(f.axis_v)).norm() > kUnitTol)
      throw Error(ErrorCode::kValidation, where + ": normal must equal axis_u x axis_v");
    if (!(f.extent_u > 0.0) || !(f.extent_v > 0.0))
      throw Error(ErrorCode::kValidation, where + ": extents must be positive");
  }

  std::set<std::string> rail_ids;
  for (const RailSegment& r : rails) {
    const std::string where = "rail '" + r.id + "'";
    if (!rail_ids.insert(r.id).second) throw Error(ErrorCode::kValidation, where + ": duplicate id");
    const Face* f = find_face(r.face_id);
    if (!f) throw Error(ErrorCode::kValidation, where + ": unknown face '" + r.face_id + "'");
    if (!(r.length > 0.0)) throw Error(ErrorCode::kValidation, where + ": length must be positive");
    if (std::abs(r.direction_uv.norm() - 1.0) > kUnitTol)
      throw Error(ErrorCode::kValidation, where + ": direction must be a unit vector");
    const Vec2 end = r.start_uv + r.length * r.direction_uv;
    for (const Vec2& p : {r.start_uv, end}) {
      if (p.x() < -kUnitTol || p.x() > f->extent_u + kUnitTol || p.y() < -kUnitTol ||
          p.y() > f->extent_v + kUnitTol)
        throw Error(ErrorCode::kValidation, where + ": leaves the extents of face '" + f->id + "'");
    }
    for (const Interval& iv : r.blocked) {
      if (!(0.0 <= iv.lo && iv.lo <= iv.hi && iv.hi <= r.length))
        throw Error(ErrorCode::kValidation, where + ": blocked interval outside [0, length]");
    }
  }

  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Obstacle& o = obstacles[i];
    const std::string where = "obstacle " + std::to_string(i);
    const RailSegment* r = find_rail(o.rail_id);
    if (!r) throw Error(ErrorCode::kValidation, where + ": unknown rail '" + o.rail_id + "'");
    if (!(0.0 <= o.interval.lo && o.interval.lo <= o.interval.hi && o.interval.hi <= r->length))
      throw Error(ErrorCode::kValidation, where + ": interval outside [0, length] of '" + r->id + "'");
    if (!(o.reveal_radius >= 0.0))
      throw Error(ErrorCode::kValidation, where + ": reveal_radius must be non-negative");
  }
  for (std::size_t i = 0; i < defects.size(); ++i) {
    if (!find_rail(defects[i].rail_id))
      throw Error(ErrorCode::kValidation,
                  "defect " + std::to_string(i) + ": unknown rail '" + defects[i].rail_id + "'");
  }
}

const Face* EnvironmentMap::find_face(std::string_view id) const {
  for (const Face& f : faces)
    if (f.id == id) return &f;
  return nullptr;
}

const RailSegment* EnvironmentMap::find_rail(std::string_view id) const {
  for (const RailSegment& r : rails)
    if (r.id == id) return &r;
  return nullptr;
}

const Face& EnvironmentMap::face(std::string_view id) const {
  const Face* f = find_face(id);
  if (!f) throw Error(ErrorCode::kUnknownId, "unknown face '" + std::string(id) + "'");
  return *f;
}

const RailSegment& EnvironmentMap::rail(std::string_view id) const {
  const RailSegment* r = find_rail(id);
  if (!r) throw Error(ErrorCode::kUnknownId, "unknown rail '" + std::string(id) + "'");
  return *r;
}

Vec3 EnvironmentMap::rail_point_world(std::string_view rail_id, double s) const {
  const RailSegment& r = rail(rail_id);
  if (!(s >= 0.0 && s <= r.length))
    throw Error(ErrorCode::kOutOfRange, "arc length " + std::to_string(s) + " outside rail '" +
                                            r.id + "' of length " + std::to_string(r.length));
  const Face& f = face(r.face_id);
  const Vec2 uv = r.start_uv + s * r.direction_uv;
  return f.origin + uv.x() * f.axis_u + uv.y() * f.axis_v;
}

Vec3 EnvironmentMap::rail_direction_world(std::string_view rail_id) const {
  const RailSegment& r = rail(rail_id);
  const Face& f = face(r.face_id);
  return (r.direction_uv.x() * f.axis_u + r.direction_uv.y() * f.axis_v).normalized();
}

GraspPoint EnvironmentMap::grasp_point(std::string_view rail_id, double s) const {
  const RailSegment& r = rail(rail_id);
  GraspPoint g;
  g.rail_id = r.id;
  g.face_id = r.face_id;
  g.s = s;
  g.position = rail_point_world(rail_id, s);
  g.rail_dir = rail_direction_world(rail_id);
  g.face_normal = face(r.face_id).normal;
  return g;
}

bool EnvironmentMap::is_blocked(std::string_view rail_id, double s) const {
  const RailSegment& r = rail(rail_id);
  for (const Interval& iv : r.blocked)
    if (iv.contains(s)) return true;
  for (const Obstacle& o : obstacles)
    if (o.revealed && o.rail_id == rail_id && o.interval.contains(s)) return true;
  return false;
}

bool EnvironmentMap::has_defect(std::string_view rail_id, double s) const {
  for (const GripDefect& d : defects)
    if (d.rail_id == rail_id && d.interval.contains(s)) return true;
  return false;
}

std::vector<GraspPoint> EnvironmentMap::graspable_points() const {
  std::vector<const RailSegment*> ordered;
  for (const RailSegment& r : rails) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const RailSegment* a, const RailSegment* b) { return a->id < b->id; });

  std::vector<GraspPoint> out;
  for (const RailSegment* r : ordered) {
    const auto n = static_cast<long>(std::floor(r->length / grasp_pitch + 1e-9));
    std::vector<double> samples;
    for (long k = 0; k <= n; ++k) samples.push_back(std::min(r->length, k * grasp_pitch));
    if (r->length - samples.back() > 1e-9) samples.push_back(r->length);
    for (double s : samples) {
      if (is_blocked(r->id, s)) continue;
      out.push_back(grasp_point(r->id, s));
    }
  }
  return out;
}

std::vector<Obstacle> EnvironmentMap::reveal_obstacles(const Vec3& sensor_position) {
  std::vector<Obstacle> fresh;
  for (Obstacle& o : obstacles) {
    if (o.revealed) continue;
    const Vec3 a = rail_point_world(o.rail_id, o.interval.lo);
    const Vec3 b = rail_point_world(o.rail_id, o.interval.hi);
    if (point_segment_distance(sensor_position, a, b) <= o.reveal_radius) {
      o.revealed = true;
      fresh.push_back(o);
    }
  }
  return fresh;
}

bool EnvironmentMap::faces_adjacent(std::string_view a, std::string_view b) const {
  if (a == b) return true;
  const Face& fa = face(a);
  const Face& fb = face(b);
  for (const Edge& ea : face_edges(fa))
    for (const Edge& eb : face_edges(fb))
      if (edges_share_segment(ea, eb)) return true;
  return false;
}

namespace {

Interval parse_interval(const detail::json& j, const std::string& path) {
  const Vec2 v = detail::as_vec<2>(j, path);
  return {v.x(), v.y()};
}

}  // namespace

EnvironmentMap environment_from_json(const detail::json& doc) {
  using namespace detail;
  const json& env = doc.contains("environment") ? doc.at("environment") : doc;
  if (!env.is_object()) invalid("environment", "expected an object");

  EnvironmentMap map;
  map.grasp_pitch = number_or(env, "grasp_pitch", 0.05, "environment");

  const json& faces = array_field(env, "faces", "environment");
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const std::string path = "environment.faces[" + std::to_string(i) + "]";
    const json& jf = faces[i];
    Face f;
    f.id = as_string(require(jf, "id", path), path + ".id");
    f.origin = as_vec<3>(require(jf, "origin", path), path + ".origin");
    f.axis_u = as_vec<3>(require(jf, "axis_u", path), path + ".axis_u");
    f.axis_v = as_vec<3>(require(jf, "axis_v", path), path + ".axis_v");
    f.normal = f.axis_u.cross(f.axis_v);
    f.extent_u = as_number(require(jf, "extent_u", path), path + ".extent_u");
    f.extent_v = as_number(require(jf, "extent_v", path), path + ".extent_v");
    map.faces.push_back(std::move(f));
  }

  const json& rails = array_field(env, "rails", "environment");
  for (std::size_t i = 0; i < rails.size(); ++i) {
    const std::string path = "environment.rails[" + std::to_string(i) + "]";
    const json& jr = rails[i];
    RailSegment r;
    r.id = as_string(require(jr, "id", path), path + ".id");
    r.face_id = as_string(require(jr, "face", path), path + ".face");
    r.start_uv = as_vec<2>(require(jr, "start", path), path + ".start");
    if (jr.contains("direction_deg")) {
      const double a = deg2rad(as_number(jr.at("direction_deg"), path + ".direction_deg"));
      r.direction_uv = Vec2(std::cos(a), std::sin(a));
    } else {
      const Vec2 d = as_vec<2>(require(jr, "direction", path), path + ".direction");
      if (d.norm() < 1e-12) invalid(path + ".direction", "must be non-zero");
      r.direction_uv = d.normalized();
    }
    r.length = number_or(jr, "length", 2.0, path);
    const json& blocked = array_field(jr, "blocked", path);
    for (std::size_t k = 0; k < blocked.size(); ++k)
      r.blocked.push_back(parse_interval(blocked[k], path + ".blocked[" + std::to_string(k) + "]"));
    map.rails.push_back(std::move(r));
  }

  const json& obstacles = array_field(env, "obstacles", "environment");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const std::string path = "environment.obstacles[" + std::to_string(i) + "]";
    const json& jo = obstacles[i];
    Obstacle o;
    o.rail_id = as_string(require(jo, "rail", path), path + ".rail");
    o.interval = parse_interval(require(jo, "interval", path), path + ".interval");
    o.reveal_radius = number_or(jo, "reveal_radius", 0.5, path);
    o.revealed = bool_or(jo, "initially_revealed", false, path);
    map.obstacles.push_back(std::move(o));
  }

  const json& defects = array_field(env, "defects", "environment");
  for (std::size_t i = 0; i < defects.size(); ++i) {
    const std::string path = "environment.defects[" + std::to_string(i) + "]";
    GripDefect d;
    d.rail_id = as_string(require(defects[i], "rail", path), path + ".rail");
    d.interval = parse_interval(require(defects[i], "interval", path), path + ".interval");
    map.defects.push_back(std::move(d));
  }

  map.validate();
  return map;
}

EnvironmentMap load_environment(std::string_view document) {
  return environment_from_json(detail::parse_document(document));
}

}  // namespace mlivr
