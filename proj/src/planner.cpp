#include "mlivr/planner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <unordered_map>

#include "mlivr/error.hpp"

namespace mlivr {

namespace {
constexpr double kStrideTol = 1e-9;
}

void PlannerConfig::validate() const {
  if (!(min_stride >= 0.0 && min_stride < max_stride))
    throw Error(ErrorCode::kValidation, "planner: need 0 <= min_stride < max_stride");
  if (!(step_cost >= 0.0) || !(travel_weight >= 0.0))
    throw Error(ErrorCode::kValidation, "planner: weights must be non-negative");
}

GoalSpec GoalSpec::at_point(const Vec3& p, double radius) {
  GoalSpec g;
  g.kind = Kind::kPoint;
  g.point = p;
  g.radius = radius;
  return g;
}

GoalSpec GoalSpec::on_rail(std::string rail, Interval interval, Feet feet) {
  GoalSpec g;
  g.kind = Kind::kRail;
  g.rail = std::move(rail);
  g.interval = interval;
  g.feet = feet;
  return g;
}

void GoalSpec::validate(const EnvironmentMap& map) const {
  if (kind == Kind::kPoint) {
    if (!(radius > 0.0)) throw Error(ErrorCode::kValidation, "goal: radius must be positive");
    return;
  }
  const RailSegment* r = map.find_rail(rail);
  if (!r) throw Error(ErrorCode::kValidation, "goal: unknown rail '" + rail + "'");
  if (!(interval.lo <= interval.hi))
    throw Error(ErrorCode::kValidation, "goal: interval must be non-empty");
}

bool GoalSpec::satisfied(const PlanNode& node) const {
  if (node.a.rail_id.empty() || node.b.rail_id.empty()) return false;
  if (kind == Kind::kPoint) return (node.midpoint() - point).norm() <= radius + 1e-12;
  auto on = [&](const GraspPoint& g) { return g.rail_id == rail && interval.contains(g.s); };
  return feet == Feet::kBoth ? (on(node.a) && on(node.b)) : (on(node.a) || on(node.b));
}

double GoalSpec::midpoint_distance(const EnvironmentMap& map, const Vec3& midpoint,
                                   double max_stride) const {
  if (kind == Kind::kPoint) return std::max(0.0, (midpoint - point).norm() - radius);
  const RailSegment& r = map.rail(rail);
  const double lo = std::clamp(interval.lo, 0.0, r.length);
  const double hi = std::clamp(interval.hi, 0.0, r.length);
  const Vec3 a = map.rail_point_world(rail, lo);
  const Vec3 b = map.rail_point_world(rail, hi);
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((midpoint - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  const double d = (midpoint - (a + t * ab)).norm();
  return feet == Feet::kBoth ? d : std::max(0.0, d - 0.5 * max_stride);
}

std::vector<PlanNode> FootholdPlan::nodes() const {
  std::vector<PlanNode> out{start};
  for (const PlanStep& s : steps) {
    PlanNode n = out.back();
    n.foot(s.swing) = s.to;
    out.push_back(n);
  }
  return out;
}

bool DenyList::contains(const GraspPoint& g) const {
  for (const auto& [rail, s] : sites)
    if (rail == g.rail_id && std::abs(s - g.s) < 1e-9) return true;
  return false;
}

double step_cost(const PlannerConfig& config, const GraspPoint& from, const GraspPoint& to) {
  return config.step_cost + config.travel_weight * (to.position - from.position).norm();
}

double heuristic(const EnvironmentMap& map, const GoalSpec& goal, const PlanNode& node,
                 const PlannerConfig& config) {
  return goal.midpoint_distance(map, node.midpoint(), config.max_stride) / config.max_stride *
         config.step_cost;
}

bool feasible_pair(const EnvironmentMap& map, const GraspPoint& p, const GraspPoint& q,
                   const PlannerConfig& config) {
  if (p.same_site(q)) return false;
  const double d = (p.position - q.position).norm();
  if (d < config.min_stride - kStrideTol || d > config.max_stride + kStrideTol) return false;
  return map.faces_adjacent(p.face_id, q.face_id);
}

namespace {

bool closes(const RobotModel& kin, const PlanNode& node) {
  try {
    Pose hint;
    hint.orientation = kin.base_orientation;
    solve_double_support(kin, node.a, node.b, hint);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

bool feasible_step(const EnvironmentMap& map, const PlanNode& node, Limb swing,
                   const GraspPoint& to, const PlannerConfig& config, const RobotModel& kin) {
  if (map.is_blocked(to.rail_id, to.s)) return false;
  const GraspPoint& stance = node.foot(other(swing));
  if (!feasible_pair(map, to, stance, config)) return false;
  if (!config.ik_check) return true;
  PlanNode next = node;
  next.foot(swing) = to;
  return closes(kin, next);
}

namespace {

struct SearchResult {
  std::vector<PlanStep> steps;
  double cost = 0.0;
  std::size_t expanded = 0;
};

class Search {
 public:
  Search(const EnvironmentMap& map, const GoalSpec& goal, const PlannerConfig& config,
         const RobotModel& kin, const DenyList& deny)
      : map_(map), goal_(goal), config_(config), kin_(kin) {
    for (GraspPoint& g : map.graspable_points())
      if (!deny.contains(g)) points_.push_back(std::move(g));
    num_targets_ = points_.size();
  }

  SearchResult run(const PlanNode& start, std::optional<Limb> forced) {
    const int ia = index_of(start.a);
    const int ib = index_of(start.b);
    build_faces();

    struct Entry {
      double f;
      int steps;
      int last;
      std::uint64_t seq;
      std::uint64_t key;
      double g;
    };
    auto worse = [](const Entry& x, const Entry& y) {
      if (x.f != y.f) return x.f > y.f;
      if (x.steps != y.steps) return x.steps > y.steps;
      if (x.last != y.last) return x.last > y.last;
      return x.seq > y.seq;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

    struct Record {
      double g;
      int steps;
      std::uint64_t parent;
      Limb swing;
      bool closed;
    };
    std::unordered_map<std::uint64_t, Record> records;

    const std::uint64_t start_key = key(ia, ib);
    records[start_key] = {0.0, 0, start_key, Limb::A, false};
    std::uint64_t seq = 0;
    open.push({h(ia, ib), 0, -1, seq++, start_key, 0.0});

    SearchResult result;
    while (!open.empty()) {
      const Entry e = open.top();
      open.pop();
      Record& rec = records.at(e.key);
      if (rec.closed || e.g > rec.g || e.steps != rec.steps) continue;
      rec.closed = true;
      ++result.expanded;

      const int a = int(e.key / stride_);
      const int b = int(e.key % stride_);
      if (goal_.satisfied(PlanNode{points_[a], points_[b]})) {
        result.cost = rec.g;
        std::uint64_t k = e.key;
        while (k != start_key) {
          const Record& r = records.at(k);
          const int pa = int(r.parent / stride_), pb = int(r.parent % stride_);
          const int ca = int(k / stride_), cb = int(k % stride_);
          PlanStep step;
          step.swing = r.swing;
          step.from = r.swing == Limb::A ? points_[pa] : points_[pb];
          step.to = r.swing == Limb::A ? points_[ca] : points_[cb];
          step.cost = step_cost(config_, step.from, step.to);
          result.steps.push_back(step);
          k = r.parent;
        }
        std::reverse(result.steps.begin(), result.steps.end());
        return result;
      }

      for (Limb swing : {Limb::A, Limb::B}) {
        const int moving = swing == Limb::A ? a : b;
        const int stance = swing == Limb::A ? b : a;
        if (e.steps == 0 && forced && swing != *forced) continue;
        if (is_detached(stance)) continue;
        if (is_detached(moving) && e.steps > 0) continue;
        for (int target : neighbours(stance)) {
          if (target == moving) continue;
          const int na = swing == Limb::A ? target : a;
          const int nb = swing == Limb::A ? b : target;
          if (config_.ik_check && !ik_ok(na, nb)) continue;
          const double g = e.g + step_cost(config_, points_[moving], points_[target]);
          const int steps = e.steps + 1;
          const std::uint64_t nk = key(na, nb);
          auto it = records.find(nk);
          if (it != records.end()) {
            const Record& old = it->second;
            if (old.closed) continue;
            if (g > old.g || (g == old.g && steps >= old.steps)) continue;
          }
          records[nk] = {g, steps, e.key, swing, false};
          open.push({g + h(na, nb), steps, target, seq++, nk, g});
        }
      }
    }
    throw Error(ErrorCode::kNoPath, "goal unreachable with the current map");
  }

 private:
  int index_of(const GraspPoint& g) {
    if (g.rail_id.empty()) {
      points_.push_back(g);
      detached_.push_back(int(points_.size()) - 1);
      return int(points_.size()) - 1;
    }
    for (std::size_t i = 0; i < num_targets_; ++i)
      if (points_[i].rail_id == g.rail_id && std::abs(points_[i].s - g.s) < 1e-9) return int(i);
    // Current foothold that is no longer a target (denied or newly blocked):
    // kept as a stance-only site.
    for (std::size_t i = num_targets_; i < points_.size(); ++i)
      if (points_[i].rail_id == g.rail_id && std::abs(points_[i].s - g.s) < 1e-9) return int(i);
    points_.push_back(g);
    stance_only_.push_back(int(points_.size()) - 1);
    return int(points_.size()) - 1;
  }

  bool is_detached(int i) const {
    return std::find(detached_.begin(), detached_.end(), i) != detached_.end();
  }

  std::uint64_t key(int a, int b) const { return std::uint64_t(a) * stride_ + std::uint64_t(b); }

  void build_faces() {
    stride_ = points_.size() + 1;
    std::map<std::string, int> ids;
    for (const Face& f : map_.faces) ids.emplace(f.id, int(ids.size()));
    face_of_.clear();
    for (const GraspPoint& p : points_)
      face_of_.push_back(p.face_id.empty() ? -1 : ids.at(p.face_id));
    const std::size_t nf = map_.faces.size();
    adjacency_.assign(nf * nf, false);
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t j = 0; j < nf; ++j)
        adjacency_[i * nf + j] = map_.faces_adjacent(map_.faces[i].id, map_.faces[j].id);
    neighbours_.assign(points_.size(), {});
    built_.assign(points_.size(), false);
  }

  bool is_stance_only(int i) const {
    return std::find(stance_only_.begin(), stance_only_.end(), i) != stance_only_.end();
  }

  const std::vector<int>& neighbours(int stance) {
    if (built_[stance]) return neighbours_[stance];
    built_[stance] = true;
    const GraspPoint& s = points_[stance];
    const std::size_t nf = map_.faces.size();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (int(i) == stance || is_detached(int(i)) || is_stance_only(int(i))) continue;
      const GraspPoint& p = points_[i];
      if (p.same_site(s)) continue;
      const double d = (p.position - s.position).norm();
      if (d < config_.min_stride - kStrideTol || d > config_.max_stride + kStrideTol) continue;
      if (!adjacency_[std::size_t(face_of_[i]) * nf + std::size_t(face_of_[stance])]) continue;
      neighbours_[stance].push_back(int(i));
    }
    return neighbours_[stance];
  }

  bool ik_ok(int a, int b) {
    const std::uint64_t k = key(a, b);
    auto it = ik_cache_.find(k);
    if (it != ik_cache_.end()) return it->second;
    const bool ok = closes(kin_, PlanNode{points_[a], points_[b]});
    ik_cache_.emplace(k, ok);
    return ok;
  }

  double h(int a, int b) const {
    return heuristic(map_, goal_, PlanNode{points_[a], points_[b]}, config_);
  }

  const EnvironmentMap& map_;
  const GoalSpec& goal_;
  const PlannerConfig& config_;
  const RobotModel& kin_;
  std::vector<GraspPoint> points_;
  std::size_t num_targets_ = 0;
  std::vector<int> detached_;
  std::vector<int> stance_only_;
  std::uint64_t stride_ = 1;
  std::vector<int> face_of_;
  std::vector<bool> adjacency_;
  std::vector<std::vector<int>> neighbours_;
  std::vector<bool> built_;
  std::unordered_map<std::uint64_t, bool> ik_cache_;
};

void check_start(const EnvironmentMap& map, const PlanNode& start, const PlannerConfig& config) {
  const bool da = start.a.rail_id.empty();
  const bool db = start.b.rail_id.empty();
  if (da && db) throw Error(ErrorCode::kInvalidStart, "start has no attached foot");
  if (!da && !map.find_rail(start.a.rail_id))
    throw Error(ErrorCode::kInvalidStart, "start foot A on unknown rail '" + start.a.rail_id + "'");
  if (!db && !map.find_rail(start.b.rail_id))
    throw Error(ErrorCode::kInvalidStart, "start foot B on unknown rail '" + start.b.rail_id + "'");
  if (!da && !db && !feasible_pair(map, start.a, start.b, config))
    throw Error(ErrorCode::kInvalidStart, "start footholds violate stride or face adjacency");
}

FootholdPlan finish(const EnvironmentMap& map, const PlanNode& start, SearchResult result,
                    const RobotModel& kin, const Pose& start_base) {
  (void)map;
  FootholdPlan plan;
  plan.start = start;
  plan.steps = std::move(result.steps);
  plan.expanded = result.expanded;
  plan.total_cost = result.cost;
  // The search snaps the start onto the nearest discretised site; report the
  // feet where they really are.
  PlanNode cur = start;
  for (PlanStep& s : plan.steps) {
    s.from = cur.foot(s.swing);
    cur.foot(s.swing) = s.to;
  }

  Pose hint = start_base;
  for (const PlanNode& node : plan.nodes()) {
    if (node.a.rail_id.empty() || node.b.rail_id.empty()) {
      plan.base_waypoints.push_back(start_base);
      plan.waypoint_ok.push_back(true);
      continue;
    }
    try {
      const RobotState s = solve_double_support(kin, node.a, node.b, hint);
      plan.base_waypoints.push_back(s.base);
      plan.waypoint_ok.push_back(true);
      hint = s.base;
    } catch (const Error&) {
      Pose nominal;
      nominal.position = nominal_base_position(kin, node.a, node.b);
      nominal.orientation = kin.base_orientation;
      plan.base_waypoints.push_back(nominal);
      plan.waypoint_ok.push_back(false);
    }
  }
  return plan;
}

}  // namespace

FootholdPlan plan(const EnvironmentMap& map, const PlanNode& start, const GoalSpec& goal,
                  const PlannerConfig& config, const RobotModel& kin, const DenyList& deny) {
  config.validate();
  goal.validate(map);
  check_start(map, start, config);
  if (start.a.rail_id.empty() || start.b.rail_id.empty())
    throw Error(ErrorCode::kInvalidStart, "plan() needs both feet attached; use replan()");
  Search search(map, goal, config, kin, deny);
  SearchResult r = search.run(start, std::nullopt);
  Pose base;
  base.orientation = kin.base_orientation;
  base.position = nominal_base_position(kin, start.a, start.b);
  return finish(map, start, std::move(r), kin, base);
}

FootholdPlan replan(const EnvironmentMap& map, const RobotState& current, const GoalSpec& goal,
                    const PlannerConfig& config, const RobotModel& kin, const DenyList& deny) {
  config.validate();
  goal.validate(map);
  if (current.anchor_count() == 0)
    throw Error(ErrorCode::kInvalidStart, "no attached foot to plan from");

  PlanNode start;
  std::optional<Limb> forced;
  for (Limb l : {Limb::A, Limb::B}) {
    if (current.attached(l)) {
      start.foot(l) = *current.attached(l);
    } else {
      GraspPoint hover;
      hover.position = forward_kinematics(kin.limb(l), current.base, current.joints(l)).position;
      start.foot(l) = hover;
      forced = l;
    }
  }
  check_start(map, start, config);
  Search search(map, goal, config, kin, deny);
  SearchResult r = search.run(start, forced);
  return finish(map, start, std::move(r), kin, current.base);
}

}  // namespace mlivr
