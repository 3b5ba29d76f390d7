#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlivr/env.hpp"
#include "mlivr/kinematics.hpp"

namespace mlivr {

struct PlannerConfig {
  double min_stride = 0.2;
  double max_stride = 1.2;
  double step_cost = 1.0;
  double travel_weight = 1.0;  // per metre of swing-foot travel
  bool ik_check = false;

  void validate() const;
};

// Ordered foothold pair. A detached foot is represented by a GraspPoint with an
// empty rail id placed at the hand position.
struct PlanNode {
  GraspPoint a;
  GraspPoint b;

  const GraspPoint& foot(Limb l) const { return l == Limb::A ? a : b; }
  GraspPoint& foot(Limb l) { return l == Limb::A ? a : b; }
  Vec3 midpoint() const { return 0.5 * (a.position + b.position); }
};

struct PlanStep {
  Limb swing = Limb::A;
  GraspPoint from;
  GraspPoint to;
  double cost = 0.0;
};

struct GoalSpec {
  enum class Kind { kPoint, kRail };
  enum class Feet { kBoth, kAny };

  Kind kind = Kind::kPoint;
  Vec3 point = Vec3::Zero();
  double radius = 0.1;
  std::string rail;
  Interval interval;
  Feet feet = Feet::kBoth;

  static GoalSpec at_point(const Vec3& p, double radius);
  static GoalSpec on_rail(std::string rail, Interval interval, Feet feet = Feet::kBoth);

  void validate(const EnvironmentMap& map) const;
  bool satisfied(const PlanNode& node) const;
  // Lower bound on the distance the foot midpoint still has to travel.
  double midpoint_distance(const EnvironmentMap& map, const Vec3& midpoint, double max_stride) const;
};

struct FootholdPlan {
  PlanNode start;
  std::vector<PlanStep> steps;
  std::vector<Pose> base_waypoints;  // one per node, start included
  std::vector<bool> waypoint_ok;     // false when the closed chain did not solve
  double total_cost = 0.0;
  std::size_t expanded = 0;

  std::vector<PlanNode> nodes() const;
};

// Grasp sites excluded after repeated grasp failures.
struct DenyList {
  std::vector<std::pair<std::string, double>> sites;

  void add(const GraspPoint& g) { sites.emplace_back(g.rail_id, g.s); }
  bool contains(const GraspPoint& g) const;
};

double step_cost(const PlannerConfig& config, const GraspPoint& from, const GraspPoint& to);

double heuristic(const EnvironmentMap& map, const GoalSpec& goal, const PlanNode& node,
                 const PlannerConfig& config);

// Stride bounds and face adjacency for the pair (stance, to); with ik_check the
// closed chain must also solve.
bool feasible_pair(const EnvironmentMap& map, const GraspPoint& p, const GraspPoint& q,
                   const PlannerConfig& config);

bool feasible_step(const EnvironmentMap& map, const PlanNode& node, Limb swing,
                   const GraspPoint& to, const PlannerConfig& config, const RobotModel& kin);

// Minimum-cost step sequence from `start` to `goal`. Throws Error(kNoPath) or
// Error(kInvalidStart).
FootholdPlan plan(const EnvironmentMap& map, const PlanNode& start, const GoalSpec& goal,
                  const PlannerConfig& config, const RobotModel& kin, const DenyList& deny = {});

// Plans from the robot's current attachments. When one foot is detached the
// first step moves that foot from its current hand position.
FootholdPlan replan(const EnvironmentMap& map, const RobotState& current, const GoalSpec& goal,
                    const PlannerConfig& config, const RobotModel& kin, const DenyList& deny = {});

}  // namespace mlivr
