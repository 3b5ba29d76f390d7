#include <gtest/gtest.h>

#include <random>

#include "mlivr/planner.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mlivr;
using namespace testing_support;
using oracles::brute_force_plan;

namespace {

const RobotModel kKin = RobotModel::default_model();

PlanNode node_on(const EnvironmentMap& m, const char* ra, double sa, const char* rb, double sb) {
  return {m.grasp_point(ra, sa), m.grasp_point(rb, sb)};
}

RobotState state_at(const PlanNode& n) {
  Pose hint;
  hint.position = nominal_base_position(kKin, n.a, n.b);
  return solve_double_support(kKin, n.a, n.b, hint);
}

// Structural checks every plan must pass.
void check_plan(const EnvironmentMap& m, const FootholdPlan& p, const GoalSpec& goal, const PlannerConfig& cfg) {
  PlanNode cur = p.start;
  double sum = 0.0;
  for (const PlanStep& s : p.steps) {
    ASSERT_TRUE(cur.foot(s.swing).same_site(s.from));
    EXPECT_TRUE(feasible_step(m, cur, s.swing, s.to, cfg, kKin));
    EXPECT_DOUBLE_EQ(s.cost, step_cost(cfg, s.from, s.to));
    sum += s.cost;
    cur.foot(s.swing) = s.to;
  }
  EXPECT_EQ(sum, p.total_cost);
  EXPECT_TRUE(goal.satisfied(cur));
  EXPECT_EQ(p.base_waypoints.size(), p.steps.size() + 1);
}

}  // namespace

TEST(Planner, FeasibleStepStrideBand) {
  const EnvironmentMap m = parallel_rails(3);
  const PlannerConfig cfg;
  const PlanNode n = node_on(m, "R0", 0.8, "R0", 1.2);
  EXPECT_TRUE(feasible_step(m, n, Limb::A, m.grasp_point("R1", 1.2), cfg, kKin));   // 1.0 m
  EXPECT_FALSE(feasible_step(m, n, Limb::A, m.grasp_point("R2", 1.2), cfg, kKin));  // 2.0 m
  EXPECT_FALSE(feasible_step(m, n, Limb::A, m.grasp_point("R0", 1.1), cfg, kKin));  // 0.1 m
}

TEST(Planner, AdjacentRailTwoSteps) {
  const EnvironmentMap m = parallel_rails(2);
  const PlannerConfig cfg;
  const GoalSpec goal = GoalSpec::on_rail("R1", {0.0, 2.0});
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  const FootholdPlan p = plan(m, start, goal, cfg, kKin);
  const auto oracle = brute_force_plan(m, start, goal, cfg, 4);
  EXPECT_EQ(p.steps.size(), 2u);
  EXPECT_EQ(p.total_cost, oracle.cost);
  EXPECT_DOUBLE_EQ(p.total_cost, 2 * cfg.step_cost + 2 * cfg.travel_weight * 1.0);
  check_plan(m, p, goal, cfg);
}

TEST(Planner, GoalAtStartIsEmpty) {
  const EnvironmentMap m = parallel_rails(2);
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  const FootholdPlan p = plan(m, start, GoalSpec::on_rail("R0", {0.0, 2.0}), PlannerConfig{}, kKin);
  EXPECT_TRUE(p.steps.empty());
  EXPECT_EQ(p.total_cost, 0.0);
}

TEST(Planner, BlockedGoalRailHasNoPath) {
  EnvironmentMap m = parallel_rails(2);
  m.obstacles.push_back({"R1", {0.0, 2.0}, true, 0.5});
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  EXPECT_EQ(code_of([&] { plan(m, start, GoalSpec::on_rail("R1", {0.0, 2.0}), PlannerConfig{}, kKin); }),
            ErrorCode::kNoPath);
}

TEST(Planner, InvalidStartRejected) {
  const EnvironmentMap m = parallel_rails(3);
  const PlanNode far = node_on(m, "R0", 1.0, "R2", 1.0);
  EXPECT_EQ(code_of([&] { plan(m, far, GoalSpec::on_rail("R1", {0.0, 2.0}), PlannerConfig{}, kKin); }),
            ErrorCode::kInvalidStart);
}

TEST(Planner, ReplanAvoidsRevealedObstacle) {
  EnvironmentMap m = parallel_rails(3);
  const PlannerConfig cfg;
  const GoalSpec goal = GoalSpec::on_rail("R2", {0.0, 2.0});
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  const FootholdPlan before = plan(m, start, goal, cfg, kKin);
  const GraspPoint first = before.steps.front().to;
  m.obstacles.push_back({first.rail_id, {first.s - 0.1, first.s + 0.1}, true, 0.5});
  const FootholdPlan after = replan(m, state_at(start), goal, cfg, kKin);
  for (const PlanStep& s : after.steps) EXPECT_FALSE(m.is_blocked(s.to.rail_id, s.to.s));
  EXPECT_GE(after.total_cost, before.total_cost);
  EXPECT_EQ(after.total_cost, brute_force_plan(m, start, goal, cfg, 8).cost);
  check_plan(m, after, goal, cfg);
}

TEST(Planner, ReplanWithoutNewsMatchesPlan) {
  const EnvironmentMap m = parallel_rails(3);
  const PlannerConfig cfg;
  const GoalSpec goal = GoalSpec::on_rail("R2", {0.0, 2.0});
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  const FootholdPlan a = plan(m, start, goal, cfg, kKin);
  const FootholdPlan b = replan(m, state_at(start), goal, cfg, kKin);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].swing, b.steps[i].swing);
    EXPECT_TRUE(a.steps[i].to.same_site(b.steps[i].to));
  }
  EXPECT_EQ(a.total_cost, b.total_cost);
}

TEST(Planner, DenyingConnectingRailCutsGraph) {
  const EnvironmentMap m = parallel_rails(3);
  DenyList deny;
  for (const GraspPoint& g : m.graspable_points())
    if (g.rail_id == "R1") deny.add(g);
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  EXPECT_EQ(code_of([&] {
              replan(m, state_at(start), GoalSpec::on_rail("R2", {0.0, 2.0}), PlannerConfig{}, kKin, deny);
            }),
            ErrorCode::kNoPath);
}

TEST(Planner, ReplanFromDetachedFootMovesItFirst) {
  const EnvironmentMap m = parallel_rails(2);
  const PlannerConfig cfg;
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  RobotState s = state_at(start);
  s.attached_b.reset();
  const FootholdPlan p = replan(m, s, GoalSpec::on_rail("R1", {0.0, 2.0}), cfg, kKin);
  ASSERT_FALSE(p.steps.empty());
  EXPECT_EQ(p.steps.front().swing, Limb::B);
  EXPECT_FALSE(p.steps.front().to.rail_id.empty());
}

TEST(Planner, Deterministic) {
  std::mt19937_64 rng(31);
  const EnvironmentMap m = oracles::random_map(rng);
  const PlannerConfig cfg;
  const auto start = oracles::random_start(m, cfg, rng);
  ASSERT_TRUE(start);
  const GoalSpec goal = oracles::random_goal(m, rng);
  std::string a, b;
  for (std::string* out : {&a, &b}) {
    try {
      const FootholdPlan p = plan(m, *start, goal, cfg, kKin);
      for (const PlanStep& s : p.steps) *out += std::string(to_string(s.swing)) + s.to.rail_id + std::to_string(s.to.s) + ";";
    } catch (const Error& e) {
      *out = e.what();
    }
  }
  EXPECT_EQ(a, b);
}

// Optimal cost against exhaustive relaxation, on random maps.
TEST(PlannerProperty, MatchesBruteForce) {
  std::mt19937_64 rng(32);
  PlannerConfig cfg;
  int compared = 0, no_path = 0;
  for (int trial = 0; compared < 30 && trial < 500; ++trial) {
    const EnvironmentMap m = oracles::random_map(rng, 120);
    const auto start = oracles::random_start(m, cfg, rng);
    if (!start) continue;
    const GoalSpec goal = oracles::random_goal(m, rng);
    try {
      const FootholdPlan p = plan(m, *start, goal, cfg, kKin);
      if (p.steps.size() > 6) continue;
      const int depth = int(std::ceil(p.total_cost / cfg.step_cost)) + 1;
      const auto o = brute_force_plan(m, *start, goal, cfg, depth);
      EXPECT_EQ(p.total_cost, o.cost) << "trial " << trial;
      check_plan(m, p, goal, cfg);
      ++compared;
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kNoPath);
      // No path at all: the oracle must agree over a generous depth.
      EXPECT_EQ(brute_force_plan(m, *start, goal, cfg, 12).cost, oracles::kInf);
      ++no_path;
    }
  }
  EXPECT_EQ(compared, 30);
}

TEST(PlannerProperty, HeuristicIsAdmissible) {
  std::mt19937_64 rng(33);
  PlannerConfig cfg;
  int checked = 0;
  for (int trial = 0; checked < 200 && trial < 400; ++trial) {
    const EnvironmentMap m = oracles::random_map(rng, 80);
    const GoalSpec goal = oracles::random_goal(m, rng);
    for (int k = 0; k < 5; ++k) {
      const auto node = oracles::random_start(m, cfg, rng);
      if (!node) break;
      const auto o = brute_force_plan(m, *node, goal, cfg, 10);
      if (o.cost == oracles::kInf) continue;
      EXPECT_LE(heuristic(m, goal, *node, cfg), o.cost + 1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(PlannerProperty, RevealingObstaclesNeverLowersCost) {
  std::mt19937_64 rng(34);
  PlannerConfig cfg;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; checked < 30 && trial < 300; ++trial) {
    EnvironmentMap m = oracles::random_map(rng, 100);
    const auto start = oracles::random_start(m, cfg, rng);
    if (!start) continue;
    const GoalSpec goal = oracles::random_goal(m, rng);
    double before;
    try {
      before = plan(m, *start, goal, cfg, kKin).total_cost;
    } catch (const Error&) {
      continue;
    }
    const RailSegment& r = m.rails[std::size_t(u(rng) * double(m.rails.size())) % m.rails.size()];
    const double a = u(rng) * r.length;
    Obstacle o{r.id, {a, std::min(r.length, a + 0.4)}, true, 0.5};
    // Keep the start footholds clear so the start stays valid.
    if ((start->a.rail_id == r.id && o.interval.contains(start->a.s)) ||
        (start->b.rail_id == r.id && o.interval.contains(start->b.s)))
      continue;
    m.obstacles.push_back(o);
    try {
      EXPECT_GE(plan(m, *start, goal, cfg, kKin).total_cost, before);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNoPath);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 30);
}

TEST(Planner, IkCheckAgreesOnParallelRails) {
  const EnvironmentMap m = parallel_rails(2);
  PlannerConfig cfg;
  cfg.ik_check = true;
  const PlanNode start = node_on(m, "R0", 0.8, "R0", 1.2);
  const FootholdPlan p = plan(m, start, GoalSpec::on_rail("R1", {0.0, 2.0}), cfg, kKin);
  EXPECT_EQ(p.steps.size(), 2u);
  for (bool ok : p.waypoint_ok) EXPECT_TRUE(ok);
}
