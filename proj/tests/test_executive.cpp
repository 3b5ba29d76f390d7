#include <gtest/gtest.h>

#include <random>

#include "mlivr/executive.hpp"
#include "mlivr/scenario.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mlivr;
using namespace testing_support;

namespace {

Scenario scenario(const std::string& name) {
  return load_scenario_file(std::string(MLIVR_SCENARIO_DIR) + "/" + name + ".json");
}

MissionReport run(const Scenario& s) {
  return run_mission(s.map, initial_state(s.start, s.setup.kin), s.mission, s.setup);
}

MissionReport stepped(const Scenario& s) {
  Mission m(s.map, initial_state(s.start, s.setup.kin), s.mission, s.setup);
  while (!m.terminal()) m.step();
  return m.report();
}

int count_events(const MissionReport& r, const std::string& name) {
  int n = 0;
  for (const MissionEvent& e : r.events) n += e.event == name;
  return n;
}

void expect_same(const MissionReport& a, const MissionReport& b) {
  EXPECT_EQ(a.final_state, b.final_state);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(a.events[i].t, b.events[i].t);
    EXPECT_EQ(a.events[i].state, b.events[i].state);
    EXPECT_EQ(a.events[i].event, b.events[i].event);
    EXPECT_EQ(a.events[i].detail, b.events[i].detail);
  }
  EXPECT_EQ(a.metrics.steps_executed, b.metrics.steps_executed);
  EXPECT_EQ(a.metrics.replans, b.metrics.replans);
  EXPECT_EQ(a.metrics.servo_iterations_total, b.metrics.servo_iterations_total);
  EXPECT_EQ(a.metrics.simulated_duration, b.metrics.simulated_duration);
  EXPECT_EQ(a.metrics.base_path_length, b.metrics.base_path_length);
  EXPECT_EQ(a.anchors, b.anchors);
  ASSERT_EQ(a.trajectory.samples.size(), b.trajectory.samples.size());
  for (std::size_t i = 0; i < a.trajectory.samples.size(); ++i) {
    EXPECT_EQ(a.trajectory.samples[i].joints_a, b.trajectory.samples[i].joints_a);
    EXPECT_EQ(a.trajectory.samples[i].joints_b, b.trajectory.samples[i].joints_b);
    EXPECT_EQ(a.trajectory.samples[i].base.position, b.trajectory.samples[i].base.position);
  }
}

void expect_anchored(const MissionReport& r) {
  ASSERT_EQ(r.anchors.size(), r.trajectory.samples.size());
  for (std::uint8_t a : r.anchors) EXPECT_NE(a & 3u, 0u);
}

}  // namespace

TEST(Executive, LocalizeDoubleSupportExact) {
  const Scenario s = scenario("fig7_wall_transition");
  const RobotState st = initial_state(s.start, s.setup.kin);
  std::mt19937_64 rng(1);
  const Pose p = localize(st, s.setup.kin, 0.0, rng);
  EXPECT_LT((p.position - st.base.position).norm(), 1e-9);
  EXPECT_LT(p.orientation.angularDistance(st.base.orientation), 1e-9);
}

TEST(Executive, LocalizeSingleFootAndNoise) {
  const Scenario s = scenario("fig7_wall_transition");
  RobotState st = initial_state(s.start, s.setup.kin);
  st.attached_b.reset();
  std::mt19937_64 rng(1);
  EXPECT_LT((localize(st, s.setup.kin, 0.0, rng).position - st.base.position).norm(), 1e-9);

  std::mt19937_64 r1(7), r2(7);
  for (int i = 0; i < 10; ++i) {
    const Pose a = localize(st, s.setup.kin, 0.01, r1);
    const Pose b = localize(st, s.setup.kin, 0.01, r2);
    EXPECT_EQ(a.position, b.position);
  }
  st.attached_a.reset();
  EXPECT_EQ(code_of([&] { localize(st, s.setup.kin, 0.0, rng); }), ErrorCode::kNoAnchor);
}

TEST(Executive, InitialStateRejectsBadStart) {
  const Scenario s = scenario("fig7_wall_transition");
  PlanNode bad = s.start;
  bad.b = bad.a;
  EXPECT_EQ(code_of([&] { initial_state(bad, s.setup.kin); }), ErrorCode::kInvalidStart);
}

TEST(Executive, WallTransitionMission) {
  const Scenario s = scenario("fig7_wall_transition");
  const MissionReport r = run(s);
  EXPECT_EQ(r.final_state, MissionState::kGoalReached);
  EXPECT_EQ(r.metrics.steps_executed, 4);
  EXPECT_EQ(r.metrics.replans, 0);
  ASSERT_EQ(r.plans.size(), 1u);
  int transitions = 0;
  for (const PlanStep& st : r.plans[0].steps) transitions += st.from.face_id != st.to.face_id;
  EXPECT_EQ(transitions, 1);
  EXPECT_EQ(r.plans[0].steps.back().to.rail_id, "W0");
  expect_anchored(r);
  EXPECT_GT(r.metrics.simulated_duration, 0.0);
}

TEST(Executive, HiddenObstacleForcesOneReplan) {
  const Scenario s = scenario("fig7_hidden_obstacle");
  const MissionReport r = run(s);
  EXPECT_EQ(r.final_state, MissionState::kGoalReached);
  EXPECT_EQ(r.metrics.replans, 1);
  EXPECT_EQ(count_events(r, "replan"), 1);
  ASSERT_EQ(r.plans.size(), 2u);
  expect_anchored(r);

  // The first plan used a foothold inside the hidden interval; the second does not.
  EnvironmentMap known = s.map;
  for (Obstacle& o : known.obstacles) o.revealed = true;
  bool first_hits = false;
  for (const PlanStep& st : r.plans[0].steps) first_hits = first_hits || known.is_blocked(st.to.rail_id, st.to.s);
  EXPECT_TRUE(first_hits);
  for (const PlanStep& st : r.plans[1].steps) EXPECT_FALSE(known.is_blocked(st.to.rail_id, st.to.s));

  // The obstacle shows up mid-swing, so the re-plan starts with B hovering.
  // Oracle: best first landing next to A, then the cheapest continuation.
  const PlanNode& from = r.plans[1].start;
  ASSERT_TRUE(from.b.rail_id.empty());
  const oracles::FootGraph g(known, s.setup.planner);
  const int stance = g.index(from.a);
  ASSERT_GE(stance, 0);
  double best = oracles::kInf;
  for (int t : g.near[std::size_t(stance)]) {
    if (!g.target_ok(known, t)) continue;
    const GraspPoint& to = g.pts[std::size_t(t)];
    const double first = s.setup.planner.step_cost + s.setup.planner.travel_weight * (to.position - from.b.position).norm();
    best = std::min(best, oracles::brute_force_plan(known, {from.a, to}, s.mission.goal, s.setup.planner, 5, first).cost);
  }
  EXPECT_EQ(r.plans[1].total_cost, best);
}

TEST(Executive, UnreachableGoalFaults) {
  const MissionReport r = run(scenario("unreachable_goal"));
  EXPECT_EQ(r.final_state, MissionState::kFault);
  EXPECT_EQ(r.metrics.steps_executed, 0);
  EXPECT_EQ(count_events(r, "no_path"), 1);
  EXPECT_EQ(r.events.back().event, "no_path");
}

TEST(Executive, FouledRailsExhaustReplans) {
  const Scenario s = scenario("fig7_fouled_rails");
  const MissionReport r = run(s);
  EXPECT_EQ(r.final_state, MissionState::kFault);
  EXPECT_EQ(r.metrics.replans, s.mission.replan_limit);
  // Every deny-list entry comes from VERIFYING and is followed by REPLANNING.
  int denied = 0;
  for (std::size_t i = 0; i + 1 < r.events.size(); ++i) {
    if (r.events[i].event != "foothold_denied") continue;
    ++denied;
    EXPECT_EQ(r.events[i].state, MissionState::kVerifying);
    EXPECT_EQ(r.events[i + 1].state, MissionState::kReplanning);
  }
  EXPECT_GE(denied, s.mission.replan_limit);
  expect_anchored(r);
}

TEST(Executive, FirstTransitionsAndTerminalGuard) {
  const Scenario s = scenario("fig7_wall_transition");
  Mission m(s.map, initial_state(s.start, s.setup.kin), s.mission, s.setup);
  EXPECT_EQ(m.state(), MissionState::kIdle);
  EXPECT_EQ(m.current_plan(), nullptr);
  EXPECT_EQ(m.step(), MissionState::kPlanning);
  EXPECT_EQ(m.step(), MissionState::kExecutingStep);
  ASSERT_NE(m.current_plan(), nullptr);
  EXPECT_EQ(m.current_plan()->steps.size(), 4u);
  while (!m.terminal()) m.step();
  EXPECT_EQ(code_of([&] { m.step(); }), ErrorCode::kInvalidState);
}

TEST(Executive, SteppingMatchesRun) {
  for (const char* name : {"fig7_wall_transition", "fig7_hidden_obstacle", "fig7_noisy", "fig7_fouled_rails"}) {
    SCOPED_TRACE(name);
    const Scenario s = scenario(name);
    expect_same(run(s), stepped(s));
  }
}

TEST(Executive, Deterministic) {
  const Scenario s = scenario("fig7_noisy");
  expect_same(run(s), run(s));
}

// Random starts and goals on the parallel rail world.
TEST(ExecutiveProperty, RandomScenariosStepEqualsRun) {
  const Scenario base = scenario("fig5_parallel_rails");
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int reached = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Scenario s = base;
    const double a = 0.05 * std::floor(u(rng) * 30.0);
    const double gap = 0.05 * (4 + std::floor(u(rng) * 10.0));
    if (a + gap > 2.0) continue;
    s.start = PlanNode{s.map.grasp_point("R1", a), s.map.grasp_point("R1", a + gap)};
    const char* goal_rail = u(rng) < 0.5 ? "R2" : "R3";
    s.mission.goal = GoalSpec::on_rail(goal_rail, {0.0, 2.0}, u(rng) < 0.5 ? GoalSpec::Feet::kBoth : GoalSpec::Feet::kAny);
    s.mission.noise_seed = rng();
    MissionReport r;
    try {
      r = run(s);
    } catch (const Error& e) {
      ADD_FAILURE() << "run_mission raised: " << e.what();
      continue;
    }
    expect_same(r, stepped(s));
    expect_anchored(r);
    reached += r.final_state == MissionState::kGoalReached;
  }
  EXPECT_GT(reached, 0);
}

TEST(MissionConfig, Validation) {
  MissionConfig c;
  c.goal = GoalSpec::on_rail("R", {0.0, 1.0});
  c.servo_retries = -1;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kValidation);
}
