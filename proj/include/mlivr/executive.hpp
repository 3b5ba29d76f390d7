#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mlivr/env.hpp"
#include "mlivr/gait.hpp"
#include "mlivr/grasp.hpp"
#include "mlivr/kinematics.hpp"
#include "mlivr/planner.hpp"
#include "mlivr/servo.hpp"

namespace mlivr {

enum class MissionState {
  kIdle,
  kPlanning,
  kExecutingStep,
  kAligning,
  kGrasping,
  kVerifying,
  kReplanning,
  kGoalReached,
  kFault
};

const char* to_string(MissionState s);

struct MissionConfig {
  GoalSpec goal;
  int servo_retries = 3;
  int replan_limit = 10;
  std::uint64_t noise_seed = 0;
  double localization_noise_sigma = 0.0;
  // Replay: execute this plan as is; anything that would need a new plan faults.
  std::optional<FootholdPlan> fixed_plan;

  void validate() const;
};

// Everything the lower layers need, bundled.
struct MissionSetup {
  RobotModel kin = RobotModel::default_model();
  PlannerConfig planner;
  GaitConfig gait;
  ServoConfig servo;
  CameraModel camera;
  GraspTolerance grasp;
  GripperGeometry gripper;
};

struct MissionEvent {
  double t = 0.0;
  MissionState state = MissionState::kIdle;
  std::string event;
  std::string detail;
  std::optional<Limb> limb;
  std::string rail;
  std::optional<double> s;
};

struct MissionMetrics {
  int steps_executed = 0;
  int replans = 0;
  int servo_iterations_total = 0;
  double simulated_duration = 0.0;
  double base_path_length = 0.0;
};

struct ServoRun {
  int run = 0;
  Limb limb = Limb::A;
  GraspPoint target;
  ServoResult::Status status = ServoResult::Status::kNonConvergence;
  std::vector<ServoTraceEntry> trace;
};

struct MissionReport {
  MissionState final_state = MissionState::kIdle;
  std::vector<MissionEvent> events;
  MissionMetrics metrics;
  Trajectory trajectory;
  std::vector<std::uint8_t> anchors;  // per sample: bit 0 = A attached, bit 1 = B attached
  std::vector<ServoRun> servo_runs;
  std::vector<FootholdPlan> plans;  // every plan adopted, in order
};

// Base pose from the attached feet and joint readings, plus optional Gaussian
// position noise. Throws Error(kNoAnchor) with no foot attached.
Pose localize(const RobotState& state, const RobotModel& kin, double noise_sigma,
              std::mt19937_64& rng);

// Double-support state holding `start`. Throws Error(kInvalidStart).
RobotState initial_state(const PlanNode& start, const RobotModel& kin);

// The mission state machine, one transition per step().
class Mission {
 public:
  Mission(EnvironmentMap map, RobotState initial, MissionConfig config, MissionSetup setup);
  ~Mission();
  Mission(Mission&&) noexcept;
  Mission& operator=(Mission&&) noexcept;

  MissionState state() const;
  bool terminal() const;
  // Throws Error(kInvalidState) when already terminal.
  MissionState step();

  const MissionReport& report() const;
  const RobotState& robot() const;
  const EnvironmentMap& map() const;
  const FootholdPlan* current_plan() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MissionReport run_mission(EnvironmentMap map, const RobotState& initial, const MissionConfig& config,
                          const MissionSetup& setup);

}  // namespace mlivr
