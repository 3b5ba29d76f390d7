#include "mlivr/mlivr.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "mlivr/error.hpp"
#include "mlivr/executive.hpp"
#include "mlivr/export.hpp"
#include "mlivr/scenario.hpp"

struct mlivr_scenario {
  mlivr::Scenario s;
};

struct mlivr_plan {
  mlivr::FootholdPlan plan;
  std::string hash;
};

struct mlivr_report {
  mlivr::MissionReport r;
};

namespace {

thread_local std::string g_last_error;

mlivr_status from_code(mlivr::ErrorCode c) {
  using mlivr::ErrorCode;
  switch (c) {
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kUnknownId:
    case ErrorCode::kInvalidStart:
      return MLIVR_ERR_VALIDATION;
    case ErrorCode::kNoPath:
    case ErrorCode::kUnreachable:
      return MLIVR_ERR_NO_PATH;
    case ErrorCode::kHashMismatch:
      return MLIVR_ERR_HASH_MISMATCH;
    case ErrorCode::kIo:
      return MLIVR_ERR_IO;
    default:
      return MLIVR_ERR_FAULT;
  }
}

mlivr_status fail(mlivr_status st, std::string msg) {
  g_last_error = std::move(msg);
  return st;
}

// Runs `f`, translating exceptions into a status and the thread's last error.
template <typename F>
mlivr_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const mlivr::Error& e) {
    return fail(from_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MLIVR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MLIVR_ERR_INTERNAL, e.what());
  }
}

mlivr_status write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return fail(MLIVR_ERR_IO, "cannot write '" + path + "'");
  out << text;
  out.close();
  if (!out) return fail(MLIVR_ERR_IO, "write to '" + path + "' failed");
  return MLIVR_OK;
}

}  // namespace

extern "C" {

const char* mlivr_version(void) { return "0.1.0"; }

const char* mlivr_status_name(mlivr_status status) {
  switch (status) {
    case MLIVR_OK: return "ok";
    case MLIVR_ERR_VALIDATION: return "validation";
    case MLIVR_ERR_NO_PATH: return "no_path";
    case MLIVR_ERR_FAULT: return "fault";
    case MLIVR_ERR_IO: return "io";
    case MLIVR_ERR_HASH_MISMATCH: return "hash_mismatch";
    case MLIVR_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MLIVR_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* mlivr_last_error(void) { return g_last_error.c_str(); }

mlivr_status mlivr_scenario_load_file(const char* path, mlivr_scenario** out) {
  if (!path || !out) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new mlivr_scenario{mlivr::load_scenario_file(path)};
    return MLIVR_OK;
  });
}

mlivr_status mlivr_scenario_load_string(const char* text, size_t length, mlivr_scenario** out) {
  if (!text || !out) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new mlivr_scenario{mlivr::load_scenario(std::string_view(text, length))};
    return MLIVR_OK;
  });
}

void mlivr_scenario_free(mlivr_scenario* scenario) { delete scenario; }

const char* mlivr_scenario_name(const mlivr_scenario* scenario) {
  return scenario ? scenario->s.name.c_str() : "";
}

const char* mlivr_scenario_hash(const mlivr_scenario* scenario) {
  return scenario ? scenario->s.hash.c_str() : "";
}

uint64_t mlivr_scenario_seed(const mlivr_scenario* scenario) { return scenario ? scenario->s.seed : 0; }

mlivr_status mlivr_scenario_set_seed(mlivr_scenario* scenario, uint64_t seed) {
  if (!scenario) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null scenario");
  scenario->s.seed = seed;
  scenario->s.mission.noise_seed = seed;
  return MLIVR_OK;
}

mlivr_status mlivr_plan_compute(const mlivr_scenario* scenario, mlivr_plan** out) {
  if (!scenario || !out) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const mlivr::Scenario& s = scenario->s;
    *out = new mlivr_plan{mlivr::plan(s.map, s.start, s.mission.goal, s.setup.planner, s.setup.kin),
                          s.hash};
    return MLIVR_OK;
  });
}

mlivr_status mlivr_plan_read_file(const mlivr_scenario* scenario, const char* path, mlivr_plan** out) {
  if (!scenario || !path || !out) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail(MLIVR_ERR_IO, std::string("cannot open '") + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    *out = new mlivr_plan{mlivr::plan_from_json(ss.str(), scenario->s.map, scenario->s.hash),
                          scenario->s.hash};
    return MLIVR_OK;
  });
}

mlivr_status mlivr_plan_write_file(const mlivr_plan* plan, const char* path) {
  if (!plan || !path) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return write_file(path, mlivr::plan_to_json(plan->plan, plan->hash)); });
}

void mlivr_plan_free(mlivr_plan* plan) { delete plan; }

size_t mlivr_plan_step_count(const mlivr_plan* plan) { return plan ? plan->plan.steps.size() : 0; }

double mlivr_plan_total_cost(const mlivr_plan* plan) { return plan ? plan->plan.total_cost : 0.0; }

mlivr_status mlivr_simulate(const mlivr_scenario* scenario, const mlivr_plan* fixed_plan,
                            mlivr_report** out) {
  if (!scenario || !out) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const mlivr::Scenario& s = scenario->s;
    mlivr::MissionConfig cfg = s.mission;
    if (fixed_plan) cfg.fixed_plan = fixed_plan->plan;
    const mlivr::RobotState init = mlivr::initial_state(s.start, s.setup.kin);
    *out = new mlivr_report{mlivr::run_mission(s.map, init, cfg, s.setup)};
    if ((*out)->r.final_state == mlivr::MissionState::kGoalReached) return MLIVR_OK;
    const auto& ev = (*out)->r.events;
    return fail(MLIVR_ERR_FAULT, ev.empty() ? "mission fault" : ev.back().event + ": " + ev.back().detail);
  });
}

void mlivr_report_free(mlivr_report* report) { delete report; }

const char* mlivr_report_final_state(const mlivr_report* report) {
  return report ? mlivr::to_string(report->r.final_state) : "";
}

int mlivr_report_steps_executed(const mlivr_report* report) {
  return report ? report->r.metrics.steps_executed : 0;
}

int mlivr_report_replans(const mlivr_report* report) { return report ? report->r.metrics.replans : 0; }

size_t mlivr_report_sample_count(const mlivr_report* report) {
  return report ? report->r.trajectory.samples.size() : 0;
}

int mlivr_report_min_anchors(const mlivr_report* report) {
  if (!report || report->r.anchors.empty()) return 0;
  int lo = 2;
  for (std::uint8_t m : report->r.anchors) lo = std::min(lo, int(m & 1u) + int((m >> 1) & 1u));
  return lo;
}

mlivr_status mlivr_report_write(const mlivr_report* report, const char* directory) {
  if (!report || !directory) return fail(MLIVR_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string dir = directory;
    const mlivr::MissionReport& r = report->r;
    std::ostringstream events, traj, servo, metrics;
    mlivr::write_events_jsonl(events, r.events);
    mlivr::write_trajectory_csv(traj, r.trajectory);
    mlivr::write_servo_csv(servo, r.servo_runs);
    mlivr::write_metrics_json(metrics, r);
    for (const auto& [name, text] : {std::pair{"events.jsonl", events.str()},
                                     std::pair{"trajectory.csv", traj.str()},
                                     std::pair{"servo_traces.csv", servo.str()},
                                     std::pair{"metrics.json", metrics.str()}}) {
      const mlivr_status st = write_file(dir + "/" + name, text);
      if (st != MLIVR_OK) return st;
    }
    return MLIVR_OK;
  });
}

}  // extern "C"
