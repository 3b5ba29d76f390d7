#pragma once

#include <ostream>
#include <string>
#include <string_view>

#include "mlivr/env.hpp"
#include "mlivr/executive.hpp"
#include "mlivr/planner.hpp"

namespace mlivr {

// Shortest text that reads back to the same double; "-0" prints as "0".
std::string format_number(double v);

// One JSON object per line: t, state, event, detail, then limb/rail/s when set.
void write_events_jsonl(std::ostream& out, const std::vector<MissionEvent>& events);

// Header: t,base_x,base_y,base_z,qw,qx,qy,qz,a1..a5,b1..b5,phase
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

// Header: run,iteration,error_norm,v_x,v_y,v_z,w_x,w_y,w_z
void write_servo_csv(std::ostream& out, const std::vector<ServoRun>& runs);

void write_metrics_json(std::ostream& out, const MissionReport& report);

std::string plan_to_json(const FootholdPlan& plan, const std::string& scenario_hash);

// Rebuilds the plan against `map`. Throws Error(kHashMismatch) when the plan
// was made for a different scenario, Error(kParse)/Error(kValidation) otherwise.
FootholdPlan plan_from_json(std::string_view document, const EnvironmentMap& map,
                            const std::string& scenario_hash);

}  // namespace mlivr
