#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mlivr/env.hpp"
#include "mlivr/executive.hpp"
#include "mlivr/planner.hpp"

namespace mlivr {

// A fully parsed and validated scenario document.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  EnvironmentMap map;
  MissionSetup setup;
  MissionConfig mission;  // noise_seed follows `seed`
  PlanNode start;
  // Digest of the parts a saved plan depends on: faces, rails, grasp pitch,
  // robot and planner. Obstacles and defects are left out.
  std::string hash;
};

// Throws Error(kParse) with line and column, or Error(kValidation) naming the field.
Scenario load_scenario(std::string_view document);
Scenario load_scenario_file(const std::string& path);

// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace mlivr
