// Command-line runner: plan, simulate or replay scenario documents.
// Talks to the simulator only through the C interface.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mlivr/mlivr.h"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string command;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string plan_file;
};

struct RunOutput {
  int exit_code = 0;
  std::string out;
  std::string err;
};

int exit_code(mlivr_status st) {
  switch (st) {
    case MLIVR_OK: return 0;
    case MLIVR_ERR_NO_PATH: return 2;
    case MLIVR_ERR_FAULT: return 3;
    default: return 1;
  }
}

RunOutput error(mlivr_status st, const std::string& what) {
  RunOutput r;
  r.exit_code = exit_code(st);
  r.err = what + ": " + mlivr_status_name(st) + ": " + mlivr_last_error() + "\n";
  return r;
}

std::string fmt_cost(double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", c);
  return buf;
}

// RAII wrappers over the opaque handles.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using ScenarioHandle = Handle<mlivr_scenario, mlivr_scenario_free>;
using PlanHandle = Handle<mlivr_plan, mlivr_plan_free>;
using ReportHandle = Handle<mlivr_report, mlivr_report_free>;

RunOutput run_one(const Options& opt, const std::string& scenario_path, const std::string& out_dir) {
  ScenarioHandle sc;
  mlivr_status st = mlivr_scenario_load_file(scenario_path.c_str(), &sc.p);
  if (st != MLIVR_OK) return error(st, scenario_path);
  if (opt.seed) mlivr_scenario_set_seed(sc.p, *opt.seed);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return error(MLIVR_ERR_IO, out_dir + ": " + ec.message());

  RunOutput r;
  if (opt.command == "plan") {
    PlanHandle plan;
    st = mlivr_plan_compute(sc.p, &plan.p);
    if (st != MLIVR_OK) return error(st, scenario_path);
    const std::string file = (fs::path(out_dir) / "plan.json").string();
    st = mlivr_plan_write_file(plan.p, file.c_str());
    if (st != MLIVR_OK) return error(st, file);
    r.out = "steps: " + std::to_string(mlivr_plan_step_count(plan.p)) +
            ", cost: " + fmt_cost(mlivr_plan_total_cost(plan.p)) + "\n";
    return r;
  }

  PlanHandle fixed;
  if (opt.command == "replay") {
    st = mlivr_plan_read_file(sc.p, opt.plan_file.c_str(), &fixed.p);
    if (st != MLIVR_OK) return error(st, opt.plan_file);
  }
  ReportHandle rep;
  st = mlivr_simulate(sc.p, fixed.p, &rep.p);
  if (!rep.p) return error(st, scenario_path);
  const std::string fault = st == MLIVR_OK ? "" : mlivr_last_error();
  const mlivr_status wst = mlivr_report_write(rep.p, out_dir.c_str());
  if (wst != MLIVR_OK) return error(wst, out_dir);

  r.exit_code = exit_code(st);
  r.out = std::string("final_state: ") + mlivr_report_final_state(rep.p) +
          ", steps: " + std::to_string(mlivr_report_steps_executed(rep.p)) +
          ", replans: " + std::to_string(mlivr_report_replans(rep.p)) + "\n";
  if (!fault.empty()) r.err = scenario_path + ": " + fault + "\n";
  return r;
}

std::vector<std::string> split_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rail-walking robot planner and simulator"};
  app.require_subcommand(1);
  Options opt;
  std::string scenario;
  std::string batch;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario, "Scenario document");
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Override the scenario seed");
    sub->add_option("--batch", batch, "Comma-separated scenario files run concurrently");
    return sub;
  };
  add_common(app.add_subcommand("plan", "Compute a foothold plan and write plan.json"));
  add_common(app.add_subcommand("simulate", "Run the mission and write logs"));
  CLI::App* replay = add_common(app.add_subcommand("replay", "Execute a saved plan without re-planning"));
  replay->add_option("--plan", opt.plan_file, "Plan file written by 'plan'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  opt.command = app.get_subcommands().front()->get_name();

  std::vector<std::string> scenarios = split_list(batch);
  if (!scenario.empty()) scenarios.insert(scenarios.begin(), scenario);
  if (scenarios.empty()) {
    std::cerr << "no scenario given\n";
    return 1;
  }

  std::vector<RunOutput> results(scenarios.size());
  if (scenarios.size() == 1) {
    results[0] = run_one(opt, scenarios[0], opt.out_dir);
  } else {
    // Each run writes to its own subdirectory named after the scenario file.
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      const std::string dir =
          (fs::path(opt.out_dir) / (std::to_string(i) + "_" + fs::path(scenarios[i]).stem().string())).string();
      workers.emplace_back([&, i, dir] { results[i] = run_one(opt, scenarios[i], dir); });
    }
    for (std::thread& t : workers) t.join();
  }

  int code = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results.size() > 1) std::cout << scenarios[i] << ": ";
    std::cout << results[i].out;
    if (results.size() > 1 && results[i].out.empty()) std::cout << "failed\n";
    std::cerr << results[i].err;
    code = std::max(code, results[i].exit_code);
  }
  return code;
}
