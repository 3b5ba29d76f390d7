/* Stable C interface to the rail-walking robot simulator.
 *
 * All objects are opaque and owned by the caller once returned; release them
 * with the matching *_free function. Functions returning mlivr_status leave a
 * description of the last failure in mlivr_last_error() (per thread).
 */
#ifndef MLIVR_H
#define MLIVR_H

#include <stddef.h>
#include <stdint.h>

#if defined(MLIVR_BUILDING_LIBRARY)
#define MLIVR_API __attribute__((visibility("default")))
#else
#define MLIVR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mlivr_status {
  MLIVR_OK = 0,
  MLIVR_ERR_VALIDATION = 1,
  MLIVR_ERR_NO_PATH = 2,
  MLIVR_ERR_FAULT = 3,
  MLIVR_ERR_IO = 4,
  MLIVR_ERR_HASH_MISMATCH = 5,
  MLIVR_ERR_INVALID_ARGUMENT = 6,
  MLIVR_ERR_INTERNAL = 7
} mlivr_status;

typedef struct mlivr_scenario mlivr_scenario;
typedef struct mlivr_plan mlivr_plan;
typedef struct mlivr_report mlivr_report;

MLIVR_API const char* mlivr_version(void);
MLIVR_API const char* mlivr_status_name(mlivr_status status);
/* Empty string when the last call on this thread succeeded. */
MLIVR_API const char* mlivr_last_error(void);

/* Scenario documents. */
MLIVR_API mlivr_status mlivr_scenario_load_file(const char* path, mlivr_scenario** out);
MLIVR_API mlivr_status mlivr_scenario_load_string(const char* text, size_t length,
                                                  mlivr_scenario** out);
MLIVR_API void mlivr_scenario_free(mlivr_scenario* scenario);
MLIVR_API const char* mlivr_scenario_name(const mlivr_scenario* scenario);
MLIVR_API const char* mlivr_scenario_hash(const mlivr_scenario* scenario);
MLIVR_API uint64_t mlivr_scenario_seed(const mlivr_scenario* scenario);
MLIVR_API mlivr_status mlivr_scenario_set_seed(mlivr_scenario* scenario, uint64_t seed);

/* Foothold plans. */
MLIVR_API mlivr_status mlivr_plan_compute(const mlivr_scenario* scenario, mlivr_plan** out);
/* Fails with MLIVR_ERR_HASH_MISMATCH when the plan belongs to another scenario. */
MLIVR_API mlivr_status mlivr_plan_read_file(const mlivr_scenario* scenario, const char* path,
                                            mlivr_plan** out);
MLIVR_API mlivr_status mlivr_plan_write_file(const mlivr_plan* plan, const char* path);
MLIVR_API void mlivr_plan_free(mlivr_plan* plan);
MLIVR_API size_t mlivr_plan_step_count(const mlivr_plan* plan);
MLIVR_API double mlivr_plan_total_cost(const mlivr_plan* plan);

/* Runs the mission. With `fixed_plan` the plan is executed without
 * re-planning. Returns MLIVR_OK when the goal was reached and
 * MLIVR_ERR_FAULT when the mission faulted; in both cases *out holds the
 * report. */
MLIVR_API mlivr_status mlivr_simulate(const mlivr_scenario* scenario, const mlivr_plan* fixed_plan,
                                      mlivr_report** out);
MLIVR_API void mlivr_report_free(mlivr_report* report);
MLIVR_API const char* mlivr_report_final_state(const mlivr_report* report);
MLIVR_API int mlivr_report_steps_executed(const mlivr_report* report);
MLIVR_API int mlivr_report_replans(const mlivr_report* report);
MLIVR_API size_t mlivr_report_sample_count(const mlivr_report* report);
/* Fewest feet attached at any trajectory sample. */
MLIVR_API int mlivr_report_min_anchors(const mlivr_report* report);
/* Writes events.jsonl, trajectory.csv, servo_traces.csv and metrics.json into
 * `directory`, which must exist. */
MLIVR_API mlivr_status mlivr_report_write(const mlivr_report* report, const char* directory);

#ifdef __cplusplus
}
#endif

#endif /* MLIVR_H */
