#ifndef KDNSIM_H
#define KDNSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>

// Number of observation features, in order: packet loss (fraction),
// latency (ms), throughput (bit/s), speed (m/s), distance to serving
// station (m), serving station load ratio.
#define KDN_OBSERVATION_LEN 6

// Number of actions: 0 no-op, 1..=3 handover to the r-th nearest other
// station, 4 power up, 5 power down.
#define KDN_ACTION_COUNT 6

typedef enum KdnStatus {
  KDN_STATUS_OK = 0,
  KDN_STATUS_NULL_POINTER = 1,
  KDN_STATUS_INVALID_ARGUMENT = 2,
  KDN_STATUS_CONFIG = 3,
  KDN_STATUS_IO = 4,
  KDN_STATUS_INCOMPATIBLE_TABLE = 5,
  KDN_STATUS_TABLE_FORMAT = 6,
  KDN_STATUS_EPISODE_FINISHED = 7,
  KDN_STATUS_RUNTIME = 8,
  KDN_STATUS_PANIC = 9,
} KdnStatus;

// Running episode handle.
typedef struct KdnEnv KdnEnv;

// Q-table handle.
typedef struct KdnQTable KdnQTable;

// Scenario handle.
typedef struct KdnScenario KdnScenario;

// Episode-level KPIs.
typedef struct KdnEpisodeStats {
  uint32_t ticks;
  double mean_throughput_bps;
  double mean_latency_ms;
  double mean_packet_loss;
  double cumulative_reward;
  uint64_t handovers;
  uint64_t power_changes;
} KdnEpisodeStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *kdn_last_error(void);

// Library version as a static NUL-terminated string.
const char *kdn_version(void);

// Creates a scenario with all defaults.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle pointer.
enum KdnStatus kdn_scenario_new_default(struct KdnScenario **out);

// Parses a scenario from TOML text.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` as in
// [`kdn_scenario_new_default`].
enum KdnStatus kdn_scenario_from_toml(const char *toml, struct KdnScenario **out);

// Loads a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` as in
// [`kdn_scenario_new_default`].
enum KdnStatus kdn_scenario_load(const char *path, struct KdnScenario **out);

// Sets the base seed.
//
// # Safety
// `scenario` must be a live handle.
enum KdnStatus kdn_scenario_set_seed(struct KdnScenario *scenario, uint64_t seed);

// Sets the number of UEs (must be at least 1).
//
// # Safety
// `scenario` must be a live handle.
enum KdnStatus kdn_scenario_set_ue_count(struct KdnScenario *scenario, uint32_t ue_count);

// Sets the number of ticks per episode.
//
// # Safety
// `scenario` must be a live handle.
enum KdnStatus kdn_scenario_set_ticks(struct KdnScenario *scenario, uint32_t ticks);

// Sets the number of training episodes.
//
// # Safety
// `scenario` must be a live handle.
enum KdnStatus kdn_scenario_set_episodes(struct KdnScenario *scenario, uint32_t episodes);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must be null or a handle not yet freed.
void kdn_scenario_free(struct KdnScenario *scenario);

// Starts an episode of `scenario` on the world seeded by `seed`. The env
// keeps its own copy of the scenario.
//
// # Safety
// `scenario` must be a live handle; `out` writable.
enum KdnStatus kdn_env_new(const struct KdnScenario *scenario, uint64_t seed, struct KdnEnv **out);

// Advances mobility by one tick and reports whose turn it is. Calling it
// again before [`kdn_env_step`] returns the same decision point.
//
// # Safety
// `env` must be a live handle; `ue_id` writable; `observation` must hold
// `KDN_OBSERVATION_LEN` doubles.
enum KdnStatus kdn_env_begin_tick(struct KdnEnv *env, uint32_t *ue_id, double *observation);

// Applies `action` to `ue_id` and closes the tick. `post_observation` (may
// be null) receives the UE's telemetry after the action.
//
// # Safety
// `env` must be a live handle; `reward` and `done` writable;
// `post_observation` null or room for `KDN_OBSERVATION_LEN` doubles.
enum KdnStatus kdn_env_step(struct KdnEnv *env,
                            uint32_t ue_id,
                            uint32_t action,
                            double *reward,
                            bool *done,
                            double *post_observation);

// Aggregate KPIs of the ticks completed so far.
//
// # Safety
// `env` must be a live handle; `stats` writable.
enum KdnStatus kdn_env_stats(const struct KdnEnv *env, struct KdnEpisodeStats *stats);

// Releases an env. Null is ignored.
//
// # Safety
// `env` must be null or a handle not yet freed.
void kdn_env_free(struct KdnEnv *env);

// Trains a fresh table on `scenario` (same procedure as `kdnsim train`).
//
// # Safety
// `scenario` must be a live handle; `out` writable.
enum KdnStatus kdn_qtable_train(const struct KdnScenario *scenario, struct KdnQTable **out);

// Loads a table file, checking it against the scenario's state bins.
//
// # Safety
// `path` NUL-terminated; `scenario` a live handle; `out` writable.
enum KdnStatus kdn_qtable_load(const char *path,
                               const struct KdnScenario *scenario,
                               struct KdnQTable **out);

// Writes a table file whose header records the scenario's bins and
// hyperparameters.
//
// # Safety
// `table` and `scenario` live handles; `path` NUL-terminated.
enum KdnStatus kdn_qtable_save(const struct KdnQTable *table,
                               const struct KdnScenario *scenario,
                               const char *path);

// Table dimensions.
//
// # Safety
// `table` a live handle; `states` and `actions` writable.
enum KdnStatus kdn_qtable_shape(const struct KdnQTable *table, uint64_t *states, uint64_t *actions);

// Reads Q(state, action).
//
// # Safety
// `table` a live handle; `value` writable.
enum KdnStatus kdn_qtable_get(const struct KdnQTable *table,
                              uint64_t state,
                              uint64_t action,
                              double *value);

// Greedy action for a raw observation, discretized with the scenario's bins.
//
// # Safety
// `table` and `scenario` live handles; `observation` holds
// `KDN_OBSERVATION_LEN` doubles; `action` writable.
enum KdnStatus kdn_qtable_greedy(const struct KdnQTable *table,
                                 const struct KdnScenario *scenario,
                                 const double *observation,
                                 uint32_t *action);

// Releases a table. Null is ignored.
//
// # Safety
// `table` must be null or a handle not yet freed.
void kdn_qtable_free(struct KdnQTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KDNSIM_H */
