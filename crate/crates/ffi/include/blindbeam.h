#ifndef BLINDBEAM_H
#define BLINDBEAM_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  BB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BB_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  BB_STATUS_INVALID_UTF8 = 2,
  /**
   * An argument was out of range or named something unknown.
   */
  BB_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A configuration or scenario was rejected.
   */
  BB_STATUS_CONFIG = 4,
  /**
   * The computation itself failed.
   */
  BB_STATUS_RUNTIME = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  BB_STATUS_PANIC = 6,
} BbStatus;

/**
 * One realised multi-IRS channel with its phase grids.
 */
typedef struct BbChannel BbChannel;

/**
 * Experiment settings being assembled key by key.
 */
typedef struct BbConfig BbConfig;

/**
 * Rows and summary of a finished experiment.
 */
typedef struct BbOutput BbOutput;

/**
 * A deployment description.
 */
typedef struct BbScenario BbScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *bb_version(void);

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *bb_last_error(void);

/**
 * Releases a string returned as `char *`.
 *
 * # Safety
 * `s` must be null or a pointer returned by this library and not yet freed.
 */
void bb_string_free(char *s);

/**
 * New config for `kind` (`scaling`, `compare`, `conditions`, `examples`,
 * `lemma-check`) with that kind's defaults.
 *
 * # Safety
 * `kind` must be a NUL-terminated string; `out` must be writable.
 */
BbStatus bb_config_new(const char *kind, BbConfig **out);

/**
 * Sets one config key, as in a config file (`N`, `L`, `K`, `T`, `trials`,
 * `seed`, `methods`, `scenario`, `threads`, ...). The key is checked
 * immediately; a rejected key leaves the config unchanged.
 *
 * # Safety
 * `cfg` must come from [`bb_config_new`]; `key` and `value` must be
 * NUL-terminated strings.
 */
BbStatus bb_config_set(BbConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be null or come from [`bb_config_new`] and not be used again.
 */
void bb_config_free(BbConfig *cfg);

/**
 * Runs the configured experiment. Failed assertions (examples, deviation
 * checks) still produce an output; query them with [`bb_output_passed`].
 *
 * # Safety
 * `cfg` must come from [`bb_config_new`]; `out` must be writable.
 */
BbStatus bb_run(const BbConfig *cfg, BbOutput **out);

/**
 * CSV text of the output, borrowed from `output`.
 *
 * # Safety
 * `output` must come from [`bb_run`].
 */
const char *bb_output_csv(const BbOutput *output);

/**
 * Number of CSV rows, header and summary excluded.
 *
 * # Safety
 * `output` must come from [`bb_run`]; `rows` must be writable.
 */
BbStatus bb_output_num_rows(const BbOutput *output, size_t *rows);

/**
 * Whether every assertion of the run held.
 *
 * # Safety
 * `output` must come from [`bb_run`]; `passed` must be writable.
 */
BbStatus bb_output_passed(const BbOutput *output, bool *passed);

/**
 * # Safety
 * `output` must be null or come from [`bb_run`] and not be used again.
 */
void bb_output_free(BbOutput *output);

/**
 * Built-in deployment: `double_irs` or `eight_irs`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
BbStatus bb_scenario_builtin(const char *name, BbScenario **out);

/**
 * Parses a scenario in the key-value file format. Relative `propagation`
 * file references are not allowed here.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
BbStatus bb_scenario_parse(const char *text, BbScenario **out);

/**
 * # Safety
 * `scenario` must be null or come from a `bb_scenario_*` constructor and
 * not be used again.
 */
void bb_scenario_free(BbScenario *scenario);

/**
 * Draws one channel with `num_elements` per IRS (0 keeps the scenario's
 * own `N`). The same `(seed, trial)` always gives the same channel.
 *
 * # Safety
 * `scenario` must come from a `bb_scenario_*` constructor; `out` must be
 * writable.
 */
BbStatus bb_scenario_realize(const BbScenario *scenario,
                             size_t num_elements,
                             uint64_t seed,
                             uint64_t trial,
                             BbChannel **out);

/**
 * # Safety
 * `channel` must be null or come from [`bb_scenario_realize`] and not be
 * used again.
 */
void bb_channel_free(BbChannel *channel);

/**
 * Number of IRSs `L` and elements per IRS `N`.
 *
 * # Safety
 * `channel` must come from [`bb_scenario_realize`]; `num_irs` and
 * `num_elements` must be writable.
 */
BbStatus bb_channel_shape(const BbChannel *channel, size_t *num_irs, size_t *num_elements);

/**
 * Effective channel `g` for phase indices laid out IRS by IRS (`L*N`
 * entries, each below that IRS's `K`).
 *
 * # Safety
 * `channel` must come from [`bb_scenario_realize`]; `indices` must point to
 * `len` values; `re` and `im` must be writable.
 */
BbStatus bb_channel_effective(const BbChannel *channel,
                              const uint32_t *indices,
                              size_t len,
                              double *re,
                              double *im);

/**
 * Runs one method (`zero`, `random`, `virtual-single`, `csm`, `cpp`) on a
 * noiseless channel. `samples` is `T` per IRS for `csm` and `T` per IRS
 * times `L` for the joint methods; it is ignored by `zero` and `cpp`.
 *
 * Each optional output may be null: `indices` receives `L*N` phase
 * indices (`len` must equal `L*N`), `boost` the SNR boost, `json` the full
 * result as an owned string.
 *
 * # Safety
 * `channel` must come from [`bb_scenario_realize`]; `method` must be a
 * NUL-terminated string; non-null outputs must be writable and `indices`
 * must have room for `len` values.
 */
BbStatus bb_channel_beamform(const BbChannel *channel,
                             const char *method,
                             size_t samples,
                             uint64_t seed,
                             uint32_t *indices,
                             size_t len,
                             double *boost,
                             char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLINDBEAM_H */
