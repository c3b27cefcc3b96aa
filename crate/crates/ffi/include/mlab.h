/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MLAB_H
#define MLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum MlabStatus {
  MLAB_STATUS_OK = 0,
  MLAB_STATUS_NULL_POINTER = 1,
  MLAB_STATUS_INVALID_UTF8 = 2,
  MLAB_STATUS_CONFIG = 3,
  MLAB_STATUS_DOMAIN = 4,
  MLAB_STATUS_SOLVER = 5,
  MLAB_STATUS_NON_FINITE = 6,
  MLAB_STATUS_FORMAT = 7,
  MLAB_STATUS_IO = 8,
  MLAB_STATUS_BUFFER_TOO_SMALL = 9,
  MLAB_STATUS_PANIC = 10,
} MlabStatus;

/**
 * The outcome of simulating a scenario.
 */
typedef struct MlabRun MlabRun;

/**
 * A parsed, validated scenario.
 */
typedef struct MlabScenario MlabScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mlab_version(void);

/**
 * Copies the calling thread's last error message into `buf` (capacity
 * `cap`, NUL-terminated). `*len` receives the size needed.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes or null; `len` must be valid.
 */
enum MlabStatus mlab_last_error_message(char *buf, size_t cap, size_t *len);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum MlabStatus mlab_scenario_load(const char *path, struct MlabScenario **out);

/**
 * Parses and validates a scenario from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum MlabStatus mlab_scenario_from_toml(const char *text, struct MlabScenario **out);

/**
 * Applies a `key=value` override (same syntax as `mlab --set`). The
 * scenario is left unchanged on failure.
 *
 * # Safety
 * `scenario` must come from this library; `assignment` must be a
 * NUL-terminated string.
 */
enum MlabStatus mlab_scenario_set(struct MlabScenario *scenario, const char *assignment);

/**
 * Writes the scenario back as TOML.
 *
 * # Safety
 * `scenario` must come from this library; `buf` valid for `cap` bytes or
 * null; `len` valid.
 */
enum MlabStatus mlab_scenario_to_toml(const struct MlabScenario *scenario,
                                      char *buf,
                                      size_t cap,
                                      size_t *len);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void mlab_scenario_free(struct MlabScenario *scenario);

/**
 * Simulates the scenario and evaluates its checks. With `out_dir` non-null
 * the artifact bundle is written there.
 *
 * # Safety
 * `scenario` must come from this library; `out_dir` null or NUL-terminated;
 * `out` valid for a write.
 */
enum MlabStatus mlab_run(const struct MlabScenario *scenario,
                         const char *out_dir,
                         struct MlabRun **out);

/**
 * 1 when every asserted check passed, 0 otherwise (or for a null run).
 *
 * # Safety
 * `run` must be null or come from this library.
 */
int mlab_run_passed(const struct MlabRun *run);

/**
 * Final time reached (NaN for a null run).
 *
 * # Safety
 * `run` must be null or come from this library.
 */
double mlab_run_final_time(const struct MlabRun *run);

/**
 * Number of time steps taken (0 for a null run).
 *
 * # Safety
 * `run` must be null or come from this library.
 */
uint64_t mlab_run_steps(const struct MlabRun *run);

/**
 * Number of grid cells (0 for a null run).
 *
 * # Safety
 * `run` must be null or come from this library.
 */
size_t mlab_run_cells(const struct MlabRun *run);

/**
 * Copies the final density into `buf`; `*len` receives the cell count.
 *
 * # Safety
 * `run` must come from this library; `buf` valid for `cap` values or null;
 * `len` valid.
 */
enum MlabStatus mlab_run_final_u(const struct MlabRun *run, double *buf, size_t cap, size_t *len);

/**
 * Copies the final signal into `buf`; `*len` receives the cell count.
 *
 * # Safety
 * As for [`mlab_run_final_u`].
 */
enum MlabStatus mlab_run_final_v(const struct MlabRun *run, double *buf, size_t cap, size_t *len);

/**
 * The diagnostics table as text (the same as `report.txt`).
 *
 * # Safety
 * `run` must come from this library; `buf` valid for `cap` bytes or null;
 * `len` valid.
 */
enum MlabStatus mlab_run_report(const struct MlabRun *run, char *buf, size_t cap, size_t *len);

/**
 * Releases a run. Null is ignored.
 *
 * # Safety
 * `run` must come from this library and not be used afterwards.
 */
void mlab_run_free(struct MlabRun *run);

/**
 * Evaluates the worst case of the recursive Moser-type inequality over
 * `depth` terms. `*bound` receives max η_j^{1/δ_j}, `*stabilized` 1 or 0.
 *
 * # Safety
 * `bound` and `stabilized` must be valid for writes.
 */
enum MlabStatus mlab_moser_bound(double rho,
                                 double c,
                                 double delta0,
                                 double b,
                                 double c0,
                                 double c1,
                                 size_t depth,
                                 double *bound,
                                 int *stabilized);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLAB_H */
