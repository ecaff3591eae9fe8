#ifndef PRIVSHAPE_H
#define PRIVSHAPE_H

/* Generated by cbindgen at build time; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_PARSE = 3,
  PS_STATUS_CONFIG = 4,
  PS_STATUS_IO = 5,
  PS_STATUS_SOLVER = 6,
  PS_STATUS_PANIC = 7,
} PsStatus;

/**
 * Opaque handle to a finished run.
 */
typedef struct PsRun PsRun;

/**
 * Opaque scenario handle.
 */
typedef struct PsScenario PsScenario;

typedef struct PsMiReport {
  double iid_mi_bits;
  double markov_mi_bits;
  double entropy_x_bits;
  uintptr_t k;
} PsMiReport;

typedef struct PsRunSummary {
  double iid_mi_bits;
  double markov_mi_bits;
  double entropy_x_bits;
  uintptr_t k;
  double x_max;
  double total_cost;
  double avg_daily_cost;
  uintptr_t comfort_violations;
  uintptr_t failed_steps;
  double max_kkt;
} PsRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ps_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Scores `len` samples of `x` and `y` with `m` uniform X bins on
 * `[0, x_max]` and `n` uniform Y bins on `[y_min, y_max]`.
 *
 * # Safety
 * `x` and `y` must point to `len` readable doubles; `out` must be writable.
 */
enum PsStatus ps_score(const double *x,
                       const double *y,
                       uintptr_t len,
                       double x_max,
                       uintptr_t m,
                       double y_min,
                       double y_max,
                       uintptr_t n,
                       double epsilon,
                       struct PsMiReport *out);

/**
 * Default scenario: no devices, 30 days, synthetic house-23618-like load.
 */
struct PsScenario *ps_scenario_default(void);

/**
 * Parses a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum PsStatus ps_scenario_from_toml(const char *toml, struct PsScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be freed yet, or be null.
 */
void ps_scenario_free(struct PsScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum PsStatus ps_scenario_set_days(struct PsScenario *scenario, uintptr_t days);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum PsStatus ps_scenario_set_mu(struct PsScenario *scenario, double mu);

/**
 * Runs the scenario on its input files, or on a synthetic profile drawn
 * with `seed` when none are configured.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_run(const struct PsScenario *scenario, uint64_t seed, struct PsRun **out);

/**
 * # Safety
 * `run` must come from [`ps_run`] and not be freed yet, or be null.
 */
void ps_run_free(struct PsRun *run);

/**
 * Number of controlled steps, 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
uintptr_t ps_run_len(const struct PsRun *run);

/**
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_run_summary(const struct PsRun *run, struct PsRunSummary *out);

/**
 * Copies the sensitive and grid loads into caller buffers of `cap` doubles.
 *
 * # Safety
 * `run` must be a live handle; `x` and `y` must each hold `cap` writable doubles.
 */
enum PsStatus ps_run_copy_loads(const struct PsRun *run, double *x, double *y, uintptr_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRIVSHAPE_H */
