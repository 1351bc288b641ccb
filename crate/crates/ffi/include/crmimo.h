#ifndef CRMIMO_H
#define CRMIMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CRMIMO_MODE_COGNITIVE 0

#define CRMIMO_MODE_SUM_POWER 1

#define CRMIMO_MODE_PER_ANTENNA 2

/**
 * Result codes of every fallible call.
 */
typedef enum {
  CRMIMO_STATUS_OK = 0,
  /**
   * The solve finished but did not meet its stopping rule; the report
   * handle is still valid.
   */
  CRMIMO_STATUS_NOT_CONVERGED = 1,
  CRMIMO_STATUS_NULL_POINTER = 2,
  CRMIMO_STATUS_INVALID_INPUT = 3,
  CRMIMO_STATUS_DIMENSION_MISMATCH = 4,
  CRMIMO_STATUS_SCHEMA = 5,
  CRMIMO_STATUS_IO = 6,
  CRMIMO_STATUS_NUMERICAL = 7,
  CRMIMO_STATUS_BUFFER_TOO_SMALL = 8,
  CRMIMO_STATUS_PANIC = 9,
} CrmimoStatus;

/**
 * Opaque solve-report handle.
 */
typedef struct CrmimoReport CrmimoReport;

/**
 * Opaque scenario handle.
 */
typedef struct CrmimoScenario CrmimoScenario;

/**
 * Outer-loop settings; obtain defaults from [`crmimo_options_default`].
 */
typedef struct {
  double step;
  double eps;
  bool diminishing;
  size_t max_outer_iters;
} CrmimoOptions;

/**
 * Scalar results of a solve.
 */
typedef struct {
  /**
   * Nats.
   */
  double weighted_sum_rate;
  double sum_power;
  double lambda;
  double q_u;
  size_t iterations;
  bool converged;
  size_t num_users;
  size_t num_constraints;
} CrmimoSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, NUL-terminated, static.
 */
const char *crmimo_version(void);

/**
 * Message of the most recent failure on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *crmimo_last_error(void);

/**
 * Draws a scenario. `l_ratios` and `p_t` (linear thresholds) hold `n_pu`
 * entries each; `weights` holds `k` entries or is NULL for equal weights.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` must be writable.
 */
CrmimoStatus crmimo_scenario_generate(size_t k,
                                      size_t n_t,
                                      size_t n_r,
                                      double p_u,
                                      const double *l_ratios,
                                      const double *p_t,
                                      size_t n_pu,
                                      const double *weights,
                                      uint64_t seed,
                                      CrmimoScenario **out);

/**
 * Parses a scenario from a JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
CrmimoStatus crmimo_scenario_from_json(const char *json, CrmimoScenario **out);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
CrmimoStatus crmimo_scenario_load(const char *path, CrmimoScenario **out);

/**
 * Writes a scenario file.
 *
 * # Safety
 * `scenario` must come from this library; `path` must be NUL-terminated.
 */
CrmimoStatus crmimo_scenario_save(const CrmimoScenario *scenario, const char *path);

/**
 * Scenario as a JSON document.
 *
 * # Safety
 * `scenario` must come from this library; `buf` must hold `len` bytes.
 */
CrmimoStatus crmimo_scenario_to_json(const CrmimoScenario *scenario,
                                     char *buf,
                                     size_t len,
                                     size_t *needed);

/**
 * Dimensions of a scenario; any output pointer may be NULL.
 *
 * # Safety
 * `scenario` must come from this library.
 */
CrmimoStatus crmimo_scenario_dims(const CrmimoScenario *scenario,
                                  size_t *k,
                                  size_t *n_t,
                                  size_t *n_r,
                                  size_t *n_pu);

/**
 * Releases a scenario; NULL is ignored.
 *
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void crmimo_scenario_free(CrmimoScenario *scenario);

CrmimoOptions crmimo_options_default(void);

/**
 * Solves a scenario. `mode` is one of `CRMIMO_MODE_*`; `threshold` is the
 * per-antenna limit and is ignored otherwise. `options` may be NULL for
 * defaults. Returns `CRMIMO_STATUS_NOT_CONVERGED` with a valid report when
 * the iteration cap was hit.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be writable.
 */
CrmimoStatus crmimo_solve(const CrmimoScenario *scenario,
                          const CrmimoOptions *options,
                          int32_t mode,
                          double threshold,
                          CrmimoReport **out);

/**
 * # Safety
 * `report` must come from this library; `out` must be writable.
 */
CrmimoStatus crmimo_report_summary(const CrmimoReport *report, CrmimoSummary *out);

/**
 * Per-user rates in nats.
 *
 * # Safety
 * `report` must come from this library; `buf` must hold `len` values.
 */
CrmimoStatus crmimo_report_rates(const CrmimoReport *report,
                                 double *buf,
                                 size_t len,
                                 size_t *needed);

/**
 * Received power at each constrained direction (PUs or antennas).
 *
 * # Safety
 * `report` must come from this library; `buf` must hold `len` values.
 */
CrmimoStatus crmimo_report_interference(const CrmimoReport *report,
                                        double *buf,
                                        size_t len,
                                        size_t *needed);

/**
 * Interference multipliers.
 *
 * # Safety
 * `report` must come from this library; `buf` must hold `len` values.
 */
CrmimoStatus crmimo_report_q_t(const CrmimoReport *report, double *buf, size_t len, size_t *needed);

/**
 * Full report (covariances, trace, ...) as JSON.
 *
 * # Safety
 * `report` must come from this library; `buf` must hold `len` bytes.
 */
CrmimoStatus crmimo_report_to_json(const CrmimoReport *report,
                                   char *buf,
                                   size_t len,
                                   size_t *needed);

/**
 * Releases a report; NULL is ignored.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void crmimo_report_free(CrmimoReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRMIMO_H */
