#ifndef CAVITY_SPDC_H
#define CAVITY_SPDC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CspdcStatus {
  CSPDC_STATUS_OK = 0,
  /**
   * Invalid scenario, parameter or input text.
   */
  CSPDC_STATUS_INVALID_INPUT = 2,
  /**
   * The numerics failed on valid input.
   */
  CSPDC_STATUS_NUMERICAL = 3,
  CSPDC_STATUS_NULL_POINTER = 4,
  /**
   * An output buffer is shorter than the result.
   */
  CSPDC_STATUS_BUFFER_TOO_SMALL = 5,
  CSPDC_STATUS_PANIC = 6,
} CspdcStatus;

typedef enum CspdcPulseShape {
  CSPDC_PULSE_SHAPE_GAUSSIAN = 0,
  CSPDC_PULSE_SHAPE_SQUARE = 1,
} CspdcPulseShape;

typedef enum CspdcMethod {
  CSPDC_METHOD_AUTO = 0,
  CSPDC_METHOD_EXACT = 1,
  CSPDC_METHOD_RANDOMIZED = 2,
} CspdcMethod;

/**
 * Opaque joint spectral amplitude handle, signal rows by idler columns.
 */
typedef struct CspdcJsa CspdcJsa;

/**
 * Opaque scenario handle.
 */
typedef struct CspdcScenario CspdcScenario;

/**
 * Cavity figures of a scenario at its grid centres.
 */
typedef struct CspdcCavityFigures {
  double fsr_signal_hz;
  double fsr_idler_hz;
  double finesse_signal;
  double finesse_idler;
  double linewidth_signal_hz;
  double linewidth_idler_hz;
  double escape_signal;
  double escape_idler;
} CspdcCavityFigures;

typedef struct CspdcSchmidtSummary {
  double schmidt_number;
  double purity;
  /**
   * Predicted unheralded g2(0) = 1 + 1/K.
   */
  double g2;
  size_t rank;
  double residual;
} CspdcSchmidtSummary;

typedef struct CspdcSweepRow {
  double tau_s;
  double schmidt_number;
  double purity;
  double central_fraction;
} CspdcSweepRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *cspdc_version(void);

/**
 * Message of the last failed call on this thread, empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *cspdc_last_error(void);

/**
 * The built-in device scenario.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum CspdcStatus cspdc_scenario_reference(struct CspdcScenario **out);

/**
 * Parses a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum CspdcStatus cspdc_scenario_from_toml(const char *toml, struct CspdcScenario **out);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CspdcStatus cspdc_scenario_load(const char *path, struct CspdcScenario **out);

/**
 * Copy of `scenario` with `points` samples per axis. `relaxed` skips the
 * linewidth/8 resolution guard.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum CspdcStatus cspdc_scenario_with_points(const struct CspdcScenario *scenario,
                                            size_t points,
                                            bool relaxed,
                                            struct CspdcScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void cspdc_scenario_free(struct CspdcScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum CspdcStatus cspdc_cavity_figures(const struct CspdcScenario *scenario,
                                      struct CspdcCavityFigures *out);

/**
 * Builds the normalized JSA for a pump pulse of duration `tau_s`,
 * optionally through the scenario's study filters.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum CspdcStatus cspdc_jsa_build(const struct CspdcScenario *scenario,
                                 enum CspdcPulseShape pulse,
                                 double tau_s,
                                 bool filtered,
                                 struct CspdcJsa **out);

/**
 * # Safety
 * `jsa` must be a live handle; `rows` and `cols` must be writable.
 */
enum CspdcStatus cspdc_jsa_dims(const struct CspdcJsa *jsa, size_t *rows, size_t *cols);

/**
 * Copies the amplitude, row-major, into `re` and `im`, each of length
 * `len >= rows * cols`.
 *
 * # Safety
 * `jsa` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum CspdcStatus cspdc_jsa_amplitude(const struct CspdcJsa *jsa,
                                     double *re,
                                     double *im,
                                     size_t len);

/**
 * # Safety
 * `jsa` must be null or a handle not yet freed.
 */
void cspdc_jsa_free(struct CspdcJsa *jsa);

/**
 * Schmidt decomposition of `jsa`. Up to `capacity` coefficients are
 * written to `lambdas` (may be null); `summary.rank` gives the full count.
 *
 * # Safety
 * `jsa` must be a live handle; `summary` must be writable; `lambdas`
 * must be null or hold `capacity` doubles.
 */
enum CspdcStatus cspdc_schmidt(const struct CspdcJsa *jsa,
                               enum CspdcMethod method,
                               struct CspdcSchmidtSummary *summary,
                               double *lambdas,
                               size_t capacity);

/**
 * Purity at each of the `n` pulse lengths in `taus_s`; writes `n` rows.
 *
 * # Safety
 * `scenario` must be a live handle; `taus_s` must hold `n` doubles and
 * `rows` room for `n` rows.
 */
enum CspdcStatus cspdc_purity_sweep(const struct CspdcScenario *scenario,
                                    const double *taus_s,
                                    size_t n,
                                    enum CspdcPulseShape pulse,
                                    bool filtered,
                                    struct CspdcSweepRow *rows);

/**
 * Pulse length maximizing the purity inside `[lo_s, hi_s]`.
 *
 * # Safety
 * `scenario` must be a live handle; `tau_s` and `purity` must be writable.
 */
enum CspdcStatus cspdc_optimal_pulse(const struct CspdcScenario *scenario,
                                     enum CspdcPulseShape pulse,
                                     bool filtered,
                                     double lo_s,
                                     double hi_s,
                                     double *tau_s,
                                     double *purity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVITY_SPDC_H */
