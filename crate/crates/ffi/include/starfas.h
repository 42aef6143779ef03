#ifndef STARFAS_H
#define STARFAS_H

/* Generated from the Rust sources by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every API call.
typedef enum StarfasStatus {
  // Success.
  STARFAS_STATUS_OK = 0,
  // A pointer was null, a buffer too small, or an enum value out of
  // range.
  STARFAS_STATUS_INVALID_ARG = 1,
  // A string argument was not valid UTF-8.
  STARFAS_STATUS_INVALID_UTF8 = 2,
  // The scenario text violates the config schema or its invariants.
  STARFAS_STATUS_CONFIG = 3,
  // A numerical routine failed on an otherwise valid scenario.
  STARFAS_STATUS_COMPUTE = 4,
  // The file could not be read.
  STARFAS_STATUS_IO = 5,
} StarfasStatus;

// Opaque scenario handle; create with `starfas_scenario_parse` or
// `starfas_scenario_load`, destroy with `starfas_scenario_free`.
typedef struct StarfasScenario StarfasScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Explanation of the most recent failure on this thread.
//
// The pointer stays valid until the next API call from the same thread;
// copy the string if it must outlive that.  Never null; empty when the
// last call succeeded.
const char *starfas_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *starfas_version(void);

// Parses scenario text (the config file format) into a new handle.
//
// # Safety
// `text` must point to a NUL-terminated string and `out` to a writable
// pointer slot; both must be non-null.
enum StarfasStatus starfas_scenario_parse(const char *text, struct StarfasScenario **out);

// Reads and parses a scenario file into a new handle.
//
// # Safety
// `path` must point to a NUL-terminated string and `out` to a writable
// pointer slot; both must be non-null.
enum StarfasStatus starfas_scenario_load(const char *path, struct StarfasScenario **out);

// Frees a handle.  Null is a no-op.  The handle must not be used again.
//
// # Safety
// `scenario` must be null or a pointer previously returned through
// `starfas_scenario_parse`/`starfas_scenario_load` and not yet freed.
void starfas_scenario_free(struct StarfasScenario *scenario);

// Writes the 12-character scenario hash (plus NUL) into `buf`.
//
// # Safety
// `scenario` must be a live handle; `buf` must point to at least `cap`
// writable bytes.
enum StarfasStatus starfas_scenario_id(const struct StarfasScenario *scenario,
                                       char *buf,
                                       size_t cap);

// Exact outage probability at `snr_db` for `user` (0 = reflection side,
// 1 = transmission side).  `out_err_est` (optional, may be null)
// receives the quadrature error estimate.
//
// # Safety
// `scenario` must be a live handle and `out_op` non-null and writable;
// `out_err_est` may be null.
enum StarfasStatus starfas_outage(const struct StarfasScenario *scenario,
                                  uint32_t user,
                                  double snr_db,
                                  double *out_op,
                                  double *out_err_est);

// High-SNR asymptotic outage probability; same contract as
// `starfas_outage`.
//
// # Safety
// `scenario` must be a live handle and `out_op` non-null and writable;
// `out_err_est` may be null.
enum StarfasStatus starfas_outage_asymptotic(const struct StarfasScenario *scenario,
                                             uint32_t user,
                                             double snr_db,
                                             double *out_op,
                                             double *out_err_est);

// Analytic average capacities (bps/Hz) at `snr_db`.  Each output pointer
// may be null if that value is not needed.
//
// # Safety
// `scenario` must be a live handle; non-null output pointers must be
// writable.
enum StarfasStatus starfas_capacity(const struct StarfasScenario *scenario,
                                    uint32_t user,
                                    double snr_db,
                                    double *out_common,
                                    double *out_private,
                                    double *out_sum);

// Monte Carlo outage and sum-capacity estimates from one deterministic
// campaign of `samples` channel draws (min 1000).  Any output pointer
// may be null.
//
// # Safety
// `scenario` must be a live handle; non-null output pointers must be
// writable.
enum StarfasStatus starfas_simulate(const struct StarfasScenario *scenario,
                                    uint32_t user,
                                    double snr_db,
                                    uint64_t samples,
                                    uint64_t seed,
                                    double *out_op,
                                    double *out_op_half_width,
                                    double *out_ac_sum,
                                    double *out_ac_half_width);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* STARFAS_H */
