/* Copyright 2026 The robustctl Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ROBUSTCTL_H
#define ROBUSTCTL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of an FFI call.
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_ARGUMENT = 2,
  RC_STATUS_UNKNOWN_SYSTEM = 3,
  RC_STATUS_UNKNOWN_GATE = 4,
  RC_STATUS_OUT_OF_DOMAIN = 5,
  RC_STATUS_NUMERICAL = 6,
  RC_STATUS_BUFFER_TOO_SMALL = 7,
  RC_STATUS_INTERNAL = 8,
} RcStatus;

// Pulse metric for [`RcOptimizerConfig`].
typedef enum RcMetric {
  RC_METRIC_PHASE_INSENSITIVE = 0,
  RC_METRIC_LITERAL = 1,
} RcMetric;

// Opaque optimization result.
typedef struct RcReport RcReport;

// Opaque control system.
typedef struct RcSystem RcSystem;

// Optimizer settings; obtain defaults from [`rc_optimizer_config_default`].
typedef struct RcOptimizerConfig {
  double total_time;
  size_t n_segments;
  enum RcMetric metric;
  size_t restarts;
  size_t max_iter;
  double threshold;
  uint64_t seed;
  double amplitude_bound;
} RcOptimizerConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rc_version(void);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length excluding the NUL, so
// a call with `len == 0` sizes the buffer.
//
// # Safety
// `buf` must be valid for `len` bytes or null with `len == 0`.
size_t rc_last_error_message(char *buf, size_t len);

// Looks up a catalog system (`A`, `A-variant`, `B`, `C`, `D`, `E`, `1q-wX`,
// `1q-XwY`, `1q-XwZ`). Release with [`rc_system_free`].
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum RcStatus rc_system_named(const char *name, struct RcSystem **out);

// Builds a system from its JSON definition.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum RcStatus rc_system_from_json(const char *json, struct RcSystem **out);

// # Safety
// `sys` must come from this library and not be used afterwards. Null is
// ignored.
void rc_system_free(struct RcSystem *sys);

// Hilbert-space dimension, or 0 for a null handle.
//
// # Safety
// `sys` must be a live handle or null.
size_t rc_system_dim(const struct RcSystem *sys);

// Number of control Hamiltonians, or 0 for a null handle.
//
// # Safety
// `sys` must be a live handle or null.
size_t rc_system_n_controls(const struct RcSystem *sys);

// Number of unknown drift parameters, or 0 for a null handle.
//
// # Safety
// `sys` must be a live handle or null.
size_t rc_system_n_params(const struct RcSystem *sys);

// Dimension of the dynamical Lie algebra at the given parameter values.
//
// # Safety
// `params` must hold `n_params` values; `out_dim` must be writable.
enum RcStatus rc_system_lie_dimension(const struct RcSystem *sys,
                                      const double *params,
                                      size_t n_params,
                                      size_t *out_dim);

// Propagator of a piecewise-constant pulse. `amplitudes` is row-major
// `[n_controls][n_segments]`; `out_re`/`out_im` receive `dim*dim` values.
//
// # Safety
// All pointers must be valid for the stated lengths.
enum RcStatus rc_propagate(const struct RcSystem *sys,
                           const double *params,
                           size_t n_params,
                           double total_time,
                           const double *amplitudes,
                           size_t n_segments,
                           double *out_re,
                           double *out_im);

// Default optimizer settings.
struct RcOptimizerConfig rc_optimizer_config_default(void);

// Ensemble GRAPE toward the named gate over `n_configs` parameter vectors
// stored row-major in `configs` (`n_configs * n_params` values). A report
// is produced whether or not the threshold was met; check
// [`rc_report_converged`]. Release with [`rc_report_free`].
//
// # Safety
// All pointers must be valid for the stated lengths; `out` must be writable.
enum RcStatus rc_optimize(const struct RcSystem *sys,
                          const double *configs,
                          size_t n_configs,
                          const char *target,
                          const struct RcOptimizerConfig *config,
                          struct RcReport **out);

// # Safety
// `report` must come from this library and not be used afterwards. Null
// is ignored.
void rc_report_free(struct RcReport *report);

// Largest per-configuration error, or NaN for a null handle.
//
// # Safety
// `report` must be a live handle or null.
double rc_report_max_error(const struct RcReport *report);

// Whether the threshold was met; false for a null handle.
//
// # Safety
// `report` must be a live handle or null.
bool rc_report_converged(const struct RcReport *report);

// Number of pulse segments, or 0 for a null handle.
//
// # Safety
// `report` must be a live handle or null.
size_t rc_report_n_segments(const struct RcReport *report);

// Copies the pulse amplitudes (row-major `[n_controls][n_segments]`) into
// `out`, which must hold `len` values.
//
// # Safety
// `out` must be valid for `len` values.
enum RcStatus rc_report_amplitudes(const struct RcReport *report, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUSTCTL_H */
