#ifndef SEEDSTAB_H
#define SEEDSTAB_H

/* Generated by cbindgen from seedstab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible FFI call.
typedef enum SsStatus {
  // Success.
  SS_STATUS_OK = 0,
  // A required pointer argument was NULL.
  SS_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  SS_STATUS_INVALID_UTF8 = 2,
  // Input files or JSON could not be parsed or failed validation.
  SS_STATUS_INVALID_INPUT = 3,
  // A file could not be read or written.
  SS_STATUS_IO_ERROR = 4,
  // The computation itself failed (e.g. fewer than two runs).
  SS_STATUS_COMPUTE_ERROR = 5,
  // An internal invariant was violated.
  SS_STATUS_INTERNAL_ERROR = 6,
} SsStatus;

// Opaque stability report handle.
typedef struct SsReport SsReport;

// Aggregate numbers of one report.
//
// `zeta_mean` and `var` are on the percent scale for higher-better metrics
// and in raw units otherwise; `con_mean`/`ccon_mean` are fractions in
// [0, 1] for indicator and token-mean scorers.
typedef struct SsSummary {
  double zeta_mean;
  double var;
  double con_mean;
  double ccon_mean;
  uintptr_t n_seeds;
  uintptr_t n_pairs;
} SsSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread; never free it.
const char *ss_last_error_message(void);

// Library version as a static NUL-terminated string; never free it.
const char *ss_version(void);

// Runs the full evaluation pipeline on a manifest file and returns a new
// report handle through `out`.
//
// # Safety
// `manifest_path` must be NULL or a valid NUL-terminated C string; `out`
// must be NULL or point to writable storage for one pointer.
enum SsStatus ss_eval_manifest(const char *manifest_path, struct SsReport **out);

// Parses a report from its JSON form and returns a new handle through
// `out`.
//
// # Safety
// `json` must be NULL or a valid NUL-terminated C string; `out` must be
// NULL or point to writable storage for one pointer.
enum SsStatus ss_report_from_json(const char *json, struct SsReport **out);

// Serializes a report to pretty-printed JSON. The returned string must be
// released with [`ss_string_free`].
//
// # Safety
// `report` must be a live handle from this library; `out` must be NULL or
// point to writable storage for one pointer.
enum SsStatus ss_report_to_json(const struct SsReport *report, char **out);

// Copies the report's task name. The returned string must be released with
// [`ss_string_free`].
//
// # Safety
// `report` must be a live handle from this library; `out` must be NULL or
// point to writable storage for one pointer.
enum SsStatus ss_report_task(const struct SsReport *report, char **out);

// Fills `out` with the report's aggregate numbers.
//
// # Safety
// `report` must be a live handle from this library; `out` must be NULL or
// point to writable storage for one [`SsSummary`].
enum SsStatus ss_report_summary(const struct SsReport *report, struct SsSummary *out);

// Checks the report's relational invariants and writes the number of
// violations to `out_violations` (0 means the report is consistent).
//
// # Safety
// `report` must be a live handle from this library; `out_violations` must
// be NULL or point to writable storage for one `size_t`.
enum SsStatus ss_report_validate(const struct SsReport *report, uintptr_t *out_violations);

// Population standard deviation of a metric series; `percent_scale != 0`
// returns exactly 100x the fraction-scale value.
//
// # Safety
// `values` must be NULL or point to `len` readable doubles; `out` must be
// NULL or point to writable storage for one double.
enum SsStatus ss_var(const double *values, uintptr_t len, int32_t percent_scale, double *out);

// Releases a report handle. NULL is a no-op.
//
// # Safety
// `report` must be NULL or a handle returned by this library that has not
// been freed yet.
void ss_report_free(struct SsReport *report);

// Releases a string returned by this library. NULL is a no-op.
//
// # Safety
// `s` must be NULL or a string returned by this library that has not been
// freed yet.
void ss_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SEEDSTAB_H */
