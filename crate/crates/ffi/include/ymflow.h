/* C interface to the ymflow metric-flow laboratory. */

#ifndef YMFLOW_H
#define YMFLOW_H

/* Generated by cbindgen from ymflow-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Per-sample scalar columns of the trace, in the same order as trace.csv.
typedef enum YmfColumn {
  YMF_COL_T = 0,
  YMF_COL_YM_ENERGY = 1,
  YMF_COL_HYM_ENERGY = 2,
  YMF_COL_Y = 3,
  YMF_COL_P = 4,
  YMF_COL_M = 5,
  YMF_COL_KEYINEQ_SLACK = 6,
  YMF_COL_GAUGE_RESIDUAL = 7,
} YmfColumn;

// Call outcome. Everything except `YMF_OK` leaves an explanatory message in
// `ymf_last_error_message()`.
typedef enum YmfStatus {
  YMF_OK = 0,
  // A required pointer argument was null.
  YMF_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  YMF_INVALID_UTF8 = 2,
  // The config failed to parse or validate.
  YMF_CONFIG_ERROR = 3,
  // Bundle construction or curvature evaluation failed numerically.
  YMF_NUMERIC_ERROR = 4,
  // Filesystem failure while writing artifacts.
  YMF_IO_ERROR = 5,
  // An index or buffer length was out of range.
  YMF_BAD_INDEX = 6,
  // Internal panic caught at the ABI boundary.
  YMF_PANIC = 7,
} YmfStatus;

// Opaque completed-run handle.
typedef struct YmfRun YmfRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty string when the
// last call succeeded. The pointer stays valid until the next ymf call on
// the same thread.
const char *ymf_last_error_message(void);

// Version of the underlying laboratory crate, as a static string.
const char *ymf_version(void);

// Parse `toml_text` (NUL-terminated TOML, empty string for the defaults),
// run the metric flow to completion, and hand back an owned run handle.
// Blocking: a default-size run takes seconds to minutes.
//
// # Safety
// `toml_text` must be a valid NUL-terminated string and `out` a valid
// pointer; the handle must be released with `ymf_run_free`.
enum YmfStatus ymf_run_from_toml(const char *toml_text, struct YmfRun **out);

// Flow outcome with CLI semantics: 0 converged, 2 reached t_end short of
// the threshold, 3 numerical abort.
//
// # Safety
// `run` must be a live handle from `ymf_run_from_toml`.
enum YmfStatus ymf_run_outcome(const struct YmfRun *run, int32_t *out);

// Human-readable termination status; owned by the handle.
//
// # Safety
// `run` must be a live handle; the pointer is valid until `ymf_run_free`.
const char *ymf_run_status_message(const struct YmfRun *run);

// # Safety
// `run` must be a live handle and `out` a valid pointer.
enum YmfStatus ymf_run_sample_count(const struct YmfRun *run, size_t *out);

// Bundle rank (= length of each spectrum row).
//
// # Safety
// `run` must be a live handle and `out` a valid pointer.
enum YmfStatus ymf_run_rank(const struct YmfRun *run, size_t *out);

// Number of proper flags (= length of each second-fundamental-form row).
//
// # Safety
// `run` must be a live handle and `out` a valid pointer.
enum YmfStatus ymf_run_flag_count(const struct YmfRun *run, size_t *out);

// Copy one scalar column (all samples, time-ordered) into `buf`, which must
// hold `len >= sample_count` doubles.
//
// # Safety
// `run` must be a live handle; `buf` must point to `len` writable doubles.
enum YmfStatus ymf_run_trace(const struct YmfRun *run,
                             enum YmfColumn column,
                             double *buf,
                             size_t len);

// Grid-averaged descending ΛF spectrum at one sample; `buf` needs
// `len >= rank` doubles.
//
// # Safety
// `run` must be a live handle; `buf` must point to `len` writable doubles.
enum YmfStatus ymf_run_spectrum(const struct YmfRun *run, size_t sample, double *buf, size_t len);

// Per-flag second-fundamental-form norms² at one sample; `buf` needs
// `len >= flag_count` doubles.
//
// # Safety
// `run` must be a live handle; `buf` must point to `len` writable doubles.
enum YmfStatus ymf_run_sff(const struct YmfRun *run, size_t sample, double *buf, size_t len);

// Write trace.csv, manifest.json, and summary.txt for this run into
// `out_dir` (created if needed).
//
// # Safety
// `run` must be a live handle and `out_dir` a valid NUL-terminated string.
enum YmfStatus ymf_run_write_artifacts(const struct YmfRun *run, const char *out_dir);

// Run the invariant battery for a config; `out_failed` receives the number
// of failed checks (0 = all pass).
//
// # Safety
// `toml_text` must be a valid NUL-terminated string and `out_failed` a
// valid pointer.
enum YmfStatus ymf_verify_from_toml(const char *toml_text, int32_t *out_failed);

// Release a run handle. Null is a no-op.
//
// # Safety
// `run` must be null or a handle not freed before; it is invalid afterwards.
void ymf_run_free(struct YmfRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* YMFLOW_H */
