#ifndef SCANLAT_H
#define SCANLAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScanlatStatus {
  SCANLAT_STATUS_OK = 0,
  SCANLAT_STATUS_NULL_POINTER = 1,
  SCANLAT_STATUS_INVALID_UTF8 = 2,
  SCANLAT_STATUS_CONFIG = 3,
  SCANLAT_STATUS_VALIDATION = 4,
  SCANLAT_STATUS_IO = 5,
  SCANLAT_STATUS_BUFFER_TOO_SMALL = 6,
  SCANLAT_STATUS_PANIC = 7,
} ScanlatStatus;

/**
 * Parsed run configuration.
 */
typedef struct ScanlatConfig ScanlatConfig;

/**
 * Per-pixel latency values on a mapping grid.
 */
typedef struct ScanlatField ScanlatField;

/**
 * Result of a pipeline simulation.
 */
typedef struct ScanlatTrace ScanlatTrace;

/**
 * Forward separation and single-eye sweep range in centimetres for both
 * ray-origin conditions.
 */
typedef struct ScanlatTable19 {
  double eye_cor_forward_cm;
  double eye_cor_zero_latency_cm;
  double eye_cor_latency_cm;
  double visual_axis_forward_cm;
  double visual_axis_zero_latency_cm;
  double visual_axis_latency_cm;
} ScanlatTable19;

/**
 * Logistic fit. `threshold_ms` is NaN when the fit has no threshold.
 * `boundary` is 0 for none, then all-correct, none-correct, alpha limit,
 * beta limit.
 */
typedef struct ScanlatFit {
  double alpha_ms;
  double beta_per_ms;
  double threshold_ms;
  double log_likelihood;
  bool converged;
  int32_t boundary;
} ScanlatFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t scanlat_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *scanlat_version(void);

/**
 * Creates a configuration from a built-in preset; a null name gives the
 * built-in defaults.
 *
 * # Safety
 * `name` must be null or a NUL-terminated string; `out` must be writable.
 */
enum ScanlatStatus scanlat_config_from_preset(const char *name, struct ScanlatConfig **out);

/**
 * Creates a configuration from TOML text merged over a preset (or the
 * defaults when `preset` is null).
 *
 * # Safety
 * `preset` must be null or NUL-terminated; `toml` must be NUL-terminated;
 * `out` must be writable.
 */
enum ScanlatStatus scanlat_config_from_toml(const char *preset,
                                            const char *toml,
                                            struct ScanlatConfig **out);

/**
 * Applies a `section.key=value` override. On failure the configuration is
 * left unchanged.
 *
 * # Safety
 * `config` must be a live handle; `assignment` must be NUL-terminated.
 */
enum ScanlatStatus scanlat_config_set(struct ScanlatConfig *config, const char *assignment);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void scanlat_config_free(struct ScanlatConfig *config);

/**
 * Display rows that fit in a compositing budget of `budget_ns`.
 *
 * # Safety
 * `config` must be a live handle; `rows` must be writable.
 */
enum ScanlatStatus scanlat_rows_in_budget(const struct ScanlatConfig *config,
                                          int64_t budget_ns,
                                          uint64_t *rows);

/**
 * Static buffer-latency field; an `auto` camera phase is replaced by the
 * offset that makes its minimum zero.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum ScanlatStatus scanlat_latency_field(const struct ScanlatConfig *config,
                                         struct ScanlatField **out);

/**
 * # Safety
 * `field` must be a live handle; the outputs must be writable.
 */
enum ScanlatStatus scanlat_field_dims(const struct ScanlatField *field,
                                      uint32_t *columns,
                                      uint32_t *rows);

/**
 * Minimum, maximum and mean over valid pixels, in nanoseconds.
 *
 * # Safety
 * `field` must be a live handle; the outputs must be writable.
 */
enum ScanlatStatus scanlat_field_stats(const struct ScanlatField *field,
                                       int64_t *min_ns,
                                       int64_t *max_ns,
                                       int64_t *mean_ns);

/**
 * Copies row-major values (nanoseconds) and validity flags. Either output
 * may be null. `len` must be at least columns * rows.
 *
 * # Safety
 * Non-null outputs must point to `len` writable elements.
 */
enum ScanlatStatus scanlat_field_values(const struct ScanlatField *field,
                                        int64_t *values_ns,
                                        bool *valid,
                                        size_t len);

/**
 * # Safety
 * `field` must be null or a handle not yet freed.
 */
void scanlat_field_free(struct ScanlatField *field);

/**
 * Runs the compositor simulation for `frames` frames with jitter seed
 * `seed`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum ScanlatStatus scanlat_simulate(const struct ScanlatConfig *config,
                                    uint32_t frames,
                                    uint64_t seed,
                                    struct ScanlatTrace **out);

/**
 * # Safety
 * `trace` must be a live handle; the outputs must be writable.
 */
enum ScanlatStatus scanlat_trace_summary(const struct ScanlatTrace *trace,
                                         uint64_t *tear_count,
                                         uint64_t *event_count);

/**
 * Mean per-pixel latency of the simulation as a new field handle.
 *
 * # Safety
 * `trace` must be a live handle; `out` must be writable.
 */
enum ScanlatStatus scanlat_trace_latency(const struct ScanlatTrace *trace,
                                         struct ScanlatField **out);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void scanlat_trace_free(struct ScanlatTrace *trace);

/**
 * Head-forward separation and sweep ranges at `latency_ms`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum ScanlatStatus scanlat_table19(const struct ScanlatConfig *config,
                                   double latency_ms,
                                   struct ScanlatTable19 *out);

/**
 * Peak and peak-to-peak binocular disparity error (arcseconds) for the
 * configured sinusoidal head motion at `latency_ms`.
 *
 * # Safety
 * `config` must be a live handle; the outputs must be writable.
 */
enum ScanlatStatus scanlat_disparity_error(const struct ScanlatConfig *config,
                                           double latency_ms,
                                           double *peak_arcsec,
                                           double *peak_to_peak_arcsec);

/**
 * Fits a logistic psychometric function to `n` trials.
 *
 * # Safety
 * `latency_ms` and `correct` must point to `n` readable elements; `out`
 * must be writable.
 */
enum ScanlatStatus scanlat_fit_logistic(const double *latency_ms,
                                        const bool *correct,
                                        size_t n,
                                        double guess_rate,
                                        double lapse_rate,
                                        double criterion,
                                        struct ScanlatFit *out);

/**
 * Writes `n` Sobol-spaced latencies on `[lo_ms, hi_ms]` into `out`.
 *
 * # Safety
 * `out` must point to `n` writable elements.
 */
enum ScanlatStatus scanlat_sobol(size_t n, double lo_ms, double hi_ms, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCANLAT_H */
