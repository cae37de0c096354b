#ifndef DELAYBW_H
#define DELAYBW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DbwStatus {
  DBW_STATUS_OK = 0,
  DBW_STATUS_NULL_POINTER = 1,
  DBW_STATUS_INVALID_ARGUMENT = 2,
  DBW_STATUS_ESTIMATION_FAILED = 3,
  DBW_STATUS_STATS_FAILED = 4,
  DBW_STATUS_PARSE_ERROR = 5,
  DBW_STATUS_PANIC = 6,
} DbwStatus;

typedef enum DbwMethod {
  DBW_METHOD_DIRECT = 0,
  DBW_METHOD_PAIRWISE = 1,
  DBW_METHOD_REGRESSION = 2,
  DBW_METHOD_INTERCEPT_CORRECTED = 3,
} DbwMethod;

/**
 * Size/delay points collected for one path.
 */
typedef struct DbwProfile DbwProfile;

/**
 * A simulated path parsed from JSON.
 */
typedef struct DbwSimPath DbwSimPath;

/**
 * Bandwidth estimate. Warnings are only counted here; their text is
 * available from [`dbw_last_warning`].
 */
typedef struct DbwEstimate {
  double b_av_bps;
  double intercept_s;
  double residual_rms_s;
  enum DbwMethod method;
  uint32_t warning_count;
} DbwEstimate;

typedef struct DbwSummary {
  uint64_t n_total;
  uint64_t n_lost;
  double mean_s;
  double lower_2_5_s;
  double upper_97_5_s;
  double jitter_s;
  double loss_rate;
} DbwSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the thread's last error message into `buf` (NUL terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dbw_last_error_message(char *buf, size_t len);

/**
 * Like [`dbw_last_error_message`] for the warnings of the last estimate,
 * one per line.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dbw_last_warning(char *buf, size_t len);

/**
 * Bandwidth from two sizes (bits) and their minimum delays (seconds).
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum DbwStatus dbw_estimate_pairwise(uint64_t w1_bits,
                                     double d1_s,
                                     uint64_t w2_bits,
                                     double d2_s,
                                     struct DbwEstimate *out);

/**
 * Size-independent delay from two points.
 *
 * # Safety
 * `out_s` must be null or valid for writes.
 */
enum DbwStatus dbw_estimate_intercept(uint64_t w1_bits,
                                      double d1_s,
                                      uint64_t w2_bits,
                                      double d2_s,
                                      double *out_s);

/**
 * Bandwidth from one point, ignoring size-independent delay.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum DbwStatus dbw_estimate_direct(uint64_t w_bits, double d_s, struct DbwEstimate *out);

/**
 * Bandwidth from one point with a known intercept.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum DbwStatus dbw_estimate_from_intercept(uint64_t w_bits,
                                           double d_s,
                                           double intercept_s,
                                           struct DbwEstimate *out);

/**
 * Bandwidth (bit/s) from a delay-vs-size slope (s/bit).
 *
 * # Safety
 * `out_bps` must be null or valid for writes.
 */
enum DbwStatus dbw_invert_slope(double slope_s_per_bit, double *out_bps);

struct DbwProfile *dbw_profile_new(void);

/**
 * # Safety
 * `profile` must come from [`dbw_profile_new`] and not be freed.
 */
enum DbwStatus dbw_profile_push(struct DbwProfile *profile, uint64_t size_bits, double delay_s);

/**
 * Pairwise estimate for two points, least-squares regression for more.
 *
 * # Safety
 * `profile` must be a live handle; `out` null or valid for writes.
 */
enum DbwStatus dbw_profile_estimate(const struct DbwProfile *profile, struct DbwEstimate *out);

/**
 * # Safety
 * `profile` must be null or a handle not yet freed.
 */
void dbw_profile_free(struct DbwProfile *profile);

/**
 * Parses a path config (`{"seed":..,"hops":[..]}`) into a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` null or valid for writes.
 */
enum DbwStatus dbw_sim_path_from_json(const char *json, struct DbwSimPath **out);

/**
 * Noise-free one-way delay of a `wire_bits` probe along the path.
 *
 * # Safety
 * `path` must be a live handle; `out_s` null or valid for writes.
 */
enum DbwStatus dbw_sim_path_fixed_delay(const struct DbwSimPath *path,
                                        uint64_t wire_bits,
                                        double *out_s);

/**
 * Rate a size-delay estimator should recover on this path.
 *
 * # Safety
 * `path` must be a live handle; `out_bps` null or valid for writes.
 */
enum DbwStatus dbw_sim_path_ground_truth(const struct DbwSimPath *path, double *out_bps);

/**
 * # Safety
 * `path` must be null or a handle not yet freed.
 */
void dbw_sim_path_free(struct DbwSimPath *path);

/**
 * Delay summary of `n` probes in send order. `lost` may be null (nothing
 * lost); otherwise a non-zero `lost[i]` marks probe `i` as lost and
 * `delays_s[i]` is ignored.
 *
 * # Safety
 * `delays_s` (and `lost` if non-null) must point to `n` readable values.
 */
enum DbwStatus dbw_summarize(const double *delays_s,
                             const uint8_t *lost,
                             size_t n,
                             struct DbwSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DELAYBW_H */
