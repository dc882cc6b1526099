#ifndef PCK_HDMR_H
#define PCK_HDMR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Surrogate used for the component functions.
 */
typedef enum PckBackend {
  PCK_BACKEND_PC_KRIGING = 0,
  PCK_BACKEND_KRIGING = 1,
  PCK_BACKEND_PCE = 2,
} PckBackend;

/**
 * Result code of every call.
 */
typedef enum PckStatus {
  PCK_STATUS_OK = 0,
  PCK_STATUS_NULL_POINTER = 1,
  PCK_STATUS_INVALID_UTF8 = 2,
  PCK_STATUS_INVALID_ARGUMENT = 3,
  PCK_STATUS_DIMENSION_MISMATCH = 4,
  PCK_STATUS_JSON = 5,
  PCK_STATUS_IO = 6,
  PCK_STATUS_UNKNOWN_FUNCTION = 7,
  PCK_STATUS_BUILD_FAILED = 8,
  PCK_STATUS_PANIC = 9,
} PckStatus;

/**
 * Opaque fitted model.
 */
typedef struct PckModel PckModel;

/**
 * Build settings. Start from [`pck_build_options_default`].
 */
typedef struct PckBuildOptions {
  /**
   * First-stage split coefficient in (0, 1).
   */
  double c;
  /**
   * Relative convergence tolerance.
   */
  double epsilon;
  uint64_t seed;
  /**
   * Soft cap on true-function evaluations; 0 means none.
   */
  uint64_t max_evals;
  enum PckBackend backend;
} PckBuildOptions;

/**
 * User function: `x` holds `dim` coordinates. Null is rejected.
 */
typedef double (*PckObjective)(const double *x, size_t dim, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *pck_last_error_message(void);

struct PckBuildOptions pck_build_options_default(void);

/**
 * Fits a built-in benchmark such as `"table3/4"` or `"cantilever"`.
 * `opts` may be null for defaults.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `opts` null or valid, `out` writable.
 */
enum PckStatus pck_model_fit_benchmark(const char *name,
                                       const struct PckBuildOptions *opts,
                                       struct PckModel **out);

/**
 * Fits a user function on the box `[lower, upper]` of `dim` dimensions.
 * `objective` is called on the calling thread, one point at a time.
 *
 * # Safety
 * `lower` and `upper` must hold `dim` values; `user_data` is passed through
 * untouched; `opts` may be null; `out` must be writable.
 */
enum PckStatus pck_model_fit_callback(size_t dim,
                                      const double *lower,
                                      const double *upper,
                                      PckObjective objective,
                                      void *user_data,
                                      const struct PckBuildOptions *opts,
                                      struct PckModel **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum PckStatus pck_model_from_json(const char *json, struct PckModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum PckStatus pck_model_from_file(const char *path, struct PckModel **out);

/**
 * Serialized model; release with [`pck_string_free`].
 *
 * # Safety
 * `m` must come from this library; `out` must be writable.
 */
enum PckStatus pck_model_to_json(const struct PckModel *m, char **out);

/**
 * # Safety
 * `s` must be null or come from [`pck_model_to_json`].
 */
void pck_string_free(char *s);

/**
 * # Safety
 * `m` must be null or a live handle; it is invalid afterwards.
 */
void pck_model_free(struct PckModel *m);

/**
 * Input dimension, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t pck_model_dim(const struct PckModel *m);

/**
 * True-function evaluations spent on the fit, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
uint64_t pck_model_total_evals(const struct PckModel *m);

/**
 * # Safety
 * `x` must hold `dim` values and `out` be writable.
 */
enum PckStatus pck_model_predict(const struct PckModel *m,
                                 const double *x,
                                 size_t dim,
                                 double *out);

/**
 * Predicts `n` row-major points of `dim` coordinates into `out[n]`.
 *
 * # Safety
 * `xs` must hold `n * dim` values and `out` room for `n`.
 */
enum PckStatus pck_model_predict_batch(const struct PckModel *m,
                                       const double *xs,
                                       size_t n,
                                       size_t dim,
                                       double *out);

/**
 * Writes the `dim * dim` row-major coupling matrix as 0/1 bytes.
 *
 * # Safety
 * `out` must have room for `len` bytes.
 */
enum PckStatus pck_model_coupling(const struct PckModel *m, uint8_t *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCK_HDMR_H */
