#ifndef MEMBRANE_LAB_H
#define MEMBRANE_LAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  ML_STATUS_OK = 0,
  ML_STATUS_NULL_POINTER = 1,
  ML_STATUS_INVALID_ARGUMENT = 2,
  ML_STATUS_NOT_FREE = 3,
  ML_STATUS_SIZE_LIMIT = 4,
  ML_STATUS_NUMERICAL = 5,
  ML_STATUS_TRUNCATED = 6,
  ML_STATUS_INSUFFICIENT_RANGE = 7,
  ML_STATUS_CONFIG = 8,
  ML_STATUS_IO = 9,
  ML_STATUS_PANIC = 10,
} MlStatus;

/**
 * A pinned set on a window.
 */
typedef struct MlPins MlPins;

/**
 * A box `[lo, hi]` of `Z^d`.
 */
typedef struct MlWindow MlWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; valid until the next
 * failing call. Never null.
 */
const char *ml_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ml_version(void);

/**
 * # Safety
 * `lo` and `hi` point to `dim` values; `out` is writable.
 */
MlStatus ml_window_new(size_t dim, const int64_t *lo, const int64_t *hi, MlWindow **out);

/**
 * # Safety
 * `w` is null or a handle from [`ml_window_new`] not yet freed.
 */
void ml_window_free(MlWindow *w);

/**
 * # Safety
 * `w` is a live window handle; `out` is writable.
 */
MlStatus ml_window_len(const MlWindow *w, size_t *out);

/**
 * Index of the site `c` (`dim` coordinates) in the row-major site order
 * used by every output buffer.
 *
 * # Safety
 * `w` is a live window handle, `c` points to `dim` values, `out` is writable.
 */
MlStatus ml_window_index(const MlWindow *w, const int64_t *c, size_t *out);

/**
 * An empty pinned set on `w`.
 *
 * # Safety
 * `w` is a live window handle; `out` is writable.
 */
MlStatus ml_pins_new(const MlWindow *w, MlPins **out);

/**
 * Independent Bernoulli(`p`) pins from a seeded ChaCha8 stream.
 *
 * # Safety
 * `w` is a live window handle; `out` is writable.
 */
MlStatus ml_pins_bernoulli(const MlWindow *w, double p, uint64_t seed, MlPins **out);

/**
 * # Safety
 * `a` is null or a handle from this library not yet freed.
 */
void ml_pins_free(MlPins *a);

/**
 * # Safety
 * `a` is a live pin handle; `c` points to `dim` values.
 */
MlStatus ml_pins_set(MlPins *a, const int64_t *c, bool pinned);

/**
 * # Safety
 * `a` is a live pin handle; `out` is writable.
 */
MlStatus ml_pins_count(const MlPins *a, size_t *out);

/**
 * `G^A_W(source, ·)` in window site order, by a banded Cholesky solve.
 *
 * # Safety
 * `a` is a live pin handle, `source` points to `dim` values and `out` to
 * `len` writable doubles.
 */
MlStatus ml_green_column(const MlPins *a, const int64_t *source, double *out, size_t len);

/**
 * `G(0, z)` on `Z^d`, `d ≥ 5`, from the random-walk series up to `m_max`
 * steps plus its tail.
 *
 * # Safety
 * `z` points to `dim` values; `value` is writable, `uncertainty` may be null.
 */
MlStatus ml_rw_green(size_t dim,
                     const int64_t *z,
                     size_t m_max,
                     double *value,
                     double *uncertainty);

/**
 * Node-weighted distance `d̂_A(source, ·)` in window site order.
 *
 * # Safety
 * `a` is a live pin handle, `source` points to `dim` values and `out` to
 * `len` writable doubles.
 */
MlStatus ml_weighted_distance(const MlPins *a,
                              bool exterior_pinned,
                              const int64_t *source,
                              double *out,
                              size_t len);

/**
 * # Safety
 * `out` is writable.
 */
MlStatus ml_box_empty_bound(uint64_t m, double p, size_t dim, double *out);

/**
 * # Safety
 * `out` is writable.
 */
MlStatus ml_choose_m(double p, size_t dim, uint64_t *out);

/**
 * Runs an experiment by its command-line name with a JSON config (empty or
 * null for defaults) and writes its tables and summary to `out_dir`.
 * `passed` receives whether every hard check passed.
 *
 * # Safety
 * `name` and `out_dir` are NUL-terminated strings, `config` is null or one,
 * and `passed` is writable.
 */
MlStatus ml_run_experiment(const char *name, const char *config, const char *out_dir, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMBRANE_LAB_H */
