#ifndef STPG_H
#define STPG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StpgStatus {
  STPG_STATUS_OK = 0,
  STPG_STATUS_NULL_POINTER = 1,
  STPG_STATUS_INVALID_ARGUMENT = 2,
  STPG_STATUS_UNSUPPORTED = 3,
  STPG_STATUS_INVALID_COEFFICIENT = 4,
  STPG_STATUS_NOT_POSITIVE_DEFINITE = 5,
  STPG_STATUS_SHAPE_MISMATCH = 6,
  STPG_STATUS_INCONSISTENT = 7,
  STPG_STATUS_RESOURCE_CAP = 8,
  STPG_STATUS_IO = 9,
  STPG_STATUS_PANIC = 10,
} StpgStatus;

/**
 * Opaque discretization: spatial pair plus uniform time grid, lowest order in time.
 */
typedef struct StpgDiscretization StpgDiscretization;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a discretization on `(0,1)^dim` with `cells` cells per axis,
 * spatial degree 1 or 2, and `steps` uniform steps on `[0, t_final]`.
 *
 * # Safety
 * `out` must be valid for a pointer write. On success `*out` owns a handle
 * that must be released with [`stpg_discretization_free`].
 */
enum StpgStatus stpg_discretization_new(size_t dim,
                                        size_t cells,
                                        size_t degree,
                                        size_t steps,
                                        double t_final,
                                        struct StpgDiscretization **out);

/**
 * Releases a handle. Null is accepted and ignored.
 *
 * # Safety
 * `d` must be null or a handle from [`stpg_discretization_new`] not yet freed.
 */
void stpg_discretization_free(struct StpgDiscretization *d);

/**
 * Spatial and space-time trial dimensions.
 *
 * # Safety
 * `d` must be a live handle; the out pointers must be valid for writes.
 */
enum StpgStatus stpg_discretization_dims(const struct StpgDiscretization *d,
                                         size_t *n_space,
                                         size_t *trial_dofs);

/**
 * Solves the mode problem `f = c0·sin(πt)·λφ`, `u(0) = 0` with diffusion `a`.
 *
 * Coefficients are written interval by interval (`trial_dofs` values, see
 * [`stpg_discretization_dims`]) when `coeffs` is non-null; `y_norm` receives
 * the Y-norm of the solution when non-null.
 *
 * # Safety
 * `d` must be a live handle; `coeffs` must be null or valid for `len` writes.
 */
enum StpgStatus stpg_solve_mode(const struct StpgDiscretization *d,
                                double a,
                                double c0,
                                double *coeffs,
                                size_t len,
                                double *y_norm);

/**
 * `c_S = k·√λmax(S, D)` at the largest step; with `a > 0` also the weighted
 * value `a·c_S/√12` into `c_s_omega` (ignored when null).
 *
 * # Safety
 * `d` must be a live handle; `c_s` must be valid for a write.
 */
enum StpgStatus stpg_cfl_constants(const struct StpgDiscretization *d,
                                   double a,
                                   double *c_s,
                                   double *c_s_omega);

/**
 * Discrete inf-sup and continuity constants of the heat operator with
 * diffusion `a`, in the weighted (`weighted != 0`) or plain norm pair.
 * Fails with `ResourceCap` above `max_dofs` trial unknowns.
 *
 * # Safety
 * `d` must be a live handle; the out pointers must be valid for writes.
 */
enum StpgStatus stpg_infsup(const struct StpgDiscretization *d,
                            double a,
                            int32_t weighted,
                            size_t max_dofs,
                            double *sigma_min,
                            double *sigma_max);

/**
 * Largest moment order guaranteed by the integrability exponents of `1/amin`,
 * `amax/amin` and the data. Each exponent lies in `[1, ∞]`; pass `INFINITY`
 * for bounded quantities. The result may be `INFINITY`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum StpgStatus stpg_predict_max_moment(double alpha, double beta, double gamma, double *out);

/**
 * Copies the last error message of this thread, NUL terminated and
 * truncated to `len` bytes, into `buf`. Returns the full message length
 * plus one, so a call with `len = 0` sizes the buffer.
 *
 * # Safety
 * `buf` must be null or valid for `len` byte writes.
 */
size_t stpg_last_error_message(char *buf, size_t len);

/**
 * Static, NUL-terminated name of a status code; unknown codes map to `"unknown"`.
 */
const char *stpg_status_name(int32_t status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STPG_H */
