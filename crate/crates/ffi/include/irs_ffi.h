#ifndef IRS_FFI_H
#define IRS_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IrsStatus {
  IRS_STATUS_OK = 0,
  IRS_STATUS_NULL_POINTER = 1,
  IRS_STATUS_INVALID_PARAMETER = 2,
  IRS_STATUS_DEGENERATE_RESONANCE = 3,
  IRS_STATUS_PHASE_DOMAIN = 4,
  IRS_STATUS_INSUFFICIENT_SAMPLES = 5,
  IRS_STATUS_SUB_REFERENCE_DISTANCE = 6,
  IRS_STATUS_ZERO_CHANNEL = 7,
  IRS_STATUS_INDEX_OUT_OF_RANGE = 8,
  IRS_STATUS_BUFFER_TOO_SMALL = 9,
  IRS_STATUS_PANIC = 99,
} IrsStatus;

typedef enum IrsSolver {
  IRS_SOLVER_QUADRATIC = 0,
  IRS_SOLVER_ONE_D = 1,
  IRS_SOLVER_DISCRETE = 2,
  IRS_SOLVER_ALIGN = 3,
} IrsSolver;

/**
 * Phases and objective trace of one alternating optimization.
 */
typedef struct IrsAoResult IrsAoResult;

/**
 * One channel realization `(h_d, h_r, G)`.
 */
typedef struct IrsChannel IrsChannel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *irs_last_error_message(void);

/**
 * NUL-terminated library version.
 */
const char *irs_version(void);

/**
 * Reflection coefficient of one element at angular frequency `omega`.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum IrsStatus irs_reflection_coefficient(double l1,
                                          double l2,
                                          double z0,
                                          double omega,
                                          double c,
                                          double r,
                                          double *out_re,
                                          double *out_im);

/**
 * Reflection amplitude of the `(beta_min, phi, k)` model at `theta` in `[-pi, pi]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum IrsStatus irs_model_amplitude(double beta_min,
                                   double phi,
                                   double k,
                                   double theta,
                                   double *out);

/**
 * Draws the channels of `trial` under `seed` for AP-user distance `d`,
 * with the default geometry and path loss otherwise.
 *
 * # Safety
 * `out` must be valid for writes. The handle written there must be freed
 * with [`irs_channel_free`].
 */
enum IrsStatus irs_channel_sample(uint64_t seed,
                                  uint64_t trial,
                                  double d,
                                  size_t m,
                                  size_t n,
                                  struct IrsChannel **out);

/**
 * # Safety
 * `ch` must be NULL or a handle from [`irs_channel_sample`] not yet freed.
 */
void irs_channel_free(struct IrsChannel *ch);

/**
 * # Safety
 * `ch` must be a live channel handle; `m` and `n` must be valid for writes.
 */
enum IrsStatus irs_channel_dims(const struct IrsChannel *ch, size_t *m, size_t *n);

/**
 * Alternating optimization of the reflection phases under the
 * `(beta_min, phi, k)` model, with default tolerances and the element
 * solver `solver` (an [`IrsSolver`] value). Starts from the same phases
 * as the experiment harness uses for `trial` under `seed`.
 *
 * # Safety
 * `ch` must be a live channel handle and `out` valid for writes. The
 * result must be freed with [`irs_ao_result_free`].
 */
enum IrsStatus irs_optimize(const struct IrsChannel *ch,
                            double beta_min,
                            double phi,
                            double k,
                            uint32_t solver,
                            uint64_t seed,
                            uint64_t trial,
                            struct IrsAoResult **out);

/**
 * # Safety
 * `res` must be NULL or a handle from [`irs_optimize`] not yet freed.
 */
void irs_ao_result_free(struct IrsAoResult *res);

/**
 * Copies the optimized phases into `buf`, which holds `len` values.
 *
 * # Safety
 * `res` must be a live result handle and `buf` valid for `len` writes.
 */
enum IrsStatus irs_ao_result_phases(const struct IrsAoResult *res, double *buf, size_t len);

/**
 * Final objective `||v^H Phi + h_d^H||^2` and number of sweeps.
 *
 * # Safety
 * `res` must be a live result handle; the out-pointers valid for writes.
 */
enum IrsStatus irs_ao_result_summary(const struct IrsAoResult *res,
                                     double *objective,
                                     size_t *sweeps,
                                     bool *converged);

/**
 * Achievable rate (bps/Hz) with MRT transmit beamforming for an optimized
 * reflection state, with powers in dBm.
 *
 * # Safety
 * `ch` and `res` must be live handles from the same realization; `out` valid for writes.
 */
enum IrsStatus irs_rate(const struct IrsChannel *ch,
                        const struct IrsAoResult *res,
                        double p_t_dbm,
                        double sigma2_dbm,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRS_FFI_H */
