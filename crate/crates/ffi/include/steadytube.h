#ifndef STEADYTUBE_H
#define STEADYTUBE_H

/* Generated by cbindgen from the steadytube-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum StStatus {
  /**
   * Success.
   */
  ST_OK = 0,
  /**
   * A pointer argument was null or a scalar argument was out of range.
   */
  ST_INVALID_ARGUMENT = 1,
  /**
   * Malformed configuration (JSON schema, unknown system, bad matrix).
   */
  ST_CONFIG_ERROR = 2,
  /**
   * Numerical failure (no convergence, blow-up, singular matrix).
   */
  ST_NUMERICAL_ERROR = 3,
  /**
   * A state left the domain of definition of the system.
   */
  ST_DOMAIN_ERROR = 4,
  /**
   * The operation is not supported for this system.
   */
  ST_UNSUPPORTED = 5,
} StStatus;

/**
 * Opaque handle to a solved steady profile (keeps its system alive).
 */
typedef struct StProfile StProfile;

/**
 * Opaque handle to a system definition.
 */
typedef struct StSystem StSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the most recent error message of this thread into `buf`
 * (NUL-terminated, truncated to `len` bytes). Returns the full message
 * length in bytes, excluding the NUL.
 *
 * # Safety
 * `buf` must be valid for writes of `len` bytes, or null (then nothing is
 * written and only the length is returned).
 */
size_t st_last_error(char *buf, size_t len);

/**
 * Build a system from a JSON configuration string such as
 * `{"system":"isentropic_ns","gamma":2.0,"a":1.0,"nu":0.1}` and store a
 * handle in `out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid pointer.
 * The returned handle must be released with [`st_system_free`].
 */
enum StStatus st_system_from_json(const char *json, struct StSystem **out);

/**
 * Release a system handle. Passing null is a no-op.
 *
 * # Safety
 * `handle` must be a pointer previously returned by [`st_system_from_json`]
 * that has not been freed yet.
 */
void st_system_free(struct StSystem *handle);

/**
 * Total state dimension n of the system, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be a live system handle or null.
 */
size_t st_system_n(const struct StSystem *handle);

/**
 * Number of hyperbolic (inviscid) components r, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be a live system handle or null.
 */
size_t st_system_r(const struct StSystem *handle);

/**
 * Solve the steady boundary-value problem by shooting and store a profile
 * handle in `out`. `u0` has length n, `u1_ii` length n−r; `c2_guess` may be
 * null (zero initial guess) or have length n−r.
 *
 * # Safety
 * `sys` must be a live system handle; array pointers must be valid for the
 * stated lengths; `out` must be a valid pointer. The returned handle must
 * be released with [`st_profile_free`].
 */
enum StStatus st_solve_steady(const struct StSystem *sys,
                              const double *u0,
                              const double *u1_ii,
                              const double *c2_guess,
                              struct StProfile **out);

/**
 * Release a profile handle. Passing null is a no-op.
 *
 * # Safety
 * `handle` must be a pointer previously returned by [`st_solve_steady`]
 * that has not been freed yet.
 */
void st_profile_free(struct StProfile *handle);

/**
 * Evaluate the profile at `x` ∈ [0,1]; writes n values into `out`.
 *
 * # Safety
 * `handle` must be a live profile handle; `out` must be valid for n writes.
 */
enum StStatus st_profile_eval(const struct StProfile *handle, double x, double *out);

/**
 * Shooting residual |Φ| of the solved profile (NaN for a null handle).
 *
 * # Safety
 * `handle` must be a live profile handle or null.
 */
double st_profile_residual(const struct StProfile *handle);

/**
 * det dΦ at the solution (NaN for a null handle).
 *
 * # Safety
 * `handle` must be a live profile handle or null.
 */
double st_profile_det_dphi(const struct StProfile *handle);

/**
 * Copy the shooting constants C₂ (length n−r) into `out`.
 *
 * # Safety
 * `handle` must be a live profile handle; `out` must be valid for n−r
 * writes.
 */
enum StStatus st_profile_c2(const struct StProfile *handle, double *out);

/**
 * Evaluate the Evans function D(λ) at λ = `re` + i·`im` along the profile;
 * writes log|D| and the phase of D (radians).
 *
 * # Safety
 * `handle` must be a live profile handle; `out_log_mag` and `out_phase`
 * must be valid pointers.
 */
enum StStatus st_evans_eval(const struct StProfile *handle,
                            double re,
                            double im,
                            double *out_log_mag,
                            double *out_phase);

/**
 * Stability index μ = sgn D(0)·sgn D(λ_max) of the profile. Pass
 * `lambda_max` ≤ 0 for the automatic high-frequency cutoff. Writes μ
 * (+1, −1, or 0 when indeterminate) and the number of real-axis sign
 * changes found.
 *
 * # Safety
 * `handle` must be a live profile handle; output pointers must be valid.
 */
enum StStatus st_stability_index(const struct StProfile *handle,
                                 double lambda_max,
                                 int32_t *out_mu,
                                 size_t *out_sign_changes);

/**
 * Zero-frequency comparison: writes sgn D(0), sgn det dΦ, and whether they
 * agree (1 agree, 0 disagree, −1 degenerate comparison).
 *
 * # Safety
 * `handle` must be a live profile handle; output pointers must be valid.
 */
enum StStatus st_evans_zero_check(const struct StProfile *handle,
                                  double *out_sign_d0,
                                  double *out_sign_det_dphi,
                                  int32_t *out_agree);

/**
 * Classify the zero-viscosity limit of isentropic boundary data
 * (pressure p = a·ρ^γ, inflow density `rho0`, velocities `u0`, `u1`).
 * On success `*out_json` receives a malloc-style JSON document that must be
 * released with [`st_string_free`].
 *
 * # Safety
 * `out_json` must be a valid pointer.
 */
enum StStatus st_classify_inviscid(double rho0,
                                   double u0,
                                   double u1,
                                   double gamma,
                                   double a,
                                   double nu,
                                   char **out_json);

/**
 * Release a string returned by this library. Passing null is a no-op.
 *
 * # Safety
 * `s` must be a pointer previously returned by a `st_*` function that
 * documents this deallocator, and must not be freed twice.
 */
void st_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEADYTUBE_H */
