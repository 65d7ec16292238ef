#ifndef GCHORD_H
#define GCHORD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum gchord_status {
  GCHORD_STATUS_OK = 0,
  GCHORD_STATUS_NULL_POINTER = 1,
  GCHORD_STATUS_INVALID_GRID = 2,
  GCHORD_STATUS_CONVEXITY_VIOLATION = 3,
  GCHORD_STATUS_NON_POSITIVE_SUPPORT = 4,
  GCHORD_STATUS_INTERPOLATION_ERROR = 5,
  GCHORD_STATUS_POINT_OUTSIDE_BODY = 6,
  GCHORD_STATUS_QUADRATURE_UNDERFLOW = 7,
  GCHORD_STATUS_INVALID_SHAPE = 8,
  GCHORD_STATUS_UNSUPPORTED_EXPONENT = 9,
  GCHORD_STATUS_INVALID_PROBLEM = 10,
  GCHORD_STATUS_INVALID_CONFIG = 11,
  GCHORD_STATUS_DEGENERATE_DENOMINATOR = 12,
  GCHORD_STATUS_STEP_SIZE_UNDERFLOW = 13,
  GCHORD_STATUS_NON_CONVERGENCE = 14,
  GCHORD_STATUS_SHAPE_MISMATCH = 15,
  GCHORD_STATUS_PERTURBED_NOT_CONVEX = 16,
  GCHORD_STATUS_BUFFER_TOO_SMALL = 17,
  GCHORD_STATUS_PANIC = 99,
} gchord_status;

/**
 * Opaque support function on a uniform angle grid.
 */
typedef struct gchord_body gchord_body;

/**
 * Opaque problem: exponents and density.
 */
typedef struct gchord_problem gchord_problem;

/**
 * Opaque result of a flow run.
 */
typedef struct gchord_run gchord_run;

/**
 * Flow step control and quadrature resolution.
 */
typedef struct gchord_flow_config {
  double dt0;
  double dt_min;
  size_t max_steps;
  double eps_stationary;
  size_t record_every;
  size_t radial_nodes;
  size_t direction_nodes;
} gchord_flow_config;

/**
 * Final state of a run, as plain values.
 */
typedef struct gchord_run_summary {
  /**
   * `Ok`, `NonConvergence` or `StepSizeUnderflow`.
   */
  enum gchord_status status;
  size_t steps;
  double t;
  double theta;
  double tau;
  double rhs_sup;
  double residual_sup;
} gchord_run_summary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or
 * 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t gchord_last_error_message(char *buf, size_t len);

struct gchord_flow_config gchord_flow_config_default(void);

/**
 * Body from `n` support values sampled at angles `2πi/n`.
 *
 * # Safety
 * `values` must point to `n` doubles; `out` must be writable.
 */
enum gchord_status gchord_body_new(const double *values, size_t n, struct gchord_body **out);

/**
 * Disk of the given radius on an `n`-node grid.
 *
 * # Safety
 * `out` must be writable.
 */
enum gchord_status gchord_body_disk(size_t n, double radius, struct gchord_body **out);

/**
 * Ellipse with semi-axes `a` (along θ = 0) and `b`.
 *
 * # Safety
 * `out` must be writable.
 */
enum gchord_status gchord_body_ellipse(size_t n, double a, double b, struct gchord_body **out);

/**
 * # Safety
 * `body` must be null or a pointer returned by this library, not yet freed.
 */
void gchord_body_free(struct gchord_body *body);

/**
 * Grid size of `body`, or 0 for a null pointer.
 *
 * # Safety
 * `body` must be null or a live handle.
 */
size_t gchord_body_len(const struct gchord_body *body);

/**
 * Copies the support values into `out` (`len` must equal the grid size).
 *
 * # Safety
 * `body` must be a live handle and `out` must point to `len` doubles.
 */
enum gchord_status gchord_body_values(const struct gchord_body *body, double *out, size_t len);

/**
 * Gaussian chord integral of `body`.
 *
 * # Safety
 * `body` must be a live handle and `out` writable.
 */
enum gchord_status gchord_chord_integral(const struct gchord_body *body,
                                         double q,
                                         size_t radial_nodes,
                                         size_t direction_nodes,
                                         double *out);

/**
 * Gaussian mass of `body`.
 *
 * # Safety
 * `body` must be a live handle and `out` writable.
 */
enum gchord_status gchord_gaussian_volume(const struct gchord_body *body, double *out);

/**
 * Problem with exponents `p ≥ 0`, `q > 1` and an even positive density of
 * `n` samples.
 *
 * # Safety
 * `density` must point to `n` doubles; `out` must be writable.
 */
enum gchord_status gchord_problem_new(double p,
                                      double q,
                                      const double *density,
                                      size_t n,
                                      struct gchord_problem **out);

/**
 * # Safety
 * `problem` must be null or a live handle.
 */
void gchord_problem_free(struct gchord_problem *problem);

/**
 * Writes `∂h/∂t` at `body` into `out` (`len` ≥ grid size).
 *
 * # Safety
 * Handles must be live, `config` readable and `out` must hold `len` doubles.
 */
enum gchord_status gchord_flow_rhs(const struct gchord_problem *problem,
                                   const struct gchord_flow_config *config,
                                   const struct gchord_body *body,
                                   double *out,
                                   size_t len);

/**
 * Sup-norm of the Monge–Ampère residual of `body` for the given `tau`.
 *
 * # Safety
 * Handles must be live, `config` readable and `out` writable.
 */
enum gchord_status gchord_ma_residual(const struct gchord_problem *problem,
                                      const struct gchord_flow_config *config,
                                      const struct gchord_body *body,
                                      double tau,
                                      double *out);

/**
 * Runs the flow from `initial`. A run that stops without converging still
 * yields a handle; its summary carries the stopping status.
 *
 * # Safety
 * Handles must be live, `config` readable and `out` writable.
 */
enum gchord_status gchord_solve(const struct gchord_problem *problem,
                                const struct gchord_flow_config *config,
                                const struct gchord_body *initial,
                                struct gchord_run **out);

/**
 * # Safety
 * `run` must be a live handle and `out` writable.
 */
enum gchord_status gchord_run_get_summary(const struct gchord_run *run,
                                          struct gchord_run_summary *out);

/**
 * New body handle holding the final support function of `run`.
 *
 * # Safety
 * `run` must be a live handle and `out` writable.
 */
enum gchord_status gchord_run_final_body(const struct gchord_run *run, struct gchord_body **out);

/**
 * # Safety
 * `run` must be null or a live handle.
 */
void gchord_run_free(struct gchord_run *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GCHORD_H */
