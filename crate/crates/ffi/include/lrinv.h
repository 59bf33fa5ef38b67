#ifndef LRINV_H
#define LRINV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LrinvStatus {
  LRINV_STATUS_OK = 0,
  LRINV_STATUS_NULL_POINTER = 1,
  LRINV_STATUS_INVALID_ARGUMENT = 2,
  LRINV_STATUS_CONFIG = 3,
  LRINV_STATUS_OUT_OF_WINDOW = 4,
  LRINV_STATUS_NUMERICAL = 5,
  LRINV_STATUS_BOUNDARY_LEAK = 6,
  LRINV_STATUS_BUFFER_TOO_SMALL = 7,
  LRINV_STATUS_PANIC = 8,
} LrinvStatus;

typedef enum LrinvParity {
  LRINV_PARITY_EVEN = 0,
  LRINV_PARITY_ODD = 1,
} LrinvParity;

/**
 * A wavefunction sampled on a grid at one time.
 */
typedef struct LrinvFrame LrinvFrame;

/**
 * A parsed and validated oscillator model.
 */
typedef struct LrinvModel LrinvModel;

/**
 * An auxiliary-equation solution on a time interval.
 */
typedef struct LrinvRho LrinvRho;

/**
 * Uniform grid. `order` is the finite-difference order: 2, 4, 6 or 8.
 */
typedef struct LrinvGrid {
  double q_min;
  double q_max;
  size_t n_points;
  uint32_t order;
} LrinvGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lrinv_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes excluding the
 * terminator, or 0 when there is no message.
 */
size_t lrinv_last_error_message(char *buf, size_t len);

/**
 * Parses a JSON model document.
 */
enum LrinvStatus lrinv_model_from_json(const char *json, struct LrinvModel **out);

/**
 * Loads a built-in model by name, e.g. "ck-reference".
 */
enum LrinvStatus lrinv_model_from_preset(const char *name, struct LrinvModel **out);

void lrinv_model_free(struct LrinvModel *model);

/**
 * Modified frequency squared at `t`.
 */
enum LrinvStatus lrinv_model_omega_sq(const struct LrinvModel *model, double t, double *out);

/**
 * Solves for rho on [t0, t1] (closed form when available).
 */
enum LrinvStatus lrinv_rho_new(const struct LrinvModel *model,
                               double t0,
                               double t1,
                               struct LrinvRho **out);

enum LrinvStatus lrinv_rho_eval(const struct LrinvRho *rho,
                                double t,
                                double *value,
                                double *derivative);

void lrinv_rho_free(struct LrinvRho *rho);

/**
 * Normalized Gaussian exp(-(q-q0)^2/(4 sigma^2) + i k0 q).
 */
enum LrinvStatus lrinv_frame_gaussian(struct LrinvGrid grid,
                                      double t,
                                      double q0,
                                      double sigma,
                                      double k0,
                                      struct LrinvFrame **out);

/**
 * Frame from `grid.n_points` real and imaginary parts.
 */
enum LrinvStatus lrinv_frame_from_values(struct LrinvGrid grid,
                                         double t,
                                         const double *re,
                                         const double *im,
                                         struct LrinvFrame **out);

/**
 * Invariant eigenfunction (`with_phase == 0`) or exact Schrödinger solution
 * (`with_phase != 0`) for eigenvalue `lambda` at time `t`.
 */
enum LrinvStatus lrinv_frame_eigen(const struct LrinvModel *model,
                                   const struct LrinvRho *rho,
                                   double lambda,
                                   enum LrinvParity parity,
                                   struct LrinvGrid grid,
                                   double t,
                                   int with_phase,
                                   struct LrinvFrame **out);

/**
 * Crank–Nicolson propagation of `initial` to `t_final`.
 */
enum LrinvStatus lrinv_propagate(const struct LrinvModel *model,
                                 const struct LrinvFrame *initial,
                                 double t_final,
                                 double dt,
                                 struct LrinvFrame **out);

size_t lrinv_frame_len(const struct LrinvFrame *frame);

double lrinv_frame_time(const struct LrinvFrame *frame);

/**
 * Squared norm on the grid.
 */
double lrinv_frame_norm_sq(const struct LrinvFrame *frame);

/**
 * Copies values into caller buffers of length `len`.
 */
enum LrinvStatus lrinv_frame_values(const struct LrinvFrame *frame,
                                    double *re,
                                    double *im,
                                    size_t len);

void lrinv_frame_free(struct LrinvFrame *frame);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRINV_H */
