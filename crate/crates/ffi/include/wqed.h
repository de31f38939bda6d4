#ifndef WQED_H
#define WQED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WqedStatus {
  WQED_STATUS_OK = 0,
  WQED_STATUS_NULL_POINTER = 1,
  /**
   * Rejected parameters or configuration (CLI exit code 2).
   */
  WQED_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Numerical failure (CLI exit code 3).
   */
  WQED_STATUS_NUMERICAL = 3,
  /**
   * Output buffer shorter than the number of samples; the required length
   * is still written.
   */
  WQED_STATUS_BUFFER_TOO_SMALL = 4,
  WQED_STATUS_PANIC = 5,
} WqedStatus;

/**
 * Giant-emitter geometry and couplings.
 */
typedef struct WqedEmitter WqedEmitter;

/**
 * Diagonalized emitter-plus-waveguide Hamiltonian started from the excited
 * emitter.
 */
typedef struct WqedPropagator WqedPropagator;

typedef struct WqedDerived {
  /**
   * Per-leg coupling `G / M`.
   */
  double g;
  double phi;
  double tau;
} WqedDerived;

typedef struct WqedOptimalPoint {
  double omega_opt;
  double phi_opt;
  double slope_max;
  double rate;
} WqedOptimalPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * Valid until the next call on the same thread.
 */
const char *wqed_last_error(void);

/**
 * Library version, static storage.
 */
const char *wqed_version(void);

/**
 * Creates an emitter with `m` legs, total coupling `g_total`, leg spacing
 * `d`, group velocity `v` and bare frequency `omega`.
 */
enum WqedStatus wqed_emitter_new(size_t m,
                                 double g_total,
                                 double d,
                                 double v,
                                 double omega,
                                 struct WqedEmitter **out);

void wqed_emitter_free(struct WqedEmitter *emitter);

enum WqedStatus wqed_emitter_derived(const struct WqedEmitter *emitter, struct WqedDerived *out);

/**
 * Moves the emitter frequency to `omega`.
 */
enum WqedStatus wqed_emitter_set_omega(struct WqedEmitter *emitter, double omega);

/**
 * Markovian decay rate `R(omega)`.
 */
enum WqedStatus wqed_decay_rate(const struct WqedEmitter *emitter, double omega, double *out);

/**
 * Collective Lamb shift `L(omega)`.
 */
enum WqedStatus wqed_lamb_shift(const struct WqedEmitter *emitter, double omega, double *out);

/**
 * `dR/dOmega` at `omega`.
 */
enum WqedStatus wqed_decay_slope(const struct WqedEmitter *emitter, double omega, double *out);

/**
 * Right-flank maximizer of `|dR/dOmega|`. Needs `m >= 2`.
 */
enum WqedStatus wqed_find_optimal(const struct WqedEmitter *emitter, struct WqedOptimalPoint *out);

/**
 * Markovian population on `0, dt, ..., t_max`. `*written` always receives
 * the number of samples.
 */
enum WqedStatus wqed_markov_population(const struct WqedEmitter *emitter,
                                       double t_max,
                                       double dt,
                                       double *out,
                                       size_t len,
                                       size_t *written);

/**
 * Delay-equation population. `dt` is first shrunk to divide the delay
 * `d / v`, so the sample count can exceed `t_max / dt + 1`.
 */
enum WqedStatus wqed_dde_population(const struct WqedEmitter *emitter,
                                    double t_max,
                                    double dt,
                                    double *out,
                                    size_t len,
                                    size_t *written);

/**
 * Diagonalizes the emitter coupled to `n_modes` waveguide modes (default
 * window). Cost grows as `n_modes^3`.
 */
enum WqedStatus wqed_propagator_new(const struct WqedEmitter *emitter,
                                    size_t n_modes,
                                    struct WqedPropagator **out);

/**
 * Excited-state population at time `t`.
 */
enum WqedStatus wqed_propagator_population(const struct WqedPropagator *propagator,
                                           double t,
                                           double *out);

enum WqedStatus wqed_propagator_dim(const struct WqedPropagator *propagator, size_t *out);

void wqed_propagator_free(struct WqedPropagator *propagator);

/**
 * Markovian `f_H` in Hz/T^2 at frequency `omega` after dimensionless time `t`.
 */
enum WqedStatus wqed_cfi_markov(const struct WqedEmitter *emitter,
                                double omega,
                                double t,
                                double omega_ref,
                                double gamma,
                                double *out);

/**
 * `S_H = f_H^{-1/2}`.
 */
enum WqedStatus wqed_sensitivity(double f_h, double *out);

/**
 * `P (1 - P) / (dP/dOmega)^2`; infinite for a zero slope.
 */
enum WqedStatus wqed_variance_from_population(double pe, double dpe_domega, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WQED_H */
