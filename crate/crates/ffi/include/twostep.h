#ifndef TWOSTEP_CAPI_H
#define TWOSTEP_CAPI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of the C API.
 */
typedef enum TsStatus {
  TsOk = 0,
  /**
   * Bad arguments: null pointers, unknown names, malformed specs.
   */
  TsErrInvalid = 1,
  /**
   * Mass balance violated between the two measures.
   */
  TsErrBalance = 2,
  /**
   * Solver-level failure (non-convergence, conditioning, size cap).
   */
  TsErrSolver = 3,
  /**
   * Singular kernel or non-finite evaluation.
   */
  TsErrSingular = 4,
  /**
   * File I/O or parsing failure.
   */
  TsErrIo = 5,
  /**
   * A panic was caught at the boundary.
   */
  TsErrPanic = 6,
} TsStatus;

/**
 * Opaque discrete measure.
 */
typedef struct TsMeasure TsMeasure;

/**
 * Opaque two-step solution.
 */
typedef struct TsSolution TsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ts_last_error(void);

/**
 * Builds a measure from row-major coordinates and weights (copied).
 *
 * # Safety
 * `points` must hold `len*dim` doubles, `weights` must hold `len`.
 */
struct TsMeasure *ts_measure_new(uintptr_t dim,
                                 uintptr_t len,
                                 const double *points,
                                 const double *weights);

/**
 * Reads a measure from `x1,...,xd,w` CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string.
 */
struct TsMeasure *ts_measure_from_csv(const char *path);

/**
 * # Safety
 * The handle must be live or null.
 */
uintptr_t ts_measure_len(const struct TsMeasure *m);

/**
 * # Safety
 * The handle must be live or null.
 */
uintptr_t ts_measure_dim(const struct TsMeasure *m);

/**
 * # Safety
 * The handle must be live or null.
 */
double ts_measure_total_mass(const struct TsMeasure *m);

/**
 * Copies the support coordinates into `out` (`len*dim` doubles).
 *
 * # Safety
 * `out` must hold `ts_measure_len(m) * ts_measure_dim(m)` doubles.
 */
enum TsStatus ts_measure_copy_points(const struct TsMeasure *m, double *out);

/**
 * Copies the weights into `out` (`len` doubles).
 *
 * # Safety
 * `out` must hold `ts_measure_len(m)` doubles.
 */
enum TsStatus ts_measure_copy_weights(const struct TsMeasure *m, double *out);

/**
 * Frees a measure handle (null is a no-op).
 *
 * # Safety
 * `m` must come from this library and not be freed twice.
 */
void ts_measure_free(struct TsMeasure *m);

/**
 * Squared Wasserstein-2 distance with the 1/2-factor convention.
 *
 * # Safety
 * All pointers must be valid; `out` receives the value on success.
 */
enum TsStatus ts_wasserstein2(const struct TsMeasure *a, const struct TsMeasure *b, double *out);

/**
 * Solves the two-step problem for a named catalog potential.
 * `entropic != 0` selects the entropic solver, `barycentric != 0` the
 * barycentric map extraction.
 *
 * # Safety
 * `source`/`target` must be live measure handles; `potential` a
 * NUL-terminated string.
 */
struct TsSolution *ts_solve(const struct TsMeasure *source,
                            const struct TsMeasure *target,
                            const char *potential,
                            double t,
                            int entropic,
                            int barycentric);

/**
 * # Safety
 * The handle must be live or null.
 */
uintptr_t ts_solution_len(const struct TsSolution *s);

/**
 * # Safety
 * The handle must be live or null.
 */
uintptr_t ts_solution_dim(const struct TsSolution *s);

/**
 * # Safety
 * The handle must be live or null.
 */
double ts_solution_objective(const struct TsSolution *s);

/**
 * `W2(m_#ρ₀, ρ_T)` diagnostic; NaN when it was not computed.
 * # Safety
 * The handle must be live or null.
 */
double ts_solution_pushforward_error(const struct TsSolution *s);

/**
 * Copies the full-map images `m(x_i)` (`len*dim` doubles).
 *
 * # Safety
 * `out` must hold `ts_solution_len(s) * ts_solution_dim(s)` doubles.
 */
enum TsStatus ts_solution_copy_map(const struct TsSolution *s, double *out);

/**
 * Copies the initial velocity field `∇φ(x_i)` (`len*dim` doubles).
 *
 * # Safety
 * `out` must hold `ts_solution_len(s) * ts_solution_dim(s)` doubles.
 */
enum TsStatus ts_solution_copy_velocity(const struct TsSolution *s, double *out);

/**
 * The kick-time measure as a fresh handle (caller frees).
 *
 * # Safety
 * `s` must be a live solution handle.
 */
struct TsMeasure *ts_solution_intermediate(const struct TsSolution *s);

/**
 * Frees a solution handle (null is a no-op).
 *
 * # Safety
 * `s` must come from `ts_solve` and not be freed twice.
 */
void ts_solution_free(struct TsSolution *s);

/**
 * Runs structure-condition scans for a named potential on its default
 * region and returns a JSON report (free with [`ts_string_free`]).
 * `conditions` is a comma-separated subset of `H1,H2,H2w,H2c`.
 *
 * # Safety
 * `potential` and `conditions` must be NUL-terminated strings.
 */
char *ts_check_potential(const char *potential,
                         const char *conditions,
                         uintptr_t points,
                         uintptr_t directions,
                         uint64_t seed);

/**
 * Closed-form curvature expression of the inverse-power kernel's cost at
 * `z` with unit directions `xi`, `eta` in dimension `dim >= 3`.
 *
 * # Safety
 * `z`, `xi`, `eta` must each hold `dim` doubles; `out` receives the value.
 */
enum TsStatus ts_coulomb_mtw_lhs(uintptr_t dim,
                                 const double *z,
                                 const double *xi,
                                 const double *eta,
                                 double *out);

/**
 * Frees a string returned by this library (null is a no-op).
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ts_string_free(char *s);

/**
 * `½ ΣΣ w_i w_j κ(y_i − y_j)` for a named kernel; singular kernels use the
 * given exclusion radius (pass 0 for entire kernels).
 *
 * # Safety
 * `m` must be a live measure handle, `kernel` a NUL-terminated string.
 */
enum TsStatus ts_interaction_energy(const struct TsMeasure *m,
                                    const char *kernel,
                                    double exclusion_radius,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOSTEP_CAPI_H */
