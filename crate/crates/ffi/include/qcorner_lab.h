#ifndef QCORNER_LAB_H
#define QCORNER_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum QclStatus {
  QCL_STATUS_OK = 0,
  QCL_STATUS_NULL_POINTER = 1,
  QCL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Numerical failure: no convergence, singular system, divergent quadrature.
   */
  QCL_STATUS_NUMERICAL = 3,
  QCL_STATUS_PANIC = 4,
} QclStatus;

typedef struct QclMap QclMap;

typedef struct QclMatrix QclMatrix;

typedef struct QclState QclState;

typedef struct QclWeight QclWeight;

/**
 * Tolerances; pass NULL wherever accepted for the library defaults.
 */
typedef struct QclTolerance {
  double eps_psd;
  double eps_eq;
  double eps_cluster;
} QclTolerance;

/**
 * Summary of the gauge group of a rank-one double.
 */
typedef struct QclGaugeDescriptor {
  /**
   * Number of distinct positive eigenvalues.
   */
  size_t block_count;
  size_t kernel_multiplicity;
  size_t dim_u_rho;
  size_t dim_gauge;
  /**
   * Commutant dimension computed independently of the multiplicities.
   */
  size_t oracle_dim_u_rho;
} QclGaugeDescriptor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *qcl_last_error_message(void);

/**
 * Default tolerances.
 */
struct QclTolerance qcl_tolerance_default(void);

/**
 * # Safety
 * `data` holds `2 * rows * cols` doubles; `out` is writable.
 */
enum QclStatus qcl_matrix_new(size_t rows, size_t cols, const double *data, struct QclMatrix **out);

/**
 * # Safety
 * `m` is a live matrix handle; `out` holds room for `2 * rows * cols` doubles.
 */
enum QclStatus qcl_matrix_data(const struct QclMatrix *m, double *out);

/**
 * # Safety
 * `m` is a live matrix handle; `rows` and `cols` are writable or NULL.
 */
enum QclStatus qcl_matrix_shape(const struct QclMatrix *m, size_t *rows, size_t *cols);

/**
 * # Safety
 * `m` is NULL or a handle not yet freed.
 */
void qcl_matrix_free(struct QclMatrix *m);

/**
 * Map from its Choi matrix (`n_in*n_out` square).
 *
 * # Safety
 * `choi` is a live matrix handle; `out` is writable.
 */
enum QclStatus qcl_map_from_choi(size_t n_in,
                                 size_t n_out,
                                 const struct QclMatrix *choi,
                                 struct QclMap **out);

/**
 * Schur multiplier `A ↦ q ∘ A`.
 *
 * # Safety
 * `q` is a live square matrix handle; `out` is writable.
 */
enum QclStatus qcl_map_schur(const struct QclMatrix *q, struct QclMap **out);

/**
 * Canonical λ-Schur map for a zero-sum λ of length `n`.
 *
 * # Safety
 * `lambda` holds `n` doubles; `tol` is NULL or valid; `out` is writable.
 */
enum QclStatus qcl_map_lambda_schur(const double *lambda,
                                    size_t n,
                                    const struct QclTolerance *tol,
                                    struct QclMap **out);

/**
 * `A ↦ tr(AΩ) I`.
 *
 * # Safety
 * `state` is a live state handle; `out` is writable.
 */
enum QclStatus qcl_map_rank_one_state(const struct QclState *state, struct QclMap **out);

/**
 * Map from a JSON document of kind `map` (or `state`, for its rank-one map).
 *
 * # Safety
 * `json` is a NUL-terminated UTF-8 string; `tol` is NULL or valid; `out` is writable.
 */
enum QclStatus qcl_map_from_json(const char *json,
                                 const struct QclTolerance *tol,
                                 struct QclMap **out);

/**
 * Copy of the Choi matrix.
 *
 * # Safety
 * `map` is a live map handle; `out` is writable.
 */
enum QclStatus qcl_map_choi(const struct QclMap *map, struct QclMatrix **out);

/**
 * # Safety
 * `map` is NULL or a handle not yet freed.
 */
void qcl_map_free(struct QclMap *map);

/**
 * Complete positivity via the Choi matrix.
 *
 * # Safety
 * `map` is a live handle; `tol` is NULL or valid; `verdict` is writable;
 * `min_eig` is writable or NULL.
 */
enum QclStatus qcl_map_is_cp(const struct QclMap *map,
                             const struct QclTolerance *tol,
                             bool *verdict,
                             double *min_eig);

/**
 * q-positivity certificate over `grid` (`grid_len` points starting at 0),
 * or over the default grid when `grid` is NULL.
 *
 * # Safety
 * `map` is a live handle; `grid` is NULL or holds `grid_len` doubles; `tol` is
 * NULL or valid; `verdict` is writable; `worst_min_eig` is writable or NULL.
 */
enum QclStatus qcl_map_certify_q_positive(const struct QclMap *map,
                                          const double *grid,
                                          size_t grid_len,
                                          const struct QclTolerance *tol,
                                          bool *verdict,
                                          double *worst_min_eig);

/**
 * State with density `omega` (positive semidefinite, unit trace).
 *
 * # Safety
 * `omega` is a live matrix handle; `tol` is NULL or valid; `out` is writable.
 */
enum QclStatus qcl_state_new(const struct QclMatrix *omega,
                             const struct QclTolerance *tol,
                             struct QclState **out);

/**
 * # Safety
 * `state` is NULL or a handle not yet freed.
 */
void qcl_state_free(struct QclState *state);

/**
 * Gauge-group dimensions. Block multiplicities (largest eigenvalue first)
 * are copied into `multiplicities` up to `capacity` entries.
 *
 * # Safety
 * `state` is a live handle; `tol` is NULL or valid; `out` is writable;
 * `multiplicities` is NULL or holds `capacity` entries.
 */
enum QclStatus qcl_gauge_describe(const struct QclState *state,
                                  const struct QclTolerance *tol,
                                  struct QclGaugeDescriptor *out,
                                  size_t *multiplicities,
                                  size_t capacity);

/**
 * Normalized indicator weight of `(a, b)`.
 *
 * # Safety
 * `out` is writable.
 */
enum QclStatus qcl_weight_indicator(double a, double b, struct QclWeight **out);

/**
 * # Safety
 * `out` is writable.
 */
enum QclStatus qcl_weight_exponential(struct QclWeight **out);

/**
 * # Safety
 * `out` is writable.
 */
enum QclStatus qcl_weight_inv_sqrt(struct QclWeight **out);

/**
 * Truncated moments `ν_t(I)` and `ν_t(Λ)`.
 *
 * # Safety
 * `weight` is a live handle; `nu_i` and `nu_lambda` are writable or NULL.
 */
enum QclStatus qcl_weight_moments(const struct QclWeight *weight,
                                  double t,
                                  double *nu_i,
                                  double *nu_lambda);

/**
 * # Safety
 * `weight` is NULL or a handle not yet freed.
 */
void qcl_weight_free(struct QclWeight *weight);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCORNER_LAB_H */
