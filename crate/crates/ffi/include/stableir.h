#ifndef STABLEIR_H
#define STABLEIR_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum SirStatus {
  SIR_STATUS_OK = 0,
  SIR_STATUS_NULL_POINTER = 1,
  SIR_STATUS_INVALID_ARGUMENT = 2,
  SIR_STATUS_DIMENSION_MISMATCH = 3,
  SIR_STATUS_SINGULAR = 4,
  SIR_STATUS_PARSE = 5,
  SIR_STATUS_CONFIG = 6,
  SIR_STATUS_IO = 7,
  SIR_STATUS_BUFFER_TOO_SMALL = 8,
  SIR_STATUS_PANIC = 9,
  SIR_STATUS_OTHER = 10,
} SirStatus;

/**
 * A square or rectangular real matrix.
 */
typedef struct SirMatrix SirMatrix;

/**
 * The solution and trace of one refinement run.
 */
typedef struct SirOutcome SirOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static version string.
 */
const char *sir_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sir_last_error(void);

/**
 * Generates a synthetic matrix. `kind` is `decay-spd`, `uniform`,
 * `normal-eq`, `conditioned` or `conditioned-sym`; `cond` is used by the
 * conditioned kinds only.
 *
 * # Safety
 * `kind` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SirStatus sir_matrix_generate(const char *kind,
                                   size_t n,
                                   uint64_t seed,
                                   double cond,
                                   struct SirMatrix **out);

/**
 * Reads a MatrixMarket file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SirStatus sir_matrix_read(const char *path, struct SirMatrix **out);

/**
 * Copies a dense row-major `rows × cols` array into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` doubles and `out` must be valid.
 */
enum SirStatus sir_matrix_from_dense(size_t rows,
                                     size_t cols,
                                     const double *data,
                                     struct SirMatrix **out);

/**
 * Number of rows, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t sir_matrix_rows(const struct SirMatrix *m);

/**
 * Number of columns, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t sir_matrix_cols(const struct SirMatrix *m);

/**
 * Entry `(i, j)`, zero-based.
 *
 * # Safety
 * `m` and `value` must be valid pointers.
 */
enum SirStatus sir_matrix_get(const struct SirMatrix *m, size_t i, size_t j, double *value);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void sir_matrix_free(struct SirMatrix *m);

/**
 * Runs one refinement on `a`.
 *
 * `config` is run-config text in the same TOML form the command-line tool
 * reads, or null for defaults; its `matrix` key is ignored. With `b` null
 * the right-hand side comes from the config's `rhs` key and the reference
 * solution is recorded in the trace.
 *
 * # Safety
 * `a` must be a live handle, `b` null or `b_len` doubles, `config` null or
 * NUL-terminated, `out` valid.
 */
enum SirStatus sir_solve(const struct SirMatrix *a,
                         const double *b,
                         size_t b_len,
                         const char *config,
                         struct SirOutcome **out);

/**
 * Process-style exit code: 0 converged, 2 stagnated or out of iterations,
 * 3 diverged. -1 for a null handle.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
int32_t sir_outcome_status(const struct SirOutcome *o);

/**
 * Outer iterations performed.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
size_t sir_outcome_iterations(const struct SirOutcome *o);

/**
 * `‖r_m‖/‖r_0‖` at the last iteration, NaN for a null handle.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
double sir_outcome_final_relres(const struct SirOutcome *o);

/**
 * Copies the solution into `buf`. `*len` receives its length; a null `buf`
 * only queries it.
 *
 * # Safety
 * `o` must be live, `buf` null or `cap` doubles, `len` null or valid.
 */
enum SirStatus sir_outcome_solution(const struct SirOutcome *o,
                                    double *buf,
                                    size_t cap,
                                    size_t *len);

/**
 * Copies the residual norms `‖r_0‖, …, ‖r_m‖`, with the same buffer rules as
 * [`sir_outcome_solution`].
 *
 * # Safety
 * As for [`sir_outcome_solution`].
 */
enum SirStatus sir_outcome_residuals(const struct SirOutcome *o,
                                     double *buf,
                                     size_t cap,
                                     size_t *len);

/**
 * Writes the per-iteration trace CSV.
 *
 * # Safety
 * `o` must be live and `path` NUL-terminated.
 */
enum SirStatus sir_outcome_write_trace(const struct SirOutcome *o, const char *path);

/**
 * # Safety
 * `o` must be null or a handle not yet freed.
 */
void sir_outcome_free(struct SirOutcome *o);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLEIR_H */
