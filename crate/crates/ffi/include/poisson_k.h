#ifndef POISSON_K_H
#define POISSON_K_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PkStatus {
  PK_STATUS_OK = 0,
  PK_STATUS_INVALID_PARAMETER = 1,
  PK_STATUS_OVERFLOW = 2,
  PK_STATUS_RESOURCE_LIMIT = 3,
  PK_STATUS_SOLVER_FAILURE = 4,
  PK_STATUS_STRUCTURAL_ANOMALY = 5,
  PK_STATUS_NULL_POINTER = 6,
  PK_STATUS_BUFFER_TOO_SMALL = 7,
  PK_STATUS_PANIC = 8,
} PkStatus;

/**
 * Mode jumps for `λ ∈ (0, 2]`, in increasing `λ`.
 */
typedef struct PkJumpList PkJumpList;

/**
 * Scaled pmf table `h_k(0..=n_max; λ)`.
 */
typedef struct PkTable PkTable;

typedef struct PkJump {
  double lambda;
  size_t mode_before;
  size_t mode_after;
} PkJump;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len` bytes, into `buf`. Returns the untruncated length
 * including the terminator; `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or valid for `len` writable bytes.
 */
size_t pk_last_error_message(char *buf, size_t len);

/**
 * Builds the table for `n = 0..=n_max`, in log space when `kλ` is large.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum PkStatus pk_table_new(uint32_t k, double lambda, size_t n_max, struct PkTable **out);

/**
 * # Safety
 * `table` must be null or a handle from [`pk_table_new`] not yet freed.
 */
void pk_table_free(struct PkTable *table);

/**
 * Number of entries, `n_max + 1`; zero for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t pk_table_len(const struct PkTable *table);

/**
 * Scaled value `h_k(n; λ)`; `+inf` if it exceeds the double range.
 *
 * # Safety
 * `table` must be a live handle and `out` valid for a write.
 */
enum PkStatus pk_table_value(const struct PkTable *table, size_t n, double *out);

/**
 * `ln h_k(n; λ)`.
 *
 * # Safety
 * `table` must be a live handle and `out` valid for a write.
 */
enum PkStatus pk_table_log_value(const struct PkTable *table, size_t n, double *out);

/**
 * Probability `f_k(n; λ)`.
 *
 * # Safety
 * `table` must be a live handle and `out` valid for a write.
 */
enum PkStatus pk_table_pmf(const struct PkTable *table, size_t n, double *out);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum PkStatus pk_pmf(uint32_t k, double lambda, size_t n, double *out);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum PkStatus pk_median(uint32_t k, double lambda, size_t *out);

/**
 * Writes the sorted mode set into `modes[0..capacity]` and its size into
 * `count`. Returns `BufferTooSmall` (with `count` set) if it does not fit.
 *
 * # Safety
 * `modes` must be valid for `capacity` writes (or null when `capacity` is
 * zero) and `count` valid for a write.
 */
enum PkStatus pk_mode_set(uint32_t k,
                          double lambda,
                          double tie_tolerance,
                          size_t *modes,
                          size_t capacity,
                          size_t *count);

/**
 * Positive root `r_k` of `h_k(k; λ) = 1`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum PkStatus pk_solve_r_k(uint32_t k, double *out);

/**
 * Smallest `λ` at which the mode set is `{0, m̂}`; requires `k >= 2`.
 *
 * # Safety
 * `lambda_hat` and `m_hat` must be valid for writes.
 */
enum PkStatus pk_first_double_mode(uint32_t k, double *lambda_hat, size_t *m_hat);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum PkStatus pk_jumps_new(uint32_t k, struct PkJumpList **out);

/**
 * # Safety
 * `list` must be null or a live handle.
 */
size_t pk_jumps_len(const struct PkJumpList *list);

/**
 * # Safety
 * `list` must be a live handle and `out` valid for a write.
 */
enum PkStatus pk_jumps_get(const struct PkJumpList *list, size_t index, struct PkJump *out);

/**
 * # Safety
 * `list` must be null or a handle from [`pk_jumps_new`] not yet freed.
 */
void pk_jumps_free(struct PkJumpList *list);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POISSON_K_H */
