#ifndef CURRENTCOH_H
#define CURRENTCOH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CcStatus {
  CC_STATUS_OK = 0,
  /**
   * A null pointer, invalid UTF-8, or a zero truncation order.
   */
  CC_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The algebra name is not sl(n) or gl(n) with n >= 2.
   */
  CC_STATUS_UNSUPPORTED_ALGEBRA = 2,
  /**
   * A block outside the bounds of the table, or a buffer too small.
   */
  CC_STATUS_OUT_OF_RANGE = 3,
  /**
   * The computation finished but disagrees with the prediction.
   */
  CC_STATUS_VERIFICATION_FAILED = 4,
  /**
   * A panic or an unexpected internal error.
   */
  CC_STATUS_INTERNAL = 5,
} CcStatus;

/**
 * A Lie algebra `sl(n)` or `gl(n)` with its Chevalley data.
 */
typedef struct CcAlgebra CcAlgebra;

/**
 * A table of cohomology dimensions indexed by `(d, p, w)`.
 */
typedef struct CcTable CcTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build the algebra named `name` (`"sl2"`, `"sl(3)"`, `"gl2"`, ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CcStatus cc_algebra_new(const char *name, struct CcAlgebra **out);

/**
 * Release an algebra; null is ignored.
 *
 * # Safety
 * `alg` must come from `cc_algebra_new` and not be freed twice.
 */
void cc_algebra_free(struct CcAlgebra *alg);

/**
 * Dimension of the algebra.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CcStatus cc_algebra_dim(const struct CcAlgebra *alg, uintptr_t *out);

/**
 * Rank (number of exponents) of the algebra.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CcStatus cc_algebra_rank(const struct CcAlgebra *alg, uintptr_t *out);

/**
 * Copy the exponents into `buf` (capacity `cap`) and store their count
 * in `len`. With a too-small buffer nothing is copied, `len` is still
 * set, and `OUT_OF_RANGE` is returned.
 *
 * # Safety
 * `buf` must have room for `cap` entries; other pointers must be valid.
 */
enum CcStatus cc_algebra_exponents(const struct CcAlgebra *alg,
                                   uintptr_t *buf,
                                   uintptr_t cap,
                                   uintptr_t *len);

/**
 * Cohomology of `g[z]/z^n` for degrees `<= max_d` and depths `<= max_w`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CcStatus cc_truncated_table(const struct CcAlgebra *alg,
                                 uintptr_t n,
                                 uintptr_t max_d,
                                 uintptr_t max_w,
                                 struct CcTable **out);

/**
 * Relative cohomology of `g[z, s]` within the given bounds.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CcStatus cc_super_table(const struct CcAlgebra *alg,
                             uintptr_t max_d,
                             uintptr_t max_p,
                             uintptr_t max_w,
                             struct CcTable **out);

/**
 * Dimension of the block `(d, p, w)`; `OUT_OF_RANGE` outside the bounds.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CcStatus cc_table_get(const struct CcTable *table,
                           uintptr_t d,
                           uintptr_t p,
                           uintptr_t w,
                           uintptr_t *out);

/**
 * Release a table; null is ignored.
 *
 * # Safety
 * `table` must come from a `cc_*_table` call and not be freed twice.
 */
void cc_table_free(struct CcTable *table);

/**
 * Compare the cohomology of `g[z]/z^n` with the predicted exterior
 * algebra. Stores the number of differing blocks in `diffs` and returns
 * `VERIFICATION_FAILED` when it is nonzero.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CcStatus cc_truncated_verify(const struct CcAlgebra *alg,
                                  uintptr_t n,
                                  uintptr_t max_d,
                                  uintptr_t max_w,
                                  uintptr_t *diffs);

/**
 * Same as `cc_truncated_verify` for the relative super cohomology.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CcStatus cc_super_verify(const struct CcAlgebra *alg,
                              uintptr_t max_d,
                              uintptr_t max_p,
                              uintptr_t max_w,
                              uintptr_t *diffs);

/**
 * Message of the last failed call on this thread (empty after success).
 * The pointer stays valid until the next call on the same thread.
 */
const char *cc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURRENTCOH_H */
