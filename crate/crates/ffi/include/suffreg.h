#ifndef SUFFREG_H
#define SUFFREG_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  SUFFREG_STATUS_OK = 0,
  SUFFREG_STATUS_NULL_POINTER = 1,
  SUFFREG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input data violates an invariant (shape, weights, missing values).
   */
  SUFFREG_STATUS_INVALID_DATA = 3,
  /**
   * Tables or files do not have compatible columns.
   */
  SUFFREG_STATUS_SCHEMA_MISMATCH = 4,
  /**
   * The requested estimator needs information the input does not carry.
   */
  SUFFREG_STATUS_UNSUPPORTED = 5,
  SUFFREG_STATUS_RANK_DEFICIENT = 6,
  SUFFREG_STATUS_DID_NOT_CONVERGE = 7,
  SUFFREG_STATUS_IO = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  SUFFREG_STATUS_PANIC = 9,
} SuffregStatus;

typedef enum {
  SUFFREG_WEIGHT_KIND_FREQUENCY = 0,
  SUFFREG_WEIGHT_KIND_ANALYTIC = 1,
} SuffregWeightKind;

/**
 * Covariance structures available on a sufficient-statistics table.
 */
typedef enum {
  SUFFREG_COVARIANCE_HOMOSKEDASTIC = 0,
  SUFFREG_COVARIANCE_HETEROSKEDASTIC = 1,
  /**
   * Cluster-robust; the table must be keyed by cluster.
   */
  SUFFREG_COVARIANCE_CLUSTER_WITHIN = 2,
} SuffregCovariance;

/**
 * A fitted model.
 */
typedef struct SuffregFit SuffregFit;

/**
 * Uncompressed rows.
 */
typedef struct SuffregObservations SuffregObservations;

/**
 * A sufficient-statistics table.
 */
typedef struct SuffregTable SuffregTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or null. The
 * string stays valid until the next call into this library on the same
 * thread.
 */
const char *suffreg_last_error_message(void);

/**
 * Creates observations from row-major `features` (n×p) and `outcomes`
 * (n×o). Name arrays may be null, giving `x0..` and `y0..`.
 *
 * # Safety
 * Non-null pointers must reference arrays of the stated lengths; `out` must
 * be writable.
 */
SuffregStatus suffreg_observations_new(const double *features,
                                       size_t n,
                                       size_t p,
                                       const char *const *feature_names,
                                       const double *outcomes,
                                       size_t o,
                                       const char *const *outcome_names,
                                       SuffregObservations **out);

/**
 * Attaches one weight per row.
 *
 * # Safety
 * `obs` must be a live handle and `weights` must hold `n` values.
 */
SuffregStatus suffreg_observations_set_weights(SuffregObservations *obs,
                                               const double *weights,
                                               size_t n,
                                               SuffregWeightKind kind);

/**
 * Attaches one integer cluster identifier per row.
 *
 * # Safety
 * `obs` must be a live handle and `ids` must hold `n` values.
 */
SuffregStatus suffreg_observations_set_clusters(SuffregObservations *obs,
                                                const uint64_t *ids,
                                                size_t n);

/**
 * Prepends a constant `intercept` feature.
 *
 * # Safety
 * `obs` must be a live handle.
 */
SuffregStatus suffreg_observations_add_intercept(SuffregObservations *obs);

/**
 * # Safety
 * `obs` must be null or a handle not yet freed.
 */
void suffreg_observations_free(SuffregObservations *obs);

/**
 * Compresses rows into sufficient statistics, keyed additionally by the
 * cluster label when `by_cluster` is true.
 *
 * # Safety
 * `obs` must be a live handle; `out` must be writable.
 */
SuffregStatus suffreg_compress(const SuffregObservations *obs, bool by_cluster, SuffregTable **out);

/**
 * Sums two tables compressed from disjoint rows.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
SuffregStatus suffreg_table_merge(const SuffregTable *a, const SuffregTable *b, SuffregTable **out);

/**
 * Number of compressed rows G, or 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t suffreg_table_num_groups(const SuffregTable *table);

/**
 * Number of source rows Σñ, or 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
uint64_t suffreg_table_num_observations(const SuffregTable *table);

/**
 * # Safety
 * `table` must be a live handle and `path` a NUL-terminated string.
 */
SuffregStatus suffreg_table_write_csv(const SuffregTable *table, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
SuffregStatus suffreg_table_read_csv(const char *path, SuffregTable **out);

/**
 * Prepends a constant `intercept` feature to a table.
 *
 * # Safety
 * `table` must be a live handle.
 */
SuffregStatus suffreg_table_add_intercept(SuffregTable *table);

/**
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void suffreg_table_free(SuffregTable *table);

/**
 * Fits least squares with the requested covariance.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
SuffregStatus suffreg_fit(const SuffregTable *table,
                          SuffregCovariance covariance,
                          SuffregFit **out);

/**
 * Fits a logistic regression of the single 0/1 outcome.
 *
 * # Safety
 * `obs` must be a live handle; `out` must be writable.
 */
SuffregStatus suffreg_fit_logistic(const SuffregObservations *obs,
                                   double tol,
                                   size_t max_iter,
                                   SuffregFit **out);

/**
 * Number of coefficients per outcome, or 0 for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t suffreg_fit_num_coefficients(const SuffregFit *fit);

/**
 * Copies the coefficients of `outcome` into `buf`, which holds `len` values.
 *
 * # Safety
 * `fit` must be a live handle and `buf` writable for `len` values.
 */
SuffregStatus suffreg_fit_coefficients(const SuffregFit *fit,
                                       size_t outcome,
                                       double *buf,
                                       size_t len);

/**
 * Copies the row-major p×p covariance of `outcome` into `buf`.
 *
 * # Safety
 * `fit` must be a live handle and `buf` writable for `len` values.
 */
SuffregStatus suffreg_fit_covariance(const SuffregFit *fit,
                                     size_t outcome,
                                     double *buf,
                                     size_t len);

/**
 * The fit as a JSON document. Release it with [`suffreg_string_free`].
 * Returns null for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
char *suffreg_fit_to_json(const SuffregFit *fit);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void suffreg_string_free(char *s);

/**
 * # Safety
 * `fit` must be null or a handle not yet freed.
 */
void suffreg_fit_free(SuffregFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUFFREG_H */
