#ifndef CONTACTNET_H
#define CONTACTNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Nonzero values mirror the command line exit codes where a
 * class exists.
 */
typedef enum CnStatus {
  CN_STATUS_OK = 0,
  CN_STATUS_USAGE = 2,
  CN_STATUS_INGESTION = 3,
  CN_STATUS_NUMERIC = 4,
  CN_STATUS_IO = 5,
  CN_STATUS_NULL_POINTER = 10,
  CN_STATUS_INVALID_UTF8 = 11,
  CN_STATUS_PANIC = 12,
} CnStatus;

/**
 * Cohort plus its nominations.
 */
typedef struct CnCohort CnCohort;

/**
 * One undirected layer network over a cohort's node set.
 */
typedef struct CnNetwork CnNetwork;

/**
 * Summary of a homophily permutation test.
 */
typedef struct CnPermutationResult {
  uint64_t observed;
  uint64_t eligible_edges;
  uint64_t n_sims;
  double null_mean;
  double null_sd;
  double z;
  /**
   * Two-sided normal-theory p-value.
   */
  double p_value;
  /**
   * Add-one upper-tail p-value.
   */
  double p_empirical;
} CnPermutationResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *cn_version(void);

/**
 * Copy of the calling thread's last error message, or NULL when the last
 * call succeeded. Release with `cn_string_free`.
 */
char *cn_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void cn_string_free(char *s);

/**
 * Read a cohort file and its nominations file (CSV or JSON by extension).
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
enum CnStatus cn_cohort_load(const char *cohort_path,
                             const char *nominations_path,
                             struct CnCohort **out);

/**
 * # Safety
 * `c` must be NULL or a handle from `cn_cohort_load`, freed once.
 */
void cn_cohort_free(struct CnCohort *c);

/**
 * Number of participants; 0 for NULL.
 *
 * # Safety
 * `c` must be NULL or a live cohort handle.
 */
size_t cn_cohort_len(const struct CnCohort *c);

/**
 * Build the network of `layer` (`overall`, `physical`, `school`, `sports`,
 * `home` or `other`).
 *
 * # Safety
 * `cohort` must be a live handle, `layer` a NUL-terminated string and `out` writable.
 */
enum CnStatus cn_network_build(const struct CnCohort *cohort,
                               const char *layer,
                               struct CnNetwork **out);

/**
 * # Safety
 * `n` must be NULL or a handle from `cn_network_build`, freed once.
 */
void cn_network_free(struct CnNetwork *n);

/**
 * # Safety
 * `n` must be NULL or a live network handle.
 */
size_t cn_network_node_count(const struct CnNetwork *n);

/**
 * # Safety
 * `n` must be NULL or a live network handle.
 */
size_t cn_network_edge_count(const struct CnNetwork *n);

/**
 * Percentage of edges with both endpoints observed on `attribute` that join equal values.
 *
 * # Safety
 * Handles must be live, `attribute` NUL-terminated and `out` writable.
 */
enum CnStatus cn_homophily_fraction(const struct CnCohort *cohort,
                                    const struct CnNetwork *network,
                                    const char *attribute,
                                    double *out);

/**
 * Same-attribute edge count against `n_sims` relabelled replicates.
 * `restrict` and `mode` may be NULL; `mode` is `marginal_shuffle` (default)
 * or `probability_draw`.
 *
 * # Safety
 * Handles must be live, strings NUL-terminated or NULL where allowed, `out` writable.
 */
enum CnStatus cn_permutation_test(const struct CnCohort *cohort,
                                  const struct CnNetwork *network,
                                  const char *attribute,
                                  const char *restrict,
                                  size_t n_sims,
                                  uint64_t seed,
                                  const char *mode,
                                  struct CnPermutationResult *out);

/**
 * Logistic regression by IRLS. `x` is row-major `n × p` and should contain
 * an intercept column if one is wanted; `y` holds 0/1 values. Writes `p`
 * coefficients and standard errors.
 *
 * # Safety
 * `y` must point to `n` doubles, `x` to `n * p`, and both outputs to `p` writable doubles.
 */
enum CnStatus cn_fit_logistic(const double *y,
                              const double *x,
                              size_t n,
                              size_t p,
                              double *coefficients,
                              double *std_errors);

/**
 * Two-sided Fisher exact p-value for the table `[[a, b], [c, d]]`.
 *
 * # Safety
 * `p_value` must be writable.
 */
enum CnStatus cn_fisher_exact(uint64_t a, uint64_t b, uint64_t c, uint64_t d, double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONTACTNET_H */
