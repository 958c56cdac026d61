#ifndef QWSEARCH_H
#define QWSEARCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `QW_STATUS_OK` is zero; every other value names a failure class.
 */
typedef enum QwStatus {
  QW_STATUS_OK = 0,
  QW_STATUS_NULL_POINTER = 1,
  QW_STATUS_INVALID_ARGUMENT = 2,
  QW_STATUS_INVALID_MATRIX = 3,
  QW_STATUS_INVALID_DISTRIBUTION = 4,
  QW_STATUS_NON_ERGODIC = 5,
  QW_STATUS_NOT_REVERSIBLE = 6,
  QW_STATUS_INVALID_MARKED_SET = 7,
  QW_STATUS_OUT_OF_RANGE = 8,
  QW_STATUS_TOO_LARGE = 9,
  QW_STATUS_SOLVER_FAILURE = 10,
  QW_STATUS_LIMIT_DISAGREEMENT = 11,
  QW_STATUS_PARSE = 12,
  QW_STATUS_NO_MARKED_SET = 13,
  QW_STATUS_INTERNAL = 14,
  QW_STATUS_PANIC = 15,
} QwStatus;

/**
 * Opaque chain handle, optionally carrying a marked set.
 */
typedef struct QwChain QwChain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Walk on the `side x side` torus with vertex 0 marked.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QwStatus qw_chain_torus(uintptr_t side, struct QwChain **out);

/**
 * Segmented star with `k` paths of length `k^2`; one whole path is marked.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QwStatus qw_chain_star(uintptr_t k, struct QwChain **out);

/**
 * Chain from the text serialization (NUL-terminated UTF-8). The marked set
 * is taken from the text when present.
 *
 * # Safety
 * `text` must point to a NUL-terminated string and `out` to writable storage.
 */
enum QwStatus qw_chain_from_text(const char *text, struct QwChain **out);

/**
 * Chain from compressed sparse rows: row `x` holds entries
 * `offsets[x]..offsets[x + 1]` of `cols` and `probs`. The stationary
 * distribution is computed.
 *
 * # Safety
 * `offsets` must hold `n + 1` entries; `cols` and `probs` must hold
 * `offsets[n]` entries each; `out` must point to writable storage.
 */
enum QwStatus qw_chain_from_rows(uintptr_t n,
                                 const uintptr_t *offsets,
                                 const uintptr_t *cols,
                                 const double *probs,
                                 struct QwChain **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `chain` must be null or a handle from a `qw_chain_*` constructor that has
 * not been freed.
 */
void qw_chain_free(struct QwChain *chain);

/**
 * Number of vertices.
 *
 * # Safety
 * `chain` must be a live handle and `n` writable.
 */
enum QwStatus qw_chain_size(const struct QwChain *chain, uintptr_t *n);

/**
 * Replaces the marked set.
 *
 * # Safety
 * `chain` must be a live handle and `vertices` must hold `len` entries.
 */
enum QwStatus qw_chain_set_marked(struct QwChain *chain, const uintptr_t *vertices, uintptr_t len);

/**
 * Copies the stationary distribution into `out`, which must hold `len >= n` values.
 *
 * # Safety
 * `chain` must be a live handle and `out` must hold `len` values.
 */
enum QwStatus qw_chain_stationary(const struct QwChain *chain, double *out, uintptr_t len);

/**
 * Hitting time of the marked set from the stationary law conditioned on
 * starting unmarked, by linear solve. `error_bound` may be null.
 *
 * # Safety
 * `chain` must be a live handle; `value` writable; `error_bound` null or writable.
 */
enum QwStatus qw_hitting_time(const struct QwChain *chain, double *value, double *error_bound);

/**
 * Monte Carlo hitting time over `samples` trajectories; `half_width` (95%)
 * may be null.
 *
 * # Safety
 * `chain` must be a live handle; `value` writable; `half_width` null or writable.
 */
enum QwStatus qw_hitting_time_monte_carlo(const struct QwChain *chain,
                                          uint64_t samples,
                                          uint64_t seed,
                                          double *value,
                                          double *half_width);

/**
 * Extended hitting time (dense; at most 5000 vertices).
 *
 * # Safety
 * `chain` must be a live handle and `value` writable.
 */
enum QwStatus qw_extended_hitting_time(const struct QwChain *chain, double *value);

/**
 * Success bound `q_t(s) = || Pi_M T_t(D(s)) sqrt(pi) ||^2`.
 *
 * # Safety
 * `chain` must be a live handle and `value` writable.
 */
enum QwStatus qw_success_bound(const struct QwChain *chain, double s, uintptr_t t, double *value);

/**
 * Fast-forwarding success `|| Pi_M D(s)^t sqrt(pi_U) ||^2`.
 *
 * # Safety
 * `chain` must be a live handle and `value` writable.
 */
enum QwStatus qw_fastforward_success(const struct QwChain *chain,
                                     double s,
                                     uintptr_t t,
                                     double *value);

/**
 * Probability that a sum of `t` geometric variables with success
 * probability `p` lands in `(floor(t/(2p)), floor(2t/p)]`.
 *
 * # Safety
 * `value` must be writable.
 */
enum QwStatus qw_geometric_sum_window(double p, uint64_t t, double *value);

/**
 * Description of the last failure on the calling thread, or an empty
 * string. The pointer stays valid until the next call into this library on
 * the same thread.
 */
const char *qw_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *qw_status_name(enum QwStatus status);

/**
 * Library version as a static string.
 */
const char *qw_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWSEARCH_H */
