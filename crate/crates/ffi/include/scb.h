#ifndef SCB_H
#define SCB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScbStatus {
  SCB_STATUS_OK = 0,
  SCB_STATUS_NULL_POINTER = 1,
  SCB_STATUS_INVALID_INPUT = 2,
  SCB_STATUS_NUMERICAL = 3,
  SCB_STATUS_IO = 4,
  SCB_STATUS_ENVIRONMENT = 5,
  SCB_STATUS_PANIC = 6,
} ScbStatus;

/**
 * Bandit learner families exposed over the ABI.
 */
typedef enum ScbAlgorithm {
  SCB_ALGORITHM_SCB = 0,
  SCB_ALGORITHM_SCB_IX = 1,
} ScbAlgorithm;

/**
 * Opaque scale-free bandit learner.
 */
typedef struct ScbBandit ScbBandit;

/**
 * Opaque layered MDP.
 */
typedef struct ScbMdp ScbMdp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len` bytes, into `buf`. Returns the length the full
 * message needs including the terminator; `buf` may be null to query it.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t scb_last_error_message(char *buf, size_t len);

/**
 * Tsallis-1/2 FTRL step over the simplex: writes the minimizer for
 * cumulative `losses` and rate `eta` (`INFINITY` for an unbounded rate)
 * into `out`, which has room for `n` values.
 *
 * # Safety
 * `losses` and `out` must be valid for `n` doubles.
 */
enum ScbStatus scb_solve_tsallis(const double *losses, size_t n, double eta, double *out);

/**
 * Shannon (softmax) FTRL step; same contract as [`scb_solve_tsallis`].
 *
 * # Safety
 * `losses` and `out` must be valid for `n` doubles.
 */
enum ScbStatus scb_solve_shannon(const double *losses, size_t n, double eta, double *out);

/**
 * Creates a learner over `num_arms` arms.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum ScbStatus scb_bandit_new(enum ScbAlgorithm algorithm, size_t num_arms, struct ScbBandit **out);

/**
 * Releases a learner; null is ignored.
 *
 * # Safety
 * `bandit` must come from [`scb_bandit_new`] and not be used afterwards.
 */
void scb_bandit_free(struct ScbBandit *bandit);

/**
 * Writes the current sampling distribution into `probs` (`len` must be
 * the number of arms).
 *
 * # Safety
 * `bandit` must be a live handle; `probs` valid for `len` doubles.
 */
enum ScbStatus scb_bandit_distribution(struct ScbBandit *bandit, double *probs, size_t len);

/**
 * Picks an arm from the current distribution by inverse CDF at `u`
 * in `[0, 1)`.
 *
 * # Safety
 * `bandit` must be a live handle; `arm` valid for writing.
 */
enum ScbStatus scb_bandit_sample(struct ScbBandit *bandit, double u, size_t *arm);

/**
 * Feeds back the loss of the arm played this round.
 *
 * # Safety
 * `bandit` must be a live handle.
 */
enum ScbStatus scb_bandit_observe(struct ScbBandit *bandit, size_t arm, double loss);

/**
 * Current clipping threshold.
 *
 * # Safety
 * `bandit` must be a live handle; `threshold` valid for writing.
 */
enum ScbStatus scb_bandit_threshold(const struct ScbBandit *bandit, double *threshold);

/**
 * Reads an MDP in the text format from `path` (UTF-8, NUL-terminated).
 *
 * # Safety
 * `path` must be a valid C string; `out` valid for writing one pointer.
 */
enum ScbStatus scb_mdp_load(const char *path, struct ScbMdp **out);

/**
 * Releases an MDP; null is ignored.
 *
 * # Safety
 * `mdp` must come from [`scb_mdp_load`] and not be used afterwards.
 */
void scb_mdp_free(struct ScbMdp *mdp);

/**
 * Number of decision states over all layers.
 *
 * # Safety
 * `mdp` must be a live handle; `out` valid for writing.
 */
enum ScbStatus scb_mdp_num_states(const struct ScbMdp *mdp, size_t *out);

/**
 * Number of actions per state.
 *
 * # Safety
 * `mdp` must be a live handle; `out` valid for writing.
 */
enum ScbStatus scb_mdp_num_actions(const struct ScbMdp *mdp, size_t *out);

/**
 * Best deterministic policy for a state-action loss table laid out as
 * `losses[s * A + a]`. Writes one action per state into `actions` and the
 * policy's expected loss into `value`.
 *
 * # Safety
 * `mdp` must be a live handle, `losses` valid for `losses_len` doubles,
 * `actions` for `actions_len` values and `value` for writing.
 */
enum ScbStatus scb_mdp_best_in_hindsight(const struct ScbMdp *mdp,
                                         const double *losses,
                                         size_t losses_len,
                                         size_t *actions,
                                         size_t actions_len,
                                         double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCB_H */
