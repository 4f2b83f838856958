#ifndef IALIGN_H
#define IALIGN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum IalignStatus {
  IALIGN_STATUS_OK = 0,
  IALIGN_STATUS_NULL_POINTER = 1,
  IALIGN_STATUS_INVALID_CONFIG = 2,
  IALIGN_STATUS_SHAPE_MISMATCH = 3,
  IALIGN_STATUS_NUMERICAL = 4,
  IALIGN_STATUS_INVALID_INPUT = 5,
  IALIGN_STATUS_BUFFER_TOO_SMALL = 6,
  IALIGN_STATUS_INDEX_OUT_OF_RANGE = 7,
  IALIGN_STATUS_PANIC = 8,
} IalignStatus;

typedef struct IalignChannels IalignChannels;

typedef struct IalignNetwork IalignNetwork;

typedef struct IalignSolution IalignSolution;

/**
 * Solver settings; obtain defaults from [`ialign_solver_options_default`].
 */
typedef struct IalignSolverOptions {
  uint64_t max_iterations;
  double wli_stop;
  double rel_stop;
  uint64_t restarts;
  uint64_t extra_restarts;
  uint64_t seed;
} IalignSolverOptions;

/**
 * Summary of an iterative run.
 */
typedef struct IalignRunInfo {
  uint64_t iterations;
  int converged;
  double final_value;
} IalignRunInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ialign_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ialign_version(void);

/**
 * `users` identical links with `tx` x `rx` antennas, `streams` streams and
 * power `power` per user.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum IalignStatus ialign_network_new(size_t users,
                                     size_t tx,
                                     size_t rx,
                                     size_t streams,
                                     double power,
                                     struct IalignNetwork **out);

/**
 * Network from its JSON document (fields `users`, `tx_antennas`,
 * `rx_antennas`, `streams`, `power`, optional `reverse_power`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum IalignStatus ialign_network_from_json(const char *json, struct IalignNetwork **out);

/**
 * Number of users, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t ialign_network_users(const struct IalignNetwork *net);

/**
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void ialign_network_free(struct IalignNetwork *net);

/**
 * Draws i.i.d. CN(0,1) channels for `net` from `seed`.
 *
 * # Safety
 * `net` must be a live handle; `out` must be writable.
 */
enum IalignStatus ialign_channels_generate(const struct IalignNetwork *net,
                                           uint64_t seed,
                                           struct IalignChannels **out);

/**
 * # Safety
 * `ch` must be null or a handle not yet freed.
 */
void ialign_channels_free(struct IalignChannels *ch);

struct IalignSolverOptions ialign_solver_options_default(void);

/**
 * Iterative alignment by alternating leakage minimization. `opts` may be
 * null for defaults; `info` may be null. `info.final_value` is the WLI.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum IalignStatus ialign_run_min_leakage(const struct IalignChannels *ch,
                                         const struct IalignNetwork *net,
                                         const struct IalignSolverOptions *opts,
                                         struct IalignSolution **out,
                                         struct IalignRunInfo *info);

/**
 * Iterative per-stream Max-SINR. `info.final_value` is the sum rate.
 *
 * # Safety
 * As [`ialign_run_min_leakage`].
 */
enum IalignStatus ialign_run_max_sinr(const struct IalignChannels *ch,
                                      const struct IalignNetwork *net,
                                      const struct IalignSolverOptions *opts,
                                      struct IalignSolution **out,
                                      struct IalignRunInfo *info);

/**
 * Sum rate in bits per channel use.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum IalignStatus ialign_sum_rate(const struct IalignChannels *ch,
                                  const struct IalignSolution *sol,
                                  const struct IalignNetwork *net,
                                  double *out);

/**
 * Weighted leakage of interference of a solution.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum IalignStatus ialign_weighted_leakage(const struct IalignChannels *ch,
                                          const struct IalignSolution *sol,
                                          const struct IalignNetwork *net,
                                          double *out);

/**
 * Copies precoder `V[user]` (`rows` x `cols`, row-major, interleaved
 * re/im) into `buf` of `len` doubles. With `buf` null only the shape is
 * written, so callers can size the buffer first.
 *
 * # Safety
 * `sol` must be live; `buf` must hold `len` doubles; `rows`/`cols` may be null.
 */
enum IalignStatus ialign_solution_precoder(const struct IalignSolution *sol,
                                           size_t user,
                                           double *buf,
                                           size_t len,
                                           size_t *rows,
                                           size_t *cols);

/**
 * Copies receive filter `U[user]`; layout as [`ialign_solution_precoder`].
 *
 * # Safety
 * As [`ialign_solution_precoder`].
 */
enum IalignStatus ialign_solution_filter(const struct IalignSolution *sol,
                                         size_t user,
                                         double *buf,
                                         size_t len,
                                         size_t *rows,
                                         size_t *cols);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void ialign_solution_free(struct IalignSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IALIGN_H */
