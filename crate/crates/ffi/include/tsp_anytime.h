#ifndef TSP_ANYTIME_H
#define TSP_ANYTIME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TspCrossover {
  TSP_CROSSOVER_NONE = 0,
  TSP_CROSSOVER_IPT = 1,
  TSP_CROSSOVER_EAX = 2,
} TspCrossover;

typedef enum TspMetric {
  TSP_METRIC_ROUNDED = 0,
  TSP_METRIC_EXACT = 1,
} TspMetric;

typedef enum TspSolver {
  /**
   * Iterated local search.
   */
  TSP_SOLVER_ILS = 0,
  /**
   * Edge-assembly genetic algorithm.
   */
  TSP_SOLVER_GA = 1,
} TspSolver;

/**
 * Result code of every fallible call.
 */
typedef enum TspStatus {
  TSP_STATUS_OK = 0,
  TSP_STATUS_NULL_POINTER = 1,
  TSP_STATUS_INVALID_INPUT = 2,
  TSP_STATUS_INVALID_TOUR = 3,
  TSP_STATUS_INVALID_CONFIG = 4,
  TSP_STATUS_SIZE_LIMIT = 5,
  TSP_STATUS_OUT_OF_RANGE = 6,
  TSP_STATUS_PARSE = 7,
  TSP_STATUS_IO = 8,
  TSP_STATUS_INTERNAL = 9,
  TSP_STATUS_PANIC = 10,
} TspStatus;

/**
 * Opaque instance handle.
 */
typedef struct TspInstance TspInstance;

/**
 * Opaque trajectory handle.
 */
typedef struct TspTrajectory TspTrajectory;

typedef struct TspSolveOptions {
  enum TspSolver solver;
  enum TspCrossover crossover;
  bool restart;
  uint64_t seed;
  uint64_t cutoff_ms;
  /**
   * Use the deterministic evaluation-count clock instead of wall time.
   */
  bool evals_clock;
} TspSolveOptions;

typedef struct TspEvent {
  uint64_t elapsed_ms;
  uint64_t evals;
  double length;
} TspEvent;

typedef struct TspWilcoxon {
  double statistic;
  double p_value;
  size_t n_effective;
  bool exact;
  bool degenerate;
} TspWilcoxon;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t tsp_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tsp_version(void);

/**
 * Builds an instance from `n` coordinate pairs.
 *
 * # Safety
 * `xs` and `ys` must point to `n` doubles; `out` must be writable.
 */
enum TspStatus tsp_instance_from_coords(const double *xs,
                                        const double *ys,
                                        size_t n,
                                        enum TspMetric metric,
                                        struct TspInstance **out);

/**
 * Reads a TSPLIB `EUC_2D` file.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum TspStatus tsp_instance_load_tsplib(const char *path, struct TspInstance **out);

/**
 * Releases an instance. Null is ignored.
 *
 * # Safety
 * `inst` must come from this library and not be used afterwards.
 */
void tsp_instance_free(struct TspInstance *inst);

/**
 * Number of cities, or 0 for null.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t tsp_instance_len(const struct TspInstance *inst);

/**
 * Length of the closed tour visiting `order`, which must be a permutation.
 *
 * # Safety
 * `inst` must be a live handle, `order` must point to `n` values and
 * `length` must be writable.
 */
enum TspStatus tsp_tour_length(const struct TspInstance *inst,
                               const size_t *order,
                               size_t n,
                               double *length);

/**
 * Optimal tour by dynamic programming (at most 16 cities). `order` receives
 * `tsp_instance_len(inst)` city indices.
 *
 * # Safety
 * `inst` must be a live handle; `order` must have room for every city;
 * `length` must be writable.
 */
enum TspStatus tsp_held_karp(const struct TspInstance *inst, size_t *order, double *length);

/**
 * Runs a solver and returns its incumbent trajectory.
 *
 * # Safety
 * `inst` and `opts` must be valid pointers; `out` must be writable.
 */
enum TspStatus tsp_solve(const struct TspInstance *inst,
                         const struct TspSolveOptions *opts,
                         struct TspTrajectory **out);

/**
 * Releases a trajectory. Null is ignored.
 *
 * # Safety
 * `traj` must come from this library and not be used afterwards.
 */
void tsp_trajectory_free(struct TspTrajectory *traj);

/**
 * Number of incumbent events, or 0 for null.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t tsp_trajectory_len(const struct TspTrajectory *traj);

/**
 * Copies event `index` into `out`.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum TspStatus tsp_trajectory_event(const struct TspTrajectory *traj,
                                    size_t index,
                                    struct TspEvent *out);

/**
 * First time the run was within `(1 + alpha) * reference`. `hit` is false
 * (and `elapsed_ms` untouched) when it never was.
 *
 * # Safety
 * `traj` must be a live handle; `hit` and `elapsed_ms` must be writable.
 */
enum TspStatus tsp_first_hitting_time(const struct TspTrajectory *traj,
                                      double alpha,
                                      double reference,
                                      bool *hit,
                                      uint64_t *elapsed_ms);

/**
 * Wilcoxon signed-rank test of `x` against `y` (paired, length `n`).
 *
 * # Safety
 * `x` and `y` must point to `n` doubles; `out` must be writable.
 */
enum TspStatus tsp_wilcoxon(const double *x,
                            const double *y,
                            size_t n,
                            bool two_sided,
                            struct TspWilcoxon *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSP_ANYTIME_H */
