#ifndef TOPOCF_H
#define TOPOCF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of entries written by `topocf_characteristics`.
 */
#define TOPOCF_NUM_CHARACTERISTICS 11

/**
 * Strategy mask bits for `topocf_sample`.
 */
#define TOPOCF_NODE_DROPOUT 1

#define TOPOCF_EDGE_DROPOUT 2

typedef enum TopocfStatus {
  TOPOCF_STATUS_OK = 0,
  TOPOCF_STATUS_NULL_POINTER = 1,
  TOPOCF_STATUS_INVALID_UTF8 = 2,
  TOPOCF_STATUS_PARSE = 3,
  TOPOCF_STATUS_INVALID_ARGUMENT = 4,
  TOPOCF_STATUS_DEGENERATE_SAMPLE = 5,
  TOPOCF_STATUS_RANK_DEFICIENT = 6,
  TOPOCF_STATUS_IO = 7,
  TOPOCF_STATUS_CONFIG = 8,
  /**
   * The run finished but at least one cell failed.
   */
  TOPOCF_STATUS_PARTIAL_FAILURE = 9,
  TOPOCF_STATUS_OTHER = 10,
  TOPOCF_STATUS_PANIC = 11,
} TopocfStatus;

typedef enum TopocfCommand {
  TOPOCF_COMMAND_SAMPLE = 0,
  TOPOCF_COMMAND_CHARACTERIZE = 1,
  TOPOCF_COMMAND_TRAIN = 2,
  TOPOCF_COMMAND_EXPLAIN = 3,
  TOPOCF_COMMAND_RQ2 = 4,
  TOPOCF_COMMAND_REPORT = 5,
  TOPOCF_COMMAND_RUN_ALL = 6,
} TopocfCommand;

/**
 * Opaque bipartite interaction graph.
 */
typedef struct TopocfGraph TopocfGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * Valid until the next call into the library on the same thread.
 */
const char *topocf_last_error(void);

const char *topocf_version(void);

/**
 * Label of characteristic `index` in reporting order, or NULL when out of
 * range. The string is static.
 */
const char *topocf_characteristic_label(size_t index);

/**
 * Parses a `user<TAB>item` interaction log.
 *
 * # Safety
 * `tsv` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TopocfStatus topocf_graph_from_tsv(const char *tsv, struct TopocfGraph **out);

/**
 * # Safety
 * `g` must be NULL or a handle from this library not yet freed.
 */
void topocf_graph_free(struct TopocfGraph *g);

/**
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t topocf_graph_num_users(const struct TopocfGraph *g);

/**
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t topocf_graph_num_items(const struct TopocfGraph *g);

/**
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t topocf_graph_num_edges(const struct TopocfGraph *g);

/**
 * The graph as a `user<TAB>item` log; free with `topocf_string_free`.
 * NULL when `g` is NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
char *topocf_graph_to_tsv(const struct TopocfGraph *g);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void topocf_string_free(char *s);

/**
 * Largest connected component as a new handle.
 *
 * # Safety
 * `g` must be a live handle and `out` a writable pointer.
 */
enum TopocfStatus topocf_graph_largest_component(const struct TopocfGraph *g,
                                                 struct TopocfGraph **out);

/**
 * Writes the eleven characteristics in reporting order to `out`; an
 * undefined characteristic is written as NaN.
 *
 * # Safety
 * `g` must be a live handle and `out` must hold
 * `TOPOCF_NUM_CHARACTERISTICS` doubles.
 */
enum TopocfStatus topocf_characteristics(const struct TopocfGraph *g, double *out);

/**
 * Draws sample `sample_id` of the plan seeded by `master_seed`. The
 * strategy mask combines `TOPOCF_NODE_DROPOUT` and `TOPOCF_EDGE_DROPOUT`.
 * `out_mu` may be NULL.
 *
 * # Safety
 * `g` must be a live handle, `out` a writable pointer and `out_mu` NULL or
 * writable.
 */
enum TopocfStatus topocf_sample(const struct TopocfGraph *g,
                                uint64_t master_seed,
                                uint64_t sample_id,
                                double mu_min,
                                double mu_max,
                                uint32_t strategies,
                                struct TopocfGraph **out,
                                double *out_mu);

/**
 * Ordinary least squares of `y` on the `rows x cols` row-major matrix `x`
 * plus an intercept. Output arrays hold `cols + 1` values, intercept first;
 * aliased columns (only with `drop_aliased`) come back as NaN. Every output
 * pointer except `out_estimates` may be NULL.
 *
 * # Safety
 * `x` must hold `rows * cols` doubles, `y` `rows` doubles, and each non-NULL
 * output array `cols + 1` doubles.
 */
enum TopocfStatus topocf_fit_ols(const double *x,
                                 size_t rows,
                                 size_t cols,
                                 const double *y,
                                 bool standardize,
                                 bool drop_aliased,
                                 double *out_estimates,
                                 double *out_std_errors,
                                 double *out_p_values,
                                 double *out_r2,
                                 double *out_adj_r2);

/**
 * Runs the pipeline from flat `key = value` configuration text. Returns
 * `TOPOCF_STATUS_PARTIAL_FAILURE` when some cells failed; details are in
 * the output directory's ledger.
 *
 * # Safety
 * `config` must be a NUL-terminated string.
 */
enum TopocfStatus topocf_run(const char *config, enum TopocfCommand command, bool resume);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOCF_H */
