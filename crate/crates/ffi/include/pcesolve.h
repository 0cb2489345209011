#ifndef PCESOLVE_H
#define PCESOLVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PceStatus {
  PCE_STATUS_OK = 0,
  PCE_STATUS_NULL_POINTER = 1,
  PCE_STATUS_INVALID_ARGUMENT = 2,
  PCE_STATUS_PARSE = 3,
  PCE_STATUS_TOO_LARGE = 4,
  PCE_STATUS_IO = 5,
  PCE_STATUS_BUFFER_TOO_SMALL = 6,
  PCE_STATUS_NOT_AVAILABLE = 7,
  PCE_STATUS_NON_FINITE = 8,
  PCE_STATUS_PANIC = 9,
} PceStatus;

typedef enum PceFormat {
  PCE_FORMAT_GSET = 0,
  PCE_FORMAT_WEIGHTED_LIST = 1,
} PceFormat;

typedef enum PceLossForm {
  PCE_LOSS_FORM_QUADRATIC = 0,
  PCE_LOSS_FORM_QUADRATIC_REG = 1,
  PCE_LOSS_FORM_TANH = 2,
  PCE_LOSS_FORM_TANH_REG = 3,
} PceLossForm;

typedef struct PceGraph PceGraph;

typedef struct PceSolveResult PceSolveResult;

/**
 * Solver settings. Zero `layers`, nonpositive `alpha` and a zero
 * `has_best_known` select the library defaults.
 */
typedef struct PceSolveOptions {
  size_t k;
  size_t layers;
  double alpha;
  double beta;
  enum PceLossForm loss;
  double learning_rate;
  size_t max_epochs;
  size_t stop_window;
  double stop_threshold;
  uint64_t seed;
  uint64_t shots;
  bool has_best_known;
  double best_known;
} PceSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *pce_last_error_message(void);

const char *pce_version(void);

/**
 * Parse a NUL-terminated instance text.
 *
 * # Safety
 * `text` must be a valid C string and `out` a writable pointer.
 */
enum PceStatus pce_graph_parse(const char *text, enum PceFormat format, struct PceGraph **out);

/**
 * Build a graph from 0-based edge arrays of length `num_edges`.
 *
 * # Safety
 * `us`, `vs` and `ws` must each point to `num_edges` readable elements.
 */
enum PceStatus pce_graph_from_edges(size_t num_vertices,
                                    const size_t *us,
                                    const size_t *vs,
                                    const double *ws,
                                    size_t num_edges,
                                    struct PceGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from this library not yet freed.
 */
void pce_graph_free(struct PceGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle.
 */
enum PceStatus pce_graph_num_vertices(const struct PceGraph *g, size_t *out);

/**
 * # Safety
 * `g` must be a live graph handle.
 */
enum PceStatus pce_graph_num_edges(const struct PceGraph *g, size_t *out);

/**
 * Cut value `Σ W(1 − x_i x_j)` of a ±1 assignment of length `len`.
 *
 * # Safety
 * `bits` must point to `len` readable bytes.
 */
enum PceStatus pce_cut_value(const struct PceGraph *g, const int8_t *bits, size_t len, double *out);

/**
 * Smallest `n` with `3·C(n, k) ≥ m`.
 */
size_t pce_min_qubits(size_t m, size_t k);

double pce_default_alpha(size_t n, size_t k);

/**
 * # Safety
 * `g` must be a live graph handle.
 */
enum PceStatus pce_sample_bound(double epsilon,
                                double delta,
                                const struct PceGraph *g,
                                double alpha,
                                uint64_t *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum PceStatus pce_solve_options_default(struct PceSolveOptions *out);

/**
 * Run the full pipeline.
 *
 * # Safety
 * `g` must be a live graph handle, `opts` readable and `out` writable.
 */
enum PceStatus pce_solve(const struct PceGraph *g,
                         const struct PceSolveOptions *opts,
                         struct PceSolveResult **out);

/**
 * # Safety
 * `r` must be null or a handle from this library not yet freed.
 */
void pce_result_free(struct PceSolveResult *r);

/**
 * # Safety
 * `r` must be a live result handle.
 */
enum PceStatus pce_result_cut(const struct PceSolveResult *r, double *out);

/**
 * Ratio against the supplied best-known cut; `NotAvailable` if none was given.
 *
 * # Safety
 * `r` must be a live result handle.
 */
enum PceStatus pce_result_ratio(const struct PceSolveResult *r, double *out);

/**
 * Ratio against the brute-force optimum; `NotAvailable` for large graphs.
 *
 * # Safety
 * `r` must be a live result handle.
 */
enum PceStatus pce_result_ratio_exact(const struct PceSolveResult *r, double *out);

/**
 * # Safety
 * `r` must be a live result handle.
 */
enum PceStatus pce_result_epochs(const struct PceSolveResult *r, size_t *out);

/**
 * Copy the ±1 assignment into `buf`; `BufferTooSmall` if `len` is under the vertex count.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum PceStatus pce_result_assignment(const struct PceSolveResult *r, int8_t *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCESOLVE_H */
