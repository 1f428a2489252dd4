#ifndef PHASEKIT_H
#define PHASEKIT_H

#include <stdbool.h>
#include <stddef.h>

/**
 * Status codes. The nonzero values match the exit codes of the `phasekit`
 * command line where they overlap.
 */
typedef enum {
  PK_STATUS_OK = 0,
  /**
   * Malformed input: bad shape, non-finite entries, unparsable text, bad arguments.
   */
  PK_STATUS_INVALID_INPUT = 2,
  /**
   * A numerical routine did not converge or lost a certificate.
   */
  PK_STATUS_NUMERICAL = 3,
  /**
   * The input is outside the domain of the operation.
   */
  PK_STATUS_DOMAIN = 4,
  PK_STATUS_NULL_POINTER = 5,
  /**
   * Internal error; the library caught a panic.
   */
  PK_STATUS_INTERNAL = 6,
} PkStatus;

typedef enum {
  PK_SECTOR_KIND_SECTORIAL = 0,
  PK_SECTOR_KIND_QUASI_SECTORIAL = 1,
  PK_SECTOR_KIND_SEMI_SECTORIAL = 2,
  PK_SECTOR_KIND_NOT_SEMI_SECTORIAL = 3,
} PkSectorKind;

/**
 * Opaque weighted digraph.
 */
typedef struct PkGraph PkGraph;

/**
 * Opaque square complex matrix.
 */
typedef struct PkMatrix PkMatrix;

/**
 * Opaque phase list, sorted descending.
 */
typedef struct PkPhases PkPhases;

/**
 * Tolerances; pass NULL wherever a `const PkTolerances *` is accepted to use
 * the defaults.
 */
typedef struct {
  double eps_rank;
  double eps_psd;
  double eps_phase;
} PkTolerances;

typedef struct {
  PkSectorKind kind;
  size_t rank;
  bool rotated_hermitian;
  /**
   * Field angle in radians.
   */
  double field_angle;
} PkClassification;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *pk_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pk_version(void);

PkTolerances pk_tolerances_default(void);

/**
 * Creates an `n x n` matrix from row-major real and imaginary parts; `im`
 * may be NULL for a real matrix.
 *
 * # Safety
 * `re` (and `im` when non-null) must point to `n * n` doubles; `out` must be
 * a valid pointer.
 */
PkStatus pk_matrix_new(size_t n, const double *re, const double *im, PkMatrix **out_matrix);

/**
 * Reads a matrix file (JSON or CSV).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_matrix` a valid pointer.
 */
PkStatus pk_matrix_read(const char *path, PkMatrix **out_matrix);

/**
 * # Safety
 * `m` must be NULL or a handle from this library that has not been freed.
 */
void pk_matrix_free(PkMatrix *m);

/**
 * # Safety
 * `m` must be a live matrix handle.
 */
size_t pk_matrix_dim(const PkMatrix *m);

/**
 * # Safety
 * `m` must be a live matrix handle, `tol` NULL or valid, `result` valid.
 */
PkStatus pk_classify(const PkMatrix *m, const PkTolerances *tol, PkClassification *result);

/**
 * Phases by classification: exact for quasi-sectorial and rotated Hermitian
 * input, a flagged approximation otherwise.
 *
 * # Safety
 * `m` must be a live matrix handle, `tol` NULL or valid, `out_phases` valid.
 */
PkStatus pk_phases(const PkMatrix *m, const PkTolerances *tol, PkPhases **out_phases);

/**
 * Phases of a quasi-sectorial matrix; fails with `Domain` otherwise.
 *
 * # Safety
 * As for [`pk_phases`].
 */
PkStatus pk_phases_quasi(const PkMatrix *m, const PkTolerances *tol, PkPhases **out_phases);

/**
 * Phases of the pseudoinverse.
 *
 * # Safety
 * As for [`pk_phases`].
 */
PkStatus pk_pinv_phases(const PkMatrix *m, const PkTolerances *tol, PkPhases **out_phases);

/**
 * # Safety
 * `p` must be NULL or a live phase handle.
 */
void pk_phases_free(PkPhases *p);

/**
 * # Safety
 * `p` must be a live phase handle.
 */
size_t pk_phases_len(const PkPhases *p);

/**
 * Copies up to `cap` phases into `buf`; returns the total count.
 *
 * # Safety
 * `p` must be a live phase handle; `buf` must hold `cap` doubles.
 */
size_t pk_phases_copy(const PkPhases *p, double *buf, size_t cap);

/**
 * # Safety
 * `p` must be a live phase handle.
 */
double pk_phases_center(const PkPhases *p);

/**
 * # Safety
 * `p` must be a live phase handle.
 */
bool pk_phases_is_approximate(const PkPhases *p);

/**
 * Whether `I + AB` is nonsingular for every `B` in the cone `[alpha, beta]`.
 *
 * # Safety
 * `a` must be a live matrix handle, `tol` NULL or valid, `result` valid.
 */
PkStatus pk_small_phase_check(const PkMatrix *a,
                              double alpha,
                              double beta,
                              const PkTolerances *tol,
                              bool *result);

/**
 * Essential phase of a real matrix by bisection to accuracy `e`. With
 * `upper > 0` the bracket `[lower, upper]` is used; otherwise the bracket is
 * derived for irreducible M-matrices. When `d_out` is non-null it receives
 * the `n` entries of the certificate `d`.
 *
 * # Safety
 * `m` must be a live matrix handle, `tol` NULL or valid, `alpha_out` valid,
 * `d_out` NULL or able to hold `n` doubles.
 */
PkStatus pk_essential_phase(const PkMatrix *m,
                            double e,
                            double lower,
                            double upper,
                            const PkTolerances *tol,
                            double *alpha_out,
                            double *d_out);

/**
 * Parses a graph from `src dst weight` lines.
 *
 * # Safety
 * `text` must be NUL-terminated; `out_graph` valid.
 */
PkStatus pk_graph_parse(const char *text, PkGraph **out_graph);

/**
 * # Safety
 * `g` must be NULL or a live graph handle.
 */
void pk_graph_free(PkGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle.
 */
size_t pk_graph_node_count(const PkGraph *g);

/**
 * Essential phase of the Laplacian of a strongly connected graph.
 *
 * # Safety
 * `g` must be a live graph handle, `tol` NULL or valid, `result` valid.
 */
PkStatus pk_graph_essential_phase(const PkGraph *g, const PkTolerances *tol, double *result);

/**
 * # Safety
 * `g` must be a live graph handle, `tol` NULL or valid, `result` valid.
 */
PkStatus pk_graph_is_weight_balanced(const PkGraph *g, const PkTolerances *tol, bool *result);

/**
 * Laplacian of the graph as a matrix handle.
 *
 * # Safety
 * `g` must be a live graph handle; `out_matrix` valid.
 */
PkStatus pk_graph_laplacian(const PkGraph *g, PkMatrix **out_matrix);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASEKIT_H */
