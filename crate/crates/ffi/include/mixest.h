#ifndef MIXEST_H
#define MIXEST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum MixestStatus {
  MIXEST_STATUS_OK = 0,
  MIXEST_STATUS_INVALID_ARGUMENT = 1,
  MIXEST_STATUS_NUMERICAL_FAILURE = 2,
  MIXEST_STATUS_NULL_POINTER = 3,
  MIXEST_STATUS_BUFFER_TOO_SMALL = 4,
  MIXEST_STATUS_PANIC = 5,
} MixestStatus;

/**
 * Opaque triangulation.
 */
typedef struct MixestMesh MixestMesh;

/**
 * Opaque result of a solve: eigenpair, post-processed eigenvalue and
 * estimator on one mesh.
 */
typedef struct MixestSolution MixestSolution;

/**
 * One row of a convergence study. Quantities without a reference value are NaN.
 */
typedef struct MixestRow {
  size_t n_elements;
  size_t n_dofs;
  double lambda_h;
  double lambda_star;
  double err_lambda_star;
  double err_u2_l2;
  double err_grad_u2;
  double err_sigma_star;
  double eta;
  double eta_lambda;
  double hot;
  double eff;
  double eff_lambda;
  double superconv_proj_err;
} MixestRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mixest_last_error(void);

/**
 * Unit square split into `n`×`n` squares, each cut into two triangles.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum MixestStatus mixest_mesh_unit_square(size_t n, struct MixestMesh **out);

/**
 * L-shaped domain (−1,1)² minus the lower right quadrant, `n` squares per
 * unit length.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum MixestStatus mixest_mesh_lshape(size_t n, struct MixestMesh **out);

/**
 * Parses a mesh from its text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid handle pointer.
 */
enum MixestStatus mixest_mesh_from_text(const char *text, struct MixestMesh **out);

/**
 * One uniform red refinement.
 *
 * # Safety
 * `mesh` must be a live handle and `out` a valid handle pointer.
 */
enum MixestStatus mixest_mesh_refine_uniform(const struct MixestMesh *mesh,
                                             struct MixestMesh **out);

/**
 * Newest vertex bisection of the `n_marked` listed triangles plus closure.
 *
 * # Safety
 * `mesh` must be a live handle, `marked` must point to `n_marked` indices
 * (or be NULL when `n_marked` is 0) and `out` a valid handle pointer.
 */
enum MixestStatus mixest_mesh_refine_adaptive(const struct MixestMesh *mesh,
                                              const size_t *marked,
                                              size_t n_marked,
                                              struct MixestMesh **out);

/**
 * Number of triangles, or 0 for a NULL handle.
 *
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t mixest_mesh_num_triangles(const struct MixestMesh *mesh);

/**
 * Number of vertices, or 0 for a NULL handle.
 *
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t mixest_mesh_num_vertices(const struct MixestMesh *mesh);

/**
 * Releases a mesh; NULL is ignored.
 *
 * # Safety
 * `mesh` must be NULL or a handle not yet freed.
 */
void mixest_mesh_free(struct MixestMesh *mesh);

/**
 * Solves for the first eigenpair with BDM elements of order `k`, then
 * post-processes and evaluates the estimators. `tol` ≤ 0 selects the default
 * eigenvalue tolerance.
 *
 * # Safety
 * `mesh` must be a live handle and `out` a valid handle pointer.
 */
enum MixestStatus mixest_solve(const struct MixestMesh *mesh,
                               uint32_t k,
                               double tol,
                               struct MixestSolution **out);

/**
 * Scalar summary of a solution. Any output pointer may be NULL.
 *
 * # Safety
 * `sol` must be a live handle; non-NULL outputs must be writable.
 */
enum MixestStatus mixest_solution_summary(const struct MixestSolution *sol,
                                          double *lambda_h,
                                          double *lambda_star,
                                          double *eta,
                                          double *eta_lambda);

/**
 * Mesh size, dof count dim Σ_h + dim U_h and inverse iteration count.
 *
 * # Safety
 * `sol` must be a live handle; non-NULL outputs must be writable.
 */
enum MixestStatus mixest_solution_sizes(const struct MixestSolution *sol,
                                        size_t *n_elements,
                                        size_t *n_dofs,
                                        size_t *iterations);

/**
 * Per-element indicators η(K). Call with `buf` NULL and `cap` 0 to query the
 * length through `len`.
 *
 * # Safety
 * `sol` must be a live handle, `buf` must hold `cap` doubles, `len` may be NULL.
 */
enum MixestStatus mixest_solution_eta_k(const struct MixestSolution *sol,
                                        double *buf,
                                        size_t cap,
                                        size_t *len);

/**
 * Coefficients of u_h in the element-wise orthonormal basis, element by element.
 *
 * # Safety
 * As for [`mixest_solution_eta_k`].
 */
enum MixestStatus mixest_solution_u_h(const struct MixestSolution *sol,
                                      double *buf,
                                      size_t cap,
                                      size_t *len);

/**
 * Releases a solution; NULL is ignored.
 *
 * # Safety
 * `sol` must be NULL or a handle not yet freed.
 */
void mixest_solution_free(struct MixestSolution *sol);

/**
 * Uniform refinement study on the unit square starting from 32 triangles.
 * Writes `levels` rows into `rows`, which must hold at least `levels` entries.
 *
 * # Safety
 * `rows` must point to `cap` writable rows.
 */
enum MixestStatus mixest_square_study(uint32_t k,
                                      size_t levels,
                                      struct MixestRow *rows,
                                      size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXEST_H */
