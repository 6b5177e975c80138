#ifndef DEADCORE_H
#define DEADCORE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcInit {
  DC_INIT_ZERO = 0,
  DC_INIT_SUBSOLUTION = 1,
  DC_INIT_SUPERSOLUTION = 2,
} DcInit;

typedef enum DcOperator {
  DC_OPERATOR_LAPLACIAN = 0,
  DC_OPERATOR_PUCCI_PLUS = 1,
  DC_OPERATOR_PUCCI_MINUS = 2,
  /**
   * Uses `p`; `gamma` must equal `p - 2`.
   */
  DC_OPERATOR_P_LAPLACIAN = 3,
} DcOperator;

typedef enum DcStatus {
  DC_STATUS_OK = 0,
  DC_STATUS_INVALID_ARGUMENT = 1,
  DC_STATUS_NULL_POINTER = 2,
  /**
   * The result is usable but the residual tolerance was not met.
   */
  DC_STATUS_NOT_CONVERGED = 3,
  DC_STATUS_CONSTRUCTION_FAILED = 4,
  DC_STATUS_DOMAIN_ERROR = 5,
  DC_STATUS_INTERNAL = 6,
} DcStatus;

typedef enum DcVerdict {
  DC_VERDICT_TRIVIAL = 0,
  DC_VERDICT_DEAD_CORE = 1,
  DC_VERDICT_POSITIVE_INTERIOR = 2,
  DC_VERDICT_POSITIVITY_CONE = 3,
} DcVerdict;

typedef enum DcWeight {
  /**
   * The closed-form dead-core example weight, meant for `(-pi/2, pi)`.
   */
  DC_WEIGHT_EXAMPLE = 0,
  /**
   * `sin(pi x)` with its negative part multiplied by `weight_param`.
   */
  DC_WEIGHT_SIN_SPLIT = 1,
  /**
   * The constant `weight_param`.
   */
  DC_WEIGHT_CONSTANT = 2,
} DcWeight;

/**
 * Opaque grid function handle, boundary nodes included.
 */
typedef struct DcField DcField;

/**
 * Opaque problem handle.
 */
typedef struct DcProblem DcProblem;

typedef struct DcProblemDesc {
  double lo;
  double hi;
  /**
   * Interior nodes.
   */
  size_t n;
  double gamma;
  double q;
  enum DcOperator op;
  /**
   * Ellipticity bounds, ignored by the Laplacian.
   */
  double lambda;
  double big_lambda;
  double p;
  enum DcWeight weight;
  double weight_param;
  /**
   * Multiplies the whole weight.
   */
  double weight_scale;
} DcProblemDesc;

typedef struct DcSolveOptions {
  /**
   * 0 selects the library default.
   */
  size_t max_steps;
  /**
   * Residual tolerance; 0 selects the library default.
   */
  double tolerance;
  enum DcInit init;
  /**
   * Ball for [`DcInit::Subsolution`].
   */
  double ball_lo;
  double ball_hi;
} DcSolveOptions;

typedef struct DcSolveReport {
  double residual_sup;
  size_t steps;
  bool converged;
  double sup_norm;
} DcSolveReport;

typedef struct DcClassification {
  enum DcVerdict verdict;
  double interior_min;
  double hopf_margin;
  size_t dead_core_nodes;
} DcClassification;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dc_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *dc_last_error_message(void);

/**
 * Validates `desc` and builds a problem on `[lo, hi]`.
 *
 * # Safety
 * `desc` must point to a valid descriptor and `out` to writable storage.
 */
enum DcStatus dc_problem_new_1d(const struct DcProblemDesc *desc, struct DcProblem **out);

/**
 * # Safety
 * `p` must be NULL or a handle from [`dc_problem_new_1d`] not yet freed.
 */
void dc_problem_free(struct DcProblem *p);

/**
 * Solves the problem. On `DC_STATUS_OK` or `DC_STATUS_NOT_CONVERGED` a field
 * is stored in `out` and, when `report` is non-NULL, the report is filled.
 *
 * # Safety
 * `p` must be a live problem handle, `opts` NULL or a valid pointer, and
 * `out` writable.
 */
enum DcStatus dc_solve(const struct DcProblem *p,
                       const struct DcSolveOptions *opts,
                       struct DcField **out,
                       struct DcSolveReport *report);

/**
 * Principal eigenpair of the operator in `desc` on `[lo, hi]`; `q` and the
 * weight are ignored. The eigenfunction is normalised to sup-norm 1.
 *
 * # Safety
 * `desc` must be valid; `lambda` and `phi` writable.
 */
enum DcStatus dc_eigen_1d(const struct DcProblemDesc *desc, double *lambda, struct DcField **phi);

/**
 * # Safety
 * `f` must be a live field handle and `out` writable.
 */
enum DcStatus dc_classify(const struct DcField *f, struct DcClassification *out);

/**
 * Number of nodes, boundary included; 0 for NULL.
 *
 * # Safety
 * `f` must be NULL or a live field handle.
 */
size_t dc_field_len(const struct DcField *f);

/**
 * Copies up to `cap` node values into `buf` and stores the full length in
 * `len`. Returns `DC_STATUS_INVALID_ARGUMENT` when `cap` is too small.
 *
 * # Safety
 * `buf` must have room for `cap` doubles; `f` must be live.
 */
enum DcStatus dc_field_values(const struct DcField *f, double *buf, size_t cap, size_t *len);

/**
 * Node coordinates, same layout as [`dc_field_values`].
 *
 * # Safety
 * As for [`dc_field_values`].
 */
enum DcStatus dc_field_coords(const struct DcField *f, double *buf, size_t cap, size_t *len);

/**
 * # Safety
 * `f` must be NULL or a field handle not yet freed.
 */
void dc_field_free(struct DcField *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEADCORE_H */
