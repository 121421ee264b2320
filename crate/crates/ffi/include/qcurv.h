#ifndef QCURV_H
#define QCURV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QcStatus {
  QC_STATUS_OK = 0,
  QC_STATUS_NULL_POINTER = 1,
  QC_STATUS_INVALID_UTF8 = 2,
  QC_STATUS_CONFIG = 3,
  QC_STATUS_CONTRACT = 4,
  QC_STATUS_DIMENSION_MISMATCH = 5,
  QC_STATUS_NUMERICAL = 6,
  QC_STATUS_INCOMPLETE_METRIC = 7,
  QC_STATUS_OUT_OF_RANGE = 8,
  QC_STATUS_IO = 9,
  QC_STATUS_PANIC = 10,
} QcStatus;

// Opaque potential field.
typedef struct QcField QcField;

// Scalar entries of the derivative stack.
typedef struct QcScalars {
  double u;
  double lap;
  double bilap;
} QcScalars;

// Pointwise curvature. `q4` and `h` are NaN when `n < 6`.
typedef struct QcCurvature {
  double scalar;
  double q2;
  double q4;
  double qtop;
  double b;
  double h;
} QcCurvature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *qc_last_error(void);

// Library version, static storage.
const char *qc_version(void);

// Builds a field from the text of a scenario file. Relative paths in the
// scenario are irrelevant here; only the density and quadrature are used.
//
// # Safety
// `toml_text` must be a NUL-terminated string; `out` a writable pointer.
enum QcStatus qc_field_from_scenario(const char *toml_text, struct QcField **out);

// Builds a field from a scenario file on disk.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a writable pointer.
enum QcStatus qc_field_from_file(const char *path, struct QcField **out);

// Builds a field in dimension `n` from the body of a `[density]` table
// (`alpha_target = ...` and `[[bumps]]` entries) with default quadrature.
//
// # Safety
// `density_toml` must be a NUL-terminated string; `out` a writable pointer.
enum QcStatus qc_field_from_density(uint32_t n, const char *density_toml, struct QcField **out);

// Releases a handle; null is ignored.
//
// # Safety
// `field` must come from a `qc_field_*` constructor and not be used again.
void qc_field_free(struct QcField *field);

// Dimension of the field, 0 for a null handle.
//
// # Safety
// `field` must be null or a live handle.
uintptr_t qc_field_dimension(const struct QcField *field);

// Total-curvature normalization alpha, NaN for a null handle.
//
// # Safety
// `field` must be null or a live handle.
double qc_field_alpha(const struct QcField *field);

// Potential `u(x)`.
//
// # Safety
// `x` must point to `n` doubles; `out` must be writable.
enum QcStatus qc_eval_u(const struct QcField *field, const double *x, uintptr_t n, double *out);

// Derivative stack at `x`. Array outputs are optional (null skips them):
// `grad` and `grad_lap` take `n` doubles, `hess` takes `n*n` (row-major).
//
// # Safety
// `x` must point to `n` doubles; non-null outputs must have the sizes above.
enum QcStatus qc_eval_stack(const struct QcField *field,
                            const double *x,
                            uintptr_t n,
                            struct QcScalars *scalars,
                            double *grad,
                            double *hess,
                            double *grad_lap);

// Curvature at `x`; `ric_eigs` (optional) takes `n` doubles, descending.
//
// # Safety
// `x` must point to `n` doubles; `ric_eigs` must be null or hold `n` doubles.
enum QcStatus qc_curvature(const struct QcField *field,
                           const double *x,
                           uintptr_t n,
                           struct QcCurvature *out,
                           double *ric_eigs);

// Isoperimetric ratio of the Euclidean ball of radius `r` (radial fields).
//
// # Safety
// `out` must be writable.
enum QcStatus qc_iso_ratio(const struct QcField *field, double r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCURV_H */
