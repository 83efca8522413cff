#ifndef NCSMS_H
#define NCSMS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum NcsmsFamilyKind {
  NCSMS_FAMILY_KIND_POSITIVE = 0,
  NCSMS_FAMILY_KIND_SELFADJOINT = 1,
  NCSMS_FAMILY_KIND_GENERAL = 2,
} NcsmsFamilyKind;

// Result codes.
typedef enum NcsmsStatus {
  NCSMS_STATUS_OK = 0,
  NCSMS_STATUS_NULL_POINTER = 1,
  NCSMS_STATUS_INVALID_ARGUMENT = 2,
  NCSMS_STATUS_INVALID_GRID = 3,
  NCSMS_STATUS_SHAPE_MISMATCH = 4,
  // Gamma pole or Bessel order out of range.
  NCSMS_STATUS_DOMAIN = 5,
  // Frequency support beyond the admissible band, or a lossy dilation.
  NCSMS_STATUS_ALIASING = 6,
  NCSMS_STATUS_NON_FINITE = 7,
  NCSMS_STATUS_SOLVER_FAILURE = 8,
  NCSMS_STATUS_INFEASIBLE_FAMILY = 9,
  NCSMS_STATUS_IO = 10,
  NCSMS_STATUS_BUFFER_TOO_SMALL = 11,
  NCSMS_STATUS_PANIC = 12,
} NcsmsStatus;

// Family under construction: members are copied in by
// [`ncsms_family_push`].
typedef struct NcsmsFamily NcsmsFamily;

// Matrix-valued field on a grid.
typedef struct NcsmsField NcsmsField;

// Periodic grid.
typedef struct NcsmsGrid NcsmsGrid;

// Library version as a static NUL-terminated string.
const char *ncsms_version(void);

// Length in bytes of the last error message of this thread, without the NUL.
uintptr_t ncsms_last_error_length(void);

// Copies the last error message of this thread into `buf` with a NUL
// terminator. Needs `len > ncsms_last_error_length()`.
//
// # Safety
// `buf` must point to `len` writable bytes.
enum NcsmsStatus ncsms_last_error_message(char *buf, uintptr_t len);

// Grid of `size^n` points on the box `[-length/2, length/2)^n`.
//
// # Safety
// `out` must be a valid pointer.
enum NcsmsStatus ncsms_grid_new(uintptr_t n, uintptr_t size, double length, struct NcsmsGrid **out);

// # Safety
// `grid` must come from `ncsms_grid_new` (or be null) and not be used after.
void ncsms_grid_free(struct NcsmsGrid *grid);

// Number of lattice sites, 0 for a null grid.
//
// # Safety
// `grid` must be a live handle or null.
uintptr_t ncsms_grid_num_sites(const struct NcsmsGrid *grid);

// Field from `len = 2 * sites * d * d` interleaved doubles.
//
// # Safety
// `values` must point to `len` readable doubles; `grid` and `out` must be valid.
enum NcsmsStatus ncsms_field_new(const struct NcsmsGrid *grid,
                                 uintptr_t d,
                                 const double *values,
                                 uintptr_t len,
                                 struct NcsmsField **out);

// # Safety
// `field` must come from this library (or be null) and not be used after.
void ncsms_field_free(struct NcsmsField *field);

// Number of doubles held by the field, 0 for a null field.
//
// # Safety
// `field` must be a live handle or null.
uintptr_t ncsms_field_value_count(const struct NcsmsField *field);

// Matrix dimension `d`, 0 for a null field.
//
// # Safety
// `field` must be a live handle or null.
uintptr_t ncsms_field_matrix_dim(const struct NcsmsField *field);

// Copies the interleaved values into `out`.
//
// # Safety
// `out` must point to `len` writable doubles.
enum NcsmsStatus ncsms_field_copy_values(const struct NcsmsField *field,
                                         double *out,
                                         uintptr_t len);

// Reads a spatial `.mfld` file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum NcsmsStatus ncsms_field_read(const char *path, struct NcsmsField **out);

// Writes a spatial `.mfld` file.
//
// # Safety
// `field` must be live and `path` a NUL-terminated string.
enum NcsmsStatus ncsms_field_write(const struct NcsmsField *field, const char *path);

// `M_t^alpha f`.
//
// # Safety
// `field` must be live and `out` valid.
enum NcsmsStatus ncsms_spherical_mean(const struct NcsmsField *field,
                                      double alpha,
                                      double t,
                                      struct NcsmsField **out);

// `M_{j,t}^alpha f`.
//
// # Safety
// `field` must be live and `out` valid.
enum NcsmsStatus ncsms_dyadic_piece(const struct NcsmsField *field,
                                    double alpha,
                                    uint32_t j,
                                    double t,
                                    struct NcsmsField **out);

// Empty family of the given kind.
//
// # Safety
// `out` must be a valid pointer.
enum NcsmsStatus ncsms_family_new(enum NcsmsFamilyKind kind, struct NcsmsFamily **out);

// Appends a copy of `field` as the member at parameter `t`.
//
// # Safety
// `family` and `field` must be live handles.
enum NcsmsStatus ncsms_family_push(struct NcsmsFamily *family,
                                   double t,
                                   const struct NcsmsField *field);

// # Safety
// `family` must come from `ncsms_family_new` (or be null) and not be used after.
void ncsms_family_free(struct NcsmsFamily *family);

// Maximal norm of the family at exponent `p` (pass `INFINITY` for
// `p = inf`). Positive and self-adjoint families are solved exactly and may
// return their dominating field through `dominator`; general families get
// the upper bound and leave `dominator` untouched. `dominator` may be null.
//
// # Safety
// `family` must be live; `value` valid; `dominator` valid or null.
enum NcsmsStatus ncsms_maximal_norm(const struct NcsmsFamily *family,
                                    double p,
                                    double *value,
                                    struct NcsmsField **dominator);

// `J_nu(r)` for `nu > -1/2`, `r >= 0`.
//
// # Safety
// `out` must be a valid pointer.
enum NcsmsStatus ncsms_bessel_j(double nu, double r, double *out);

// Radial multiplier `m_hat_alpha(rho)` in dimension `n`.
//
// # Safety
// `out` must be a valid pointer.
enum NcsmsStatus ncsms_m_hat(double alpha, uintptr_t n, double rho, double *out);

// Smallest admissible `alpha` for dimension `n` and exponent `p`.
//
// # Safety
// `out` must be a valid pointer.
enum NcsmsStatus ncsms_alpha_threshold(uintptr_t n, double p, double *out);

#endif  /* NCSMS_H */
