#ifndef HARDY_SPECTRAL_H
#define HARDY_SPECTRAL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `HS_OK` is zero.
 */
typedef enum HsStatus {
  HS_OK = 0,
  HS_NULL_POINTER = 1,
  HS_INVALID_UTF8 = 2,
  HS_CONFIG = 3,
  HS_INVALID_PARAMETER = 4,
  HS_DIMENSION_MISMATCH = 5,
  HS_NOT_IN_DOMAIN = 6,
  HS_EMPTY_INTERIOR = 7,
  HS_BUDGET_EXCEEDED = 8,
  HS_NO_CONVERGENCE = 9,
  HS_INSUFFICIENT_SPECTRUM = 10,
  HS_BUFFER_TOO_SMALL = 11,
  HS_PANIC = 12,
  HS_OTHER = 13,
} HsStatus;

/**
 * Domain handle.
 */
typedef struct HsDomain HsDomain;

/**
 * Grid of `δ` values.
 */
typedef struct HsField HsField;

/**
 * Computed eigenvalues.
 */
typedef struct HsSpectrum HsSpectrum;

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
size_t hs_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hs_version(void);

/**
 * Parses a JSON domain description.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HsStatus hs_domain_from_json(const char *json, struct HsDomain **out);

/**
 * # Safety
 * `dom` must be null or a handle from `hs_domain_from_json` not yet freed.
 */
void hs_domain_free(struct HsDomain *dom);

/**
 * Spatial dimension, 0 for a null handle.
 *
 * # Safety
 * `dom` must be null or a live handle.
 */
size_t hs_domain_dim(const struct HsDomain *dom);

/**
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum HsStatus hs_domain_contains(const struct HsDomain *dom,
                                 const double *x,
                                 size_t len,
                                 bool *out);

/**
 * Mean distance `δ(x)`. `nodes == 0` selects the default sphere rule.
 *
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum HsStatus hs_delta_at(const struct HsDomain *dom,
                          const double *x,
                          size_t len,
                          size_t nodes,
                          double *out);

/**
 * Monte Carlo `|Ω ∩ B_ρ(x)| / |B_ρ(x)|` and its standard error.
 *
 * # Safety
 * `x` must point to `len` doubles; `value` and `stderr` must be writable.
 */
enum HsStatus hs_ball_overlap(const struct HsDomain *dom,
                              const double *x,
                              size_t len,
                              double rho,
                              size_t samples,
                              uint64_t seed,
                              double *value,
                              double *stderr);

/**
 * Lower bound `d/(4ρ²)(1 − sup overlap)` for `λ₁`; `pass` receives 1 when
 * the bound holds against `lambda1`.
 *
 * # Safety
 * `bound` and `pass` must be writable.
 */
enum HsStatus hs_lieb_bound(const struct HsDomain *dom,
                            double rho,
                            double lambda1,
                            size_t samples,
                            uint64_t seed,
                            double *bound,
                            int32_t *pass);

/**
 * `δ` on the grid of spacing `h` over the bounding box.
 *
 * # Safety
 * `dom` must be a live handle; `out` must be writable.
 */
enum HsStatus hs_field_new(const struct HsDomain *dom,
                           double h,
                           size_t nodes,
                           struct HsField **out);

/**
 * # Safety
 * `field` must be null or a live handle.
 */
void hs_field_free(struct HsField *field);

/**
 * Number of grid nodes, 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t hs_field_len(const struct HsField *field);

/**
 * Nodes inside the domain, 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t hs_field_interior(const struct HsField *field);

/**
 * Copies `δ` at every node into `out` (NaN outside the domain), in grid
 * order with the first axis fastest.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum HsStatus hs_field_values(const struct HsField *field, double *out, size_t len);

/**
 * The `k` lowest Dirichlet eigenvalues at spacing `h`.
 *
 * # Safety
 * `dom` must be a live handle; `out` must be writable.
 */
enum HsStatus hs_spectrum_new(const struct HsDomain *dom,
                              double h,
                              size_t k,
                              struct HsSpectrum **out);

/**
 * Every eigenvalue `≤ lambda` at spacing `h`, plus the next one.
 *
 * # Safety
 * `dom` must be a live handle; `out` must be writable.
 */
enum HsStatus hs_spectrum_covering(const struct HsDomain *dom,
                                   double h,
                                   double lambda,
                                   struct HsSpectrum **out);

/**
 * # Safety
 * `spec` must be null or a live handle.
 */
void hs_spectrum_free(struct HsSpectrum *spec);

/**
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t hs_spectrum_len(const struct HsSpectrum *spec);

/**
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum HsStatus hs_spectrum_eigenvalues(const struct HsSpectrum *spec, double *out, size_t len);

/**
 * `N_≤(λ)`; fails with `HS_INSUFFICIENT_SPECTRUM` past the computed range.
 *
 * # Safety
 * `out` must be writable.
 */
enum HsStatus hs_count_leq(const struct HsSpectrum *spec, double lambda, size_t *out);

/**
 * Greedy disjoint packing in `{δ ≥ (4λ)^{-1/2}}` checked against `spec`;
 * writes the number of balls and whether every certificate held.
 *
 * # Safety
 * Handles must be live; `count` and `pass` must be writable.
 */
enum HsStatus hs_rozenblum(const struct HsField *field,
                           const struct HsSpectrum *spec,
                           double lambda,
                           double theta,
                           size_t samples,
                           uint64_t seed,
                           size_t *count,
                           int32_t *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARDY_SPECTRAL_H */
