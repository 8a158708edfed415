/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef LACUNA_H
#define LACUNA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum LacunaStatus {
  LACUNA_STATUS_OK = 0,
  LACUNA_STATUS_NULL_POINTER = 1,
  LACUNA_STATUS_INVALID_ARGUMENT = 2,
  LACUNA_STATUS_DOMAIN = 3,
  LACUNA_STATUS_LEVEL_UNAVAILABLE = 4,
  LACUNA_STATUS_SCAN_CAP = 5,
  LACUNA_STATUS_IO = 6,
  LACUNA_STATUS_PARSE = 7,
  LACUNA_STATUS_BUFFER_TOO_SMALL = 8,
  LACUNA_STATUS_PANIC = 9,
} LacunaStatus;

/**
 * Constant set of the witness construction.
 */
typedef enum LacunaMode {
  LACUNA_MODE_STRICT = 0,
  LACUNA_MODE_DESK = 1,
  LACUNA_MODE_MICRO = 2,
} LacunaMode;

/**
 * The two interleaved series families of a witness.
 */
typedef enum LacunaFamilyKind {
  LACUNA_FAMILY_KIND_G = 0,
  LACUNA_FAMILY_KIND_H = 1,
} LacunaFamilyKind;

/**
 * A separated point set on the unit sphere.
 */
typedef struct LacunaSeparatedSet LacunaSeparatedSet;

/**
 * A validated normal weight.
 */
typedef struct LacunaWeight LacunaWeight;

/**
 * A built witness family.
 */
typedef struct LacunaWitness LacunaWitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *lacuna_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lacuna_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lacuna_string_free(char *s);

/**
 * Power weight `(1 - r^2)^gamma` with normality exponents `alpha < beta`
 * valid from `delta0`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LacunaStatus lacuna_weight_power(double gamma,
                                      double alpha,
                                      double beta,
                                      double delta0,
                                      struct LacunaWeight **out);

/**
 * Weight from a JSON block such as
 * `{"kind":"power","gamma":0.5,"alpha":0.4,"beta":0.6,"delta0":0.7}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LacunaStatus lacuna_weight_from_json(const char *json, struct LacunaWeight **out);

/**
 * `mu(r)` for `r` in `[0, 1)`.
 *
 * # Safety
 * `w` and `out` must be valid pointers.
 */
enum LacunaStatus lacuna_weight_eval(const struct LacunaWeight *w, double r, double *out);

/**
 * Runs the normality check on `grid` points; writes whether it passed.
 *
 * # Safety
 * `w` and `pass` must be valid pointers.
 */
enum LacunaStatus lacuna_weight_verify_normality(const struct LacunaWeight *w,
                                                 size_t grid,
                                                 bool *pass);

/**
 * # Safety
 * `w` must come from this library and not have been freed. Null is ignored.
 */
void lacuna_weight_free(struct LacunaWeight *w);

/**
 * Greedy maximal `sep`-separated set on the sphere of `C^n`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LacunaStatus lacuna_separated_set_build(size_t n,
                                             double sep,
                                             uint64_t seed,
                                             uint64_t rejection_budget,
                                             struct LacunaSeparatedSet **out);

/**
 * Number of points, or 0 for null.
 *
 * # Safety
 * `set` must be null or a valid pointer.
 */
size_t lacuna_separated_set_len(const struct LacunaSeparatedSet *set);

/**
 * Copies point `i` as `2n` reals `(re_1, im_1, ..., re_n, im_n)` into `buf`.
 *
 * # Safety
 * `set` must be valid and `buf` must hold `cap` doubles.
 */
enum LacunaStatus lacuna_separated_set_point(const struct LacunaSeparatedSet *set,
                                             size_t i,
                                             double *buf,
                                             size_t cap);

/**
 * # Safety
 * `set` must come from this library and not have been freed. Null is ignored.
 */
void lacuna_separated_set_free(struct LacunaSeparatedSet *set);

/**
 * Upper bound on `|sum <z, zeta>^k|` over a `delta`-separated center set.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LacunaStatus lacuna_zonal_sum_bound(size_t n, double delta, uint64_t k, double *out);

/**
 * `(1 - 1/k)^{-k}` for `k >= 2`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LacunaStatus lacuna_cauchy_constant(uint32_t k, double *out);

/**
 * Largest grid value of the spacing constant `A` admissible in `mode`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LacunaStatus lacuna_select_a(size_t n, double grid, enum LacunaMode m, double *out);

/**
 * Builds a witness family from a parameter block such as
 * `{"n":2,"a":1,"p":2,"m":2,"depth":1,"mode":"micro","weight":{...}}`
 * with default build options.
 *
 * # Safety
 * `params_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LacunaStatus lacuna_witness_build(const char *params_json,
                                       uint64_t seed,
                                       struct LacunaWitness **out);

/**
 * Number of levels of the family, or 0 for null.
 *
 * # Safety
 * `w` must be null or a valid pointer.
 */
size_t lacuna_witness_level_count(const struct LacunaWitness *w);

/**
 * Certified lower bound on `max_i |f_{i,j}(z)|` for `z = modulus * eta`
 * inside shell `(j, v)`; `eta` holds `2n` reals of a unit vector.
 *
 * # Safety
 * `w` and `out` must be valid; `eta` must hold `eta_len` doubles.
 */
enum LacunaStatus lacuna_witness_certified_lower_bound(const struct LacunaWitness *w,
                                                       enum LacunaFamilyKind kind,
                                                       const double *eta,
                                                       size_t eta_len,
                                                       double modulus,
                                                       uint32_t j,
                                                       uint32_t v,
                                                       double *out);

/**
 * # Safety
 * `w` must come from this library and not have been freed. Null is ignored.
 */
void lacuna_witness_free(struct LacunaWitness *w);

/**
 * Runs a pipeline from a JSON run config (the command-line format) and
 * writes the JSON report to `report`, to be released with
 * [`lacuna_string_free`], and the verdict exit code (0 or 1) to
 * `exit_code`. Nothing is written to disk; relative paths resolve against
 * the working directory.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `report` and `exit_code`
 * must be valid pointers.
 */
enum LacunaStatus lacuna_run_json(const char *config_json, char **report, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LACUNA_H */
