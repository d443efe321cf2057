#ifndef CM_MODULI_H
#define CM_MODULI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

// Result of every fallible call. Values match the CLI exit codes.
typedef enum CmStatus {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  CM_STATUS_INVALID_ARGUMENT = 2,
  CM_STATUS_PRECISION = 3,
  CM_STATUS_CLASS_NUMBER = 4,
  CM_STATUS_VERIFICATION = 5,
  CM_STATUS_INTERNAL = 6,
} CmStatus;

// Precision settings shared by evaluations.
typedef struct CmContext CmContext;

// A monic polynomial with exact coefficients.
typedef struct CmPolynomial CmPolynomial;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until
// the next failing call on the same thread.
const char *cm_last_error(void);

// Free a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void cm_string_free(char *s);

// New context with `bits` of working precision; 0 selects the default.
// The escalation cap honours `CM_MODULI_MAX_BITS`.
//
// # Safety
// `out` must be a valid pointer.
enum CmStatus cm_context_new(uint32_t bits, struct CmContext **out);

// # Safety
// `ctx` must come from `cm_context_new` and not be freed twice.
void cm_context_free(struct CmContext *ctx);

// Class number of the discriminant `disc < 0`, `disc ≡ 0, 1 mod 4`.
//
// # Safety
// `out` must be a valid pointer.
enum CmStatus cm_class_number(int64_t disc, uintptr_t *out);

// `j` at `tau = re + i·im` (decimal or fraction strings), or at
// `θ_K = (disc + √disc)/2` when `re` is NULL. Writes the eval JSON
// document `{"value_re", "value_im", "bits", "recognized"}`.
//
// # Safety
// Pointers must be valid; `im` is read only when `re` is non-NULL.
enum CmStatus cm_eval_j(const struct CmContext *ctx,
                        const char *re,
                        const char *im,
                        int64_t disc,
                        char **out_json);

// Hilbert class polynomial of the fundamental discriminant `disc`.
//
// # Safety
// Pointers must be valid.
enum CmStatus cm_hilbert_class_poly(const struct CmContext *ctx,
                                    int64_t disc,
                                    struct CmPolynomial **out);

// Ring class polynomial for the order of conductor `level`.
//
// # Safety
// Pointers must be valid.
enum CmStatus cm_ring_class_poly(const struct CmContext *ctx,
                                 int64_t disc,
                                 int64_t level,
                                 struct CmPolynomial **out);

// Minimal polynomial of the ray class generator for `modulus`. `p = 0`
// selects the smallest admissible prime.
//
// # Safety
// Pointers must be valid.
enum CmStatus cm_raygen_poly(const struct CmContext *ctx,
                             int64_t disc,
                             int64_t modulus,
                             uint64_t p,
                             struct CmPolynomial **out);

// # Safety
// `poly` must come from this library and not be freed twice.
void cm_polynomial_free(struct CmPolynomial *poly);

// Degree, or -1 for NULL.
//
// # Safety
// `poly` must be NULL or valid.
int64_t cm_polynomial_degree(const struct CmPolynomial *poly);

// Whether every coefficient is an integer.
//
// # Safety
// `poly` must be NULL or valid.
bool cm_polynomial_is_integral(const struct CmPolynomial *poly);

// Coefficient of `X^i` as a decimal string (`a/b` if not integral).
//
// # Safety
// Pointers must be valid.
enum CmStatus cm_polynomial_coeff(const struct CmPolynomial *poly, uintptr_t i, char **out);

// Polynomial JSON `{"disc", "level", "coeffs", "monic", "bits"}`,
// coefficients ascending.
//
// # Safety
// Pointers must be valid.
enum CmStatus cm_polynomial_json(const struct CmPolynomial *poly, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CM_MODULI_H */
