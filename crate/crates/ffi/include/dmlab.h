#ifndef DMLAB_H
#define DMLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DmlabStatus {
  DMLAB_STATUS_OK = 0,
  DMLAB_STATUS_NULL_POINTER = 1,
  DMLAB_STATUS_INVALID_UTF8 = 2,
  DMLAB_STATUS_UNKNOWN_NAME = 3,
  DMLAB_STATUS_DOMAIN = 4,
  DMLAB_STATUS_INVALID_INPUT = 5,
  DMLAB_STATUS_EVALUATION = 6,
  DMLAB_STATUS_PRECONDITION = 7,
  DMLAB_STATUS_PANIC = 8,
} DmlabStatus;

/**
 * A test sequence `(u_k, w_k)`.
 */
typedef struct DmlabFamily DmlabFamily;

/**
 * A generated triple `(σ, ν̂, μ̂)`.
 */
typedef struct DmlabTriple DmlabTriple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *dmlab_last_error(void);

void dmlab_string_free(char *s);

enum DmlabStatus dmlab_family_builtin(const char *name, struct DmlabFamily **out);

void dmlab_family_free(struct DmlabFamily *family);

enum DmlabStatus dmlab_family_domain(const struct DmlabFamily *family, double *lo, double *hi);

/**
 * `(u_k(x), w_k(x))`.
 */
enum DmlabStatus dmlab_family_evaluate(const struct DmlabFamily *family,
                                       uint64_t k,
                                       double x,
                                       double *u,
                                       double *w);

/**
 * `∫ g(x) f₀(u_k) ψ₀(w_k) (1+|w_k|^p) dx` with catalog names for `g`, `f₀`, `ψ₀`.
 */
enum DmlabStatus dmlab_functional_value(const struct DmlabFamily *family,
                                        uint64_t k,
                                        const char *g,
                                        const char *f0,
                                        const char *psi0,
                                        double p,
                                        double *out);

/**
 * Extrapolated limit over `k = 2^4..2^k_max_exp` and its error bar.
 */
enum DmlabStatus dmlab_limit_extrapolate(const struct DmlabFamily *family,
                                         const char *g,
                                         const char *f0,
                                         const char *psi0,
                                         double p,
                                         uint32_t k_max_exp,
                                         double *value,
                                         double *error_bar);

enum DmlabStatus dmlab_triple_builtin(const char *name, struct DmlabTriple **out);

enum DmlabStatus dmlab_triple_from_json(const char *json, struct DmlabTriple **out);

/**
 * Serializes a triple; release the string with [`dmlab_string_free`].
 */
enum DmlabStatus dmlab_triple_to_json(const struct DmlabTriple *triple, char **out);

void dmlab_triple_free(struct DmlabTriple *triple);

/**
 * `∫ g ∫ ψ₀ ∫ f₀ dμ̂ dν̂ dσ`.
 */
enum DmlabStatus dmlab_integrate_triple(const struct DmlabTriple *triple,
                                        const char *g,
                                        const char *f0,
                                        const char *psi0,
                                        double *out);

/**
 * Upper bound for the quasiconvex envelope of a catalog growth function at `s0`.
 */
enum DmlabStatus dmlab_qc_envelope_upper(const char *psi,
                                         double s0,
                                         size_t n,
                                         size_t m,
                                         uint64_t seed,
                                         double *out);

/**
 * `lim ∫ h(x,u_k,w_k) − ∫ h(x,u,u')` for a catalog integrand.
 */
enum DmlabStatus dmlab_lsc_gap(const struct DmlabFamily *family,
                               const char *integrand,
                               uint32_t k_max_exp,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMLAB_H */
