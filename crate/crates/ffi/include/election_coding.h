#ifndef ELECTION_CODING_H
#define ELECTION_CODING_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  EC_STATUS_OK = 0,
  EC_STATUS_NULL_POINTER = 1,
  EC_STATUS_INVALID_ARGUMENT = 2,
  EC_STATUS_PARSE = 3,
  EC_STATUS_TOO_LARGE = 4,
  EC_STATUS_IO = 5,
  EC_STATUS_PANIC = 99,
} EcStatus;

/**
 * Opaque allocation matrix.
 */
typedef struct EcMatrix EcMatrix;

/**
 * Global-error certificate.
 */
typedef struct {
  bool certified;
  bool vacuous;
  double rhs;
  double q_star;
  double u_min;
  double bound;
} EcCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *ec_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ec_version(void);

/**
 * Deterministic code for odd `n` tolerating `b` Byzantine workers.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
EcStatus ec_matrix_deterministic(size_t n, size_t b, EcMatrix **out);

/**
 * Bernoulli(`p`) code; empty rows are redrawn.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
EcStatus ec_matrix_bernoulli(size_t n, double p, uint64_t seed, EcMatrix **out);

/**
 * Uncoded baseline: worker `i` holds partition `i`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
EcStatus ec_matrix_identity(size_t n, EcMatrix **out);

/**
 * Parse the text matrix format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
EcStatus ec_matrix_from_text(const char *text, EcMatrix **out);

/**
 * Serialize to the text format. Free the result with `ec_string_free`.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
EcStatus ec_matrix_to_text(const EcMatrix *m, char **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void ec_matrix_free(EcMatrix *m);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void ec_string_free(char *s);

/**
 * Number of workers (and partitions); 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t ec_matrix_n(const EcMatrix *m);

/**
 * Redundancy `r = nnz(G)/n` as a reduced fraction.
 *
 * # Safety
 * `m` must be a live handle; `num` and `den` must be writable.
 */
EcStatus ec_matrix_redundancy(const EcMatrix *m, uint64_t *num, uint64_t *den);

/**
 * Entry `G[i][j]`.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
EcStatus ec_matrix_get(const EcMatrix *m, size_t i, size_t j, bool *out);

/**
 * Theoretical redundancy of the deterministic code as a reduced fraction.
 *
 * # Safety
 * `num` and `den` must be writable.
 */
EcStatus ec_theoretical_redundancy(size_t n, size_t b, int64_t *num, int64_t *den);

/**
 * Tolerance check by the weight condition. On failure, when `witness` is
 * non-null, the failing message is written as `n` bytes of 0/1.
 *
 * # Safety
 * `m` must be a live handle; `tolerant` writable; `witness` null or
 * `witness_len` writable bytes.
 */
EcStatus ec_verify_lemma2(const EcMatrix *m,
                          size_t b,
                          bool *tolerant,
                          uint8_t *witness,
                          size_t witness_len);

/**
 * Tolerance check by exhaustive attack simulation (`n <= 15`).
 *
 * # Safety
 * Same as `ec_verify_lemma2`.
 */
EcStatus ec_verify_bruteforce(const EcMatrix *m,
                              size_t b,
                              bool *tolerant,
                              uint8_t *witness,
                              size_t witness_len);

/**
 * Local encoders: `codeword[i] = maj{message[j] : G[i][j] = 1}`.
 *
 * # Safety
 * `m` must be a live handle; `message` and `codeword` must each hold
 * `len` elements.
 */
EcStatus ec_encode(const EcMatrix *m, const int8_t *message, int8_t *codeword, size_t len);

/**
 * Global majority decoder; a tie decodes to -1.
 *
 * # Safety
 * `received` must hold `len` elements; `out` must be writable.
 */
EcStatus ec_decode(const int8_t *received, size_t len, int8_t *out);

/**
 * Connection probability `min(1, 2·sqrt(C ln n / n))`.
 */
double ec_p_star(double n, double c);

/**
 * Local-error bound `q*(n, C, S)`.
 */
double ec_q_star(double n, double c, double s);

/**
 * Global-error certificate for `(n, C, S, α, Δ)`.
 *
 * # Safety
 * `out` must be writable.
 */
EcStatus ec_certify(double n, double c, double s, double alpha, double delta, EcCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELECTION_CODING_H */
