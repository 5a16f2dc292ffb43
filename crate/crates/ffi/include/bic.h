#ifndef BIC_H
#define BIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum BicStatus {
  BIC_STATUS_OK = 0,
  BIC_STATUS_NULL_POINTER = 1,
  BIC_STATUS_INVALID_UTF8 = 2,
  BIC_STATUS_SYNTAX = 3,
  BIC_STATUS_INVALID_INPUT = 4,
  BIC_STATUS_DIMENSION_MISMATCH = 5,
  BIC_STATUS_PANIC = 6,
} BicStatus;

/**
 * Outcome of an analysis; the values match the command-line exit codes.
 */
typedef enum BicVerdict {
  BIC_VERDICT_PROVED = 0,
  BIC_VERDICT_REFUTED = 1,
  BIC_VERDICT_INCONCLUSIVE = 2,
} BicVerdict;

/**
 * A parsed constraint.
 */
typedef struct BicConstraint BicConstraint;

/**
 * A generator set: the elemental inequalities plus user-supplied ones.
 */
typedef struct BicGenerators BicGenerators;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *bic_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *bic_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void bic_string_free(char *s);

/**
 * Parses constraint text into a new handle.
 *
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum BicStatus bic_constraint_parse(const char *text, struct BicConstraint **out);

/**
 * # Safety
 * `c` must come from [`bic_constraint_parse`] and not have been freed.
 */
void bic_constraint_free(struct BicConstraint *c);

/**
 * Number of variables, or 0 for null.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t bic_constraint_num_vars(const struct BicConstraint *c);

/**
 * Number of clauses, or 0 for null.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t bic_constraint_num_clauses(const struct BicConstraint *c);

/**
 * Normalized text of the constraint.
 *
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum BicStatus bic_constraint_to_string(const struct BicConstraint *c, char **out);

/**
 * The elemental generators over the variables of `c`.
 *
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum BicStatus bic_generators_new(const struct BicConstraint *c, struct BicGenerators **out);

/**
 * Adds user-valid inequalities, one per line, named over the variables of
 * `c`. `source` labels their provenance and may be null.
 *
 * # Safety
 * Handles must be live; strings nul-terminated.
 */
enum BicStatus bic_generators_load(struct BicGenerators *g,
                                   const struct BicConstraint *c,
                                   const char *text,
                                   const char *source);

/**
 * Number of generators, or 0 for null.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t bic_generators_len(const struct BicGenerators *g);

/**
 * # Safety
 * `g` must come from [`bic_generators_new`] and not have been freed.
 */
void bic_generators_free(struct BicGenerators *g);

/**
 * Shannon provability of every clause; `g` may be null for the elemental
 * set. `out_json` may be null.
 *
 * # Safety
 * Handles must be live or null as stated; out-pointers writable.
 */
enum BicStatus bic_prove(const struct BicConstraint *c,
                         const struct BicGenerators *g,
                         enum BicVerdict *out_verdict,
                         char **out_json);

/**
 * Counterexample search. `budget` uses the `s=2,D=4,vsdim=2,vsq=2,3`
 * syntax and may be null for the default.
 *
 * # Safety
 * `c` must be live; `budget` null or nul-terminated; out-pointers writable.
 */
enum BicStatus bic_refute(const struct BicConstraint *c,
                          const char *budget,
                          size_t workers,
                          enum BicVerdict *out_verdict,
                          char **out_json);

/**
 * Routes every clause through the reductions. `schedule` (`p=1,2 qmax=8`)
 * and `budget` may be null for defaults; `g` may be null for the elemental
 * set.
 *
 * # Safety
 * Handles live or null as stated; strings nul-terminated; out-pointers writable.
 */
enum BicStatus bic_reduce(const struct BicConstraint *c,
                          const struct BicGenerators *g,
                          const char *schedule,
                          const char *budget,
                          enum BicVerdict *out_verdict,
                          char **out_json);

/**
 * Runs the command-line tool on `argv[0..argc]` (program name first) and
 * returns its exit code. Output strings are written when the pointers are
 * non-null. Returns 3 with a last-error message on bad arguments.
 *
 * # Safety
 * `argv` must point to `argc` nul-terminated strings.
 */
int bic_cli_run(size_t argc, const char *const *argv, char **out_stdout, char **out_stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIC_H */
