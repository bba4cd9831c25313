#ifndef NSX_H
#define NSX_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the first three double as solver verdicts.
 */
typedef enum NsxStatus {
  NSX_STATUS_OK = 0,
  NSX_STATUS_UNSAT = 1,
  NSX_STATUS_UNKNOWN = 2,
  /**
   * A required pointer was null or an option was out of range.
   */
  NSX_STATUS_INVALID_ARGUMENT = 64,
  /**
   * The constraint text or a model file could not be read.
   */
  NSX_STATUS_INPUT_FORMAT = 65,
  NSX_STATUS_INTERNAL = 70,
} NsxStatus;

/**
 * A parsed constraint file with its models loaded.
 */
typedef struct NsxProblem NsxProblem;

/**
 * The outcome of one solve.
 */
typedef struct NsxResult NsxResult;

/**
 * Solver options. Obtain defaults from [`nsx_solve_options_default`].
 */
typedef struct NsxSolveOptions {
  uintptr_t max_enumerations;
  uintptr_t trials;
  double alpha;
  double beta;
  bool compat_unsat;
  uint64_t seed;
} NsxSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *nsx_version(void);

/**
 * Message for the last failure on this thread; empty if none.
 */
const char *nsx_last_error(void);

struct NsxSolveOptions nsx_solve_options_default(void);

/**
 * Parse constraint `source` and load its models, resolving relative model
 * paths against `base_dir` (the working directory when null).
 *
 * # Safety
 * `source` and a non-null `base_dir` must be NUL-terminated strings; `out`
 * must be valid for a write.
 */
enum NsxStatus nsx_problem_parse(const char *source, const char *base_dir, struct NsxProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from [`nsx_problem_parse`] not yet freed.
 */
void nsx_problem_free(struct NsxProblem *p);

/**
 * Canonical text of the problem, owned by the caller (free with
 * [`nsx_string_free`]); null when `p` is null.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
char *nsx_problem_print(const struct NsxProblem *p);

/**
 * # Safety
 * `s` must be null or a string returned by this library as caller-owned.
 */
void nsx_string_free(char *s);

/**
 * Solve `p`. Returns the verdict (`Ok` for SAT, `Unsat`, `Unknown`) and
 * stores the result in `*out`, or an error status with `*out` null.
 * `options` may be null for defaults.
 *
 * # Safety
 * `p` must be a live problem handle, `options` null or valid, `out` valid
 * for a write.
 */
enum NsxStatus nsx_solve(const struct NsxProblem *p,
                         const struct NsxSolveOptions *options,
                         struct NsxResult **out);

/**
 * # Safety
 * `r` must be a live result handle.
 */
enum NsxStatus nsx_result_verdict(const struct NsxResult *r);

/**
 * `SAT name=value ...`, `UNSAT` or `UNKNOWN`.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
const char *nsx_result_summary(const struct NsxResult *r);

/**
 * Full `key=value` report, one entry per line.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
const char *nsx_result_report(const struct NsxResult *r);

/**
 * Value bound to `name` in a SAT result, as text (strings unquoted); null
 * when the result is not SAT or `name` is unbound.
 *
 * # Safety
 * `r` must be null or a live result handle; `name` a NUL-terminated string.
 */
const char *nsx_result_value(const struct NsxResult *r, const char *name);

/**
 * # Safety
 * `r` must be null or a handle from [`nsx_solve`] not yet freed.
 */
void nsx_result_free(struct NsxResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSX_H */
