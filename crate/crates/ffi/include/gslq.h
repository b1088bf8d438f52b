#ifndef GSLQ_H
#define GSLQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. The nonzero values match the command-line exit codes where one exists.
typedef enum GslqStatus {
  GSLQ_STATUS_OK = 0,
  GSLQ_STATUS_NULL_POINTER = 1,
  // Malformed JSON, bad dimensions, rejected parameters or invalid UTF-8.
  GSLQ_STATUS_PARSE = 2,
  // The solver stopped without meeting its tolerance. A report is still produced.
  GSLQ_STATUS_NOT_CONVERGED = 3,
  GSLQ_STATUS_NUMERICAL = 4,
  // A caller buffer is too small.
  GSLQ_STATUS_BUFFER_TOO_SMALL = 5,
  // A Rust panic was caught at the boundary.
  GSLQ_STATUS_INTERNAL = 6,
} GslqStatus;

// Loaded problem data.
typedef struct GslqProblem GslqProblem;

// Result of one solve.
typedef struct GslqReport GslqReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a problem from JSON text. On success `*out` owns a new handle.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum GslqStatus gslq_problem_from_json(const char *json, struct GslqProblem **out);

// Releases a problem handle. Null is ignored.
//
// # Safety
// `problem` must come from [`gslq_problem_from_json`] and not be used afterwards.
void gslq_problem_free(struct GslqProblem *problem);

// State and control dimensions of a problem.
//
// # Safety
// All pointers must be valid.
enum GslqStatus gslq_problem_dims(const struct GslqProblem *problem, size_t *n, size_t *m);

// Runs PALM. `config_json` uses the command-line config keys and may be null.
// Both `Ok` and `NotConverged` leave a report in `*out`.
//
// # Safety
// `problem` must be a live handle, `config_json` null or NUL-terminated, `out` valid.
enum GslqStatus gslq_solve_palm(const struct GslqProblem *problem,
                                const char *config_json,
                                bool strict_params,
                                bool rho_continuation,
                                struct GslqReport **out);

// Runs the group-sparse ADMM heuristic.
//
// # Safety
// Same contract as [`gslq_solve_palm`].
enum GslqStatus gslq_solve_admm(const struct GslqProblem *problem,
                                const char *config_json,
                                struct GslqReport **out);

// Runs the ADMM baseline with the group-l1 penalty.
//
// # Safety
// Same contract as [`gslq_solve_palm`].
enum GslqStatus gslq_solve_l1(const struct GslqProblem *problem,
                              const char *config_json,
                              struct GslqReport **out);

// Releases a report handle. Null is ignored.
//
// # Safety
// `report` must come from a solve call and not be used afterwards.
void gslq_report_free(struct GslqReport *report);

// The report as JSON, in the same layout as `report.json`. Free with [`gslq_string_free`].
// Returns null on failure.
//
// # Safety
// `report` must be a live handle.
char *gslq_report_json(const struct GslqReport *report);

// Copies the gain `K` (m x n, row-major) into `buf`, which holds `len` doubles.
//
// # Safety
// `report` must be a live handle and `buf` valid for `len` writes.
enum GslqStatus gslq_report_gain(const struct GslqReport *report, double *buf, size_t len);

// Closed-loop H2 cost and spectral abscissa of `u = -Kx`, with `K` given row-major (m x n).
// `*h2` is set to +infinity when the loop is not stable.
//
// # Safety
// `problem` must be a live handle, `k` valid for `m * n` reads and the outputs valid.
enum GslqStatus gslq_eval_gain(const struct GslqProblem *problem,
                               const double *k,
                               size_t rows,
                               size_t cols,
                               double *abscissa,
                               double *h2);

// Message of the last failed call on this thread, or null. Free with [`gslq_string_free`].
char *gslq_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void gslq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSLQ_H */
