/* SPDX-License-Identifier: Apache-2.0 */
#ifndef IMPULSIVE_H
#define IMPULSIVE_H

#ifdef __cplusplus
extern "C" {
#endif

/*
 * C interface to the impulsive-system toolkit: load a system document, then
 * run the simulate / certify / verify / phi commands against it. Commands
 * take a JSON options object (NULL or "" for defaults) and hand back a JSON
 * result through an out pointer; file outputs (trajectory CSV, certificate
 * JSON, violations CSV) are written as side effects when the options name an
 * "out" path.
 *
 * Status values equal the recommended process exit codes. Result strings are
 * heap-allocated and must be released with imp_string_free; strings returned
 * by imp_last_error and imp_version are borrowed and must not be freed. The
 * last error message and status are thread-local.
 */

typedef struct imp_system imp_system;

typedef enum imp_status {
  IMP_OK = 0,             /* clean pass */
  IMP_E_VERIFICATION = 1, /* a certified bound was violated, or a finite escape */
  IMP_E_CONFIG = 2,       /* schema, configuration, argument, or io failure */
  IMP_E_THRESHOLD = 3     /* a strict certificate inequality was violated */
} imp_status;

/* Parse a system document from JSON text or from a file. Returns NULL on
 * failure with imp_last_error / imp_last_status set. */
imp_system* imp_load_string(const char* text);
imp_system* imp_load_file(const char* path);
void imp_system_free(imp_system* sys);

/* Message of the most recent failure on this thread; empty after success. */
const char* imp_last_error(void);
imp_status imp_last_status(void);
const char* imp_version(void);
void imp_string_free(char* s);

/*
 * Each command fills *result_json with a JSON object:
 *   { "command", "digest", "exit_code", "message", "wall_seconds",
 *     "outputs": [paths], "constants": [{"name","value","formula"}],
 *     "text": rendered human-readable report }
 * and returns its exit code. On a thrown failure *result_json stays NULL.
 *
 * Options keys (all optional):
 *   simulate: t0, t_end, step, x0 (number array), signal, out
 *   certify:  fit, flavor ("strong"|"weak"), fit_step, k_cap, lambda_lo,
 *             lambda_hi, lambda_points, chosenR, iiss, budget_step, out
 *   verify:   trials, seed, input_radius, state_radius, signal, out,
 *             certify (nested certify options)
 *   phi:      step, signal
 */
imp_status imp_simulate(const imp_system* sys, const char* options_json, char** result_json);
imp_status imp_certify(const imp_system* sys, const char* options_json, char** result_json);
imp_status imp_verify(const imp_system* sys, const char* options_json, char** result_json);
imp_status imp_phi(const imp_system* sys, double s, double t, const char* options_json,
                   char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* IMPULSIVE_H */
