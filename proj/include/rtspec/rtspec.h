/*
 * rtspec - runtime specialization of small IR programs.
 *
 * Every function returns an rtspec_status. On failure a message is kept per
 * thread and can be read with rtspec_last_error() until the next call.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with rtspec_free_string().
 */
#ifndef RTSPEC_RTSPEC_H
#define RTSPEC_RTSPEC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RTSPEC_API __declspec(dllexport)
#else
#define RTSPEC_API __attribute__((visibility("default")))
#endif

typedef enum rtspec_status {
  RTSPEC_OK = 0,
  RTSPEC_ERR_SYNTAX,
  RTSPEC_ERR_VALIDATION,
  RTSPEC_ERR_PIN_TYPE,
  RTSPEC_ERR_UNKNOWN_POINT,
  RTSPEC_ERR_UNKNOWN_FUNCTION,
  RTSPEC_ERR_NOT_SCALAR,
  RTSPEC_ERR_SUBSTITUTION_REFUSED,
  RTSPEC_ERR_GUARD_ON_LOCAL,
  RTSPEC_ERR_SPECIALIZATION_TOO_LARGE,
  RTSPEC_ERR_NOT_PURE,
  RTSPEC_ERR_EMPTY_HOT_MAP,
  RTSPEC_ERR_EMPTY_CANDIDATES,
  RTSPEC_ERR_ALREADY_EXPLORING,
  RTSPEC_ERR_INVALID_PREFIX,
  RTSPEC_ERR_INVALID_ARGUMENT,
  RTSPEC_ERR_CONFIG,
  RTSPEC_ERR_IO,
  RTSPEC_ERR_TRAP,
  RTSPEC_ERR_INTERNAL
} rtspec_status;

typedef struct rtspec_runtime rtspec_runtime;

typedef enum rtspec_kind {
  RTSPEC_I64 = 0,
  RTSPEC_F64,
  RTSPEC_BOOL,
  RTSPEC_I64_ARRAY,
  RTSPEC_F64_ARRAY
} rtspec_kind;

/* One argument. Arrays are borrowed; the call writes updates back into them. */
typedef struct rtspec_value {
  rtspec_kind kind;
  int64_t i;
  double f;
  int b;
  int64_t *i_array;
  double *f_array;
  size_t length;
} rtspec_value;

typedef struct rtspec_result {
  rtspec_kind kind;
  int64_t i;
  double f;
  int b;
  uint64_t ops;
  int guard_failed;
  int fallback_used;
  size_t effects;
} rtspec_result;

/* Called when a specialization check fails, before the generic version runs. */
typedef void (*rtspec_cleanup_fn)(const char *function, size_t effects, void *user);

RTSPEC_API const char *rtspec_last_error(void);
RTSPEC_API const char *rtspec_status_name(rtspec_status status);
RTSPEC_API void rtspec_free_string(char *s);

/* --- hooks --------------------------------------------------------------- */

/* config_json may be NULL for defaults (no policy). */
RTSPEC_API rtspec_status rtspec_runtime_init(const char *program_text, const char *config_json,
                                             rtspec_runtime **out);
RTSPEC_API void rtspec_runtime_free(rtspec_runtime *rt);

/* value is a literal such as "4", "2.5" or "true", read as the point's type. */
RTSPEC_API rtspec_status rtspec_point_specialize(rtspec_runtime *rt, const char *function,
                                                 const char *variable, const char *value);
RTSPEC_API rtspec_status rtspec_point_disable_spec(rtspec_runtime *rt, const char *function,
                                                   const char *variable);
RTSPEC_API rtspec_status rtspec_point_disable_spec_check(rtspec_runtime *rt, const char *function,
                                                         const char *variable);
RTSPEC_API rtspec_status rtspec_point_enable_collection(rtspec_runtime *rt, const char *function,
                                                        const char *variable);
RTSPEC_API rtspec_status rtspec_point_disable_collection(rtspec_runtime *rt, const char *function,
                                                         const char *variable);
RTSPEC_API rtspec_status rtspec_update_runtime(rtspec_runtime *rt);
/* Writes the id of the active variant, e.g. "matmul#generic" or "matmul{s=4}". */
RTSPEC_API rtspec_status rtspec_get_specialized_function(rtspec_runtime *rt, const char *function,
                                                         char **variant_id);
/* Starts the policy named in the configuration. */
RTSPEC_API rtspec_status rtspec_start_exploration(rtspec_runtime *rt);
RTSPEC_API rtspec_status rtspec_end_exploration(rtspec_runtime *rt);

/* --- calls --------------------------------------------------------------- */

RTSPEC_API rtspec_status rtspec_call(rtspec_runtime *rt, const char *function, rtspec_value *args,
                                     size_t nargs, rtspec_result *out);
RTSPEC_API rtspec_status rtspec_register_cleanup(rtspec_runtime *rt, const char *function,
                                                 rtspec_cleanup_fn cb, void *user);
/* Replaces one function with the one defined in function_text. */
RTSPEC_API rtspec_status rtspec_replace_function(rtspec_runtime *rt, const char *function_text);
RTSPEC_API rtspec_status rtspec_counters(rtspec_runtime *rt, uint64_t *calls, uint64_t *guard_failures);
RTSPEC_API rtspec_status rtspec_metrics_csv(rtspec_runtime *rt, char **csv);
RTSPEC_API rtspec_status rtspec_exploration_csv(rtspec_runtime *rt, char **csv);
/* One line per hook invocation: "hook target detail". */
RTSPEC_API rtspec_status rtspec_hook_log(rtspec_runtime *rt, char **text);

/* --- batch tools --------------------------------------------------------- */

/* Runs a workload config and writes metrics.csv, exploration.csv and
   summary.txt into out_dir. A trap returns RTSPEC_ERR_TRAP. */
RTSPEC_API rtspec_status rtspec_run_config(const char *config_json, const char *out_dir, int has_seed,
                                           uint64_t seed, int wallclock, char **summary);
/* point is "FN:VAR". */
RTSPEC_API rtspec_status rtspec_specialize_text(const char *program_text, const char *point,
                                                const char *value, int no_guard, int unroll_cap,
                                                char **report);
RTSPEC_API rtspec_status rtspec_report(const char *dir, char **table);

#ifdef __cplusplus
}
#endif

#endif /* RTSPEC_RTSPEC_H */
