/* Exercises the shared library through its C header only. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "rtspec/rtspec.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static const char *program =
    "(func f ((s i64) (x i64)) (locals (t i64)) (set t 0)\n"
    "  (for i 0 s 1 (set t (+ t x))) (return t))\n"
    "(specpoint f s workload)\n"
    "(func fill ((a arr-i64) (v i64)) (store a 0 v) (emit \"tx\" v) (return 0))\n"
    "(func boom ((x i64)) (return (/ 1 x)))\n";

static int cleanups = 0;

static void on_cleanup(const char *fn, size_t effects, void *user) {
  (void)effects;
  if (strcmp(fn, "f") == 0) ++*(int *)user;
}

static rtspec_result call_f(rtspec_runtime *rt, long long s, long long x) {
  rtspec_value args[2];
  rtspec_result r;
  memset(args, 0, sizeof args);
  args[0].kind = RTSPEC_I64;
  args[0].i = s;
  args[1].kind = RTSPEC_I64;
  args[1].i = x;
  EXPECT(rtspec_call(rt, "f", args, 2, &r) == RTSPEC_OK);
  return r;
}

static int contains(const char *hay, const char *needle) { return strstr(hay, needle) != NULL; }

int main(void) {
  rtspec_runtime *rt = NULL;
  char *id = NULL;
  char *text = NULL;
  rtspec_result r;
  uint64_t calls = 0, fails = 0;

  EXPECT(rtspec_runtime_init("(func f (", NULL, &rt) == RTSPEC_ERR_SYNTAX);
  EXPECT(rt == NULL);
  EXPECT(strlen(rtspec_last_error()) > 0);
  EXPECT(rtspec_runtime_init(program, "{\"points\": [{\"function\": \"f\", \"variable\": \"q\"}]}", &rt) ==
         RTSPEC_ERR_UNKNOWN_POINT);
  EXPECT(rtspec_runtime_init(program, "{\"calls_per_window\": 2}", &rt) == RTSPEC_OK);
  if (!rt) return 1;

  EXPECT(rtspec_get_specialized_function(rt, "f", &id) == RTSPEC_OK);
  EXPECT(strcmp(id, "f#generic") == 0);
  rtspec_free_string(id);

  EXPECT(rtspec_point_specialize(rt, "f", "s", "4") == RTSPEC_OK);
  EXPECT(rtspec_point_specialize(rt, "f", "s", "four") == RTSPEC_ERR_PIN_TYPE);
  EXPECT(rtspec_point_specialize(rt, "f", "zz", "4") == RTSPEC_ERR_UNKNOWN_POINT);
  EXPECT(strcmp(rtspec_status_name(RTSPEC_ERR_UNKNOWN_POINT), "unknown_point") == 0);
  EXPECT(rtspec_get_specialized_function(rt, "f", &id) == RTSPEC_OK);
  EXPECT(strcmp(id, "f{s=4}") == 0);
  rtspec_free_string(id);

  EXPECT(rtspec_register_cleanup(rt, "f", on_cleanup, &cleanups) == RTSPEC_OK);
  r = call_f(rt, 4, 3);
  EXPECT(r.kind == RTSPEC_I64 && r.i == 12 && !r.guard_failed);
  r = call_f(rt, 8, 3);
  EXPECT(r.i == 24 && r.guard_failed && r.fallback_used);
  EXPECT(cleanups == 1);
  EXPECT(rtspec_counters(rt, &calls, &fails) == RTSPEC_OK);
  EXPECT(calls == 2 && fails == 1);

  EXPECT(rtspec_point_disable_spec_check(rt, "f", "s") == RTSPEC_OK);
  r = call_f(rt, 8, 3);
  EXPECT(r.i == 12 && !r.guard_failed);
  EXPECT(rtspec_point_disable_spec(rt, "f", "s") == RTSPEC_OK);
  EXPECT(rtspec_point_disable_collection(rt, "f", "s") == RTSPEC_OK);
  EXPECT(rtspec_point_enable_collection(rt, "f", "s") == RTSPEC_OK);
  EXPECT(rtspec_update_runtime(rt) == RTSPEC_OK);
  r = call_f(rt, 8, 3);
  EXPECT(r.i == 24);

  {
    int64_t buf[2] = {0, 0};
    rtspec_value args[2];
    memset(args, 0, sizeof args);
    args[0].kind = RTSPEC_I64_ARRAY;
    args[0].i_array = buf;
    args[0].length = 2;
    args[1].kind = RTSPEC_I64;
    args[1].i = 7;
    EXPECT(rtspec_call(rt, "fill", args, 2, &r) == RTSPEC_OK);
    EXPECT(buf[0] == 7);
    EXPECT(r.effects == 1);
  }
  {
    rtspec_value a;
    memset(&a, 0, sizeof a);
    a.kind = RTSPEC_I64;
    a.i = 0;
    EXPECT(rtspec_call(rt, "boom", &a, 1, &r) == RTSPEC_ERR_TRAP);
    EXPECT(contains(rtspec_last_error(), "div_by_zero"));
  }

  EXPECT(rtspec_start_exploration(rt) == RTSPEC_ERR_CONFIG);
  EXPECT(rtspec_replace_function(rt, "(func boom ((x i64)) (return x))") == RTSPEC_OK);
  EXPECT(rtspec_replace_function(rt, "(func boom ((x i64)) (return y))") == RTSPEC_ERR_VALIDATION);

  EXPECT(rtspec_metrics_csv(rt, &text) == RTSPEC_OK);
  EXPECT(strncmp(text, "window_id,config_id,calls,total_ops,throughput,guard_failures\n", 62) == 0);
  rtspec_free_string(text);
  EXPECT(rtspec_exploration_csv(rt, &text) == RTSPEC_OK);
  EXPECT(strncmp(text, "event,window_id,config_id,action,throughput\n", 44) == 0);
  rtspec_free_string(text);
  EXPECT(rtspec_hook_log(rt, &text) == RTSPEC_OK);
  EXPECT(contains(text, "runtime_init"));
  EXPECT(contains(text, "point_disable_spec_check f:s"));
  rtspec_free_string(text);
  rtspec_runtime_free(rt);

  EXPECT(rtspec_specialize_text(program, "f:s", "3", 1, 16, &text) == RTSPEC_OK);
  EXPECT(contains(text, ";; f{s=3}"));
  rtspec_free_string(text);
  EXPECT(rtspec_report("/nonexistent/rtspec", &text) == RTSPEC_ERR_IO);
  EXPECT(rtspec_call(NULL, "f", NULL, 0, NULL) == RTSPEC_ERR_INVALID_ARGUMENT);

  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("c api: ok\n");
  return failures ? 1 : 0;
}
