#include "rtspec/rtspec.h"

#include <cstring>
#include <string>

#include "rtspec/driver.hpp"
#include "rtspec/error.hpp"
#include "rtspec/runtime.hpp"

struct rtspec_runtime {
  std::unique_ptr<rtspec::Runtime> rt;
};

namespace {

thread_local std::string g_last_error;

rtspec_status status_of(rtspec::ErrorCode c) { return static_cast<rtspec_status>(static_cast<int>(c) + 1); }

template <class F>
rtspec_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return RTSPEC_OK;
  } catch (const rtspec::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RTSPEC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return RTSPEC_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) throw rtspec::Error(rtspec::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

rtspec::SpecPointId point_id(const char* fn, const char* var) {
  need(fn, "function");
  need(var, "variable");
  return {fn, var};
}

}  // namespace

extern "C" {

const char* rtspec_last_error(void) { return g_last_error.c_str(); }

const char* rtspec_status_name(rtspec_status status) {
  if (status == RTSPEC_OK) return "ok";
  if (status == RTSPEC_ERR_INTERNAL) return "internal";
  if (status < RTSPEC_OK || status > RTSPEC_ERR_INTERNAL) return "unknown";
  static std::string names[RTSPEC_ERR_INTERNAL];
  auto& n = names[status - 1];
  if (n.empty()) n = rtspec::to_string(static_cast<rtspec::ErrorCode>(status - 1));
  return n.c_str();
}

void rtspec_free_string(char* s) { std::free(s); }

rtspec_status rtspec_runtime_init(const char* program_text, const char* config_json, rtspec_runtime** out) {
  return guarded([&] {
    need(program_text, "program_text");
    need(out, "out");
    *out = nullptr;
    auto cfg = config_json ? rtspec::parse_runtime_config(config_json) : rtspec::RuntimeConfig{};
    auto h = std::make_unique<rtspec_runtime>();
    h->rt = std::make_unique<rtspec::Runtime>(program_text, std::move(cfg));
    *out = h.release();
  });
}

void rtspec_runtime_free(rtspec_runtime* rt) { delete rt; }

rtspec_status rtspec_point_specialize(rtspec_runtime* rt, const char* function, const char* variable,
                                      const char* value) {
  return guarded([&] {
    need(rt, "runtime");
    need(value, "value");
    auto id = point_id(function, variable);
    const auto& sp = rt->rt->point(id);
    auto t = rt->rt->program().functions.at(id.function).scalar_type_of(id.variable);
    if (!t) throw rtspec::Error(rtspec::ErrorCode::NotScalar, sp.id.str() + " is not a scalar");
    auto v = rtspec::ir::parse_scalar(value, *t);
    if (!v) throw rtspec::Error(rtspec::ErrorCode::PinType, std::string("cannot read '") + value + "'");
    rt->rt->point_specialize(id, *v);
  });
}

rtspec_status rtspec_point_disable_spec(rtspec_runtime* rt, const char* function, const char* variable) {
  return guarded([&] {
    need(rt, "runtime");
    rt->rt->point_disable_spec(point_id(function, variable));
  });
}

rtspec_status rtspec_point_disable_spec_check(rtspec_runtime* rt, const char* function, const char* variable) {
  return guarded([&] {
    need(rt, "runtime");
    rt->rt->point_disable_spec_check(point_id(function, variable));
  });
}

rtspec_status rtspec_point_enable_collection(rtspec_runtime* rt, const char* function, const char* variable) {
  return guarded([&] {
    need(rt, "runtime");
    rt->rt->point_enable_collection(point_id(function, variable));
  });
}

rtspec_status rtspec_point_disable_collection(rtspec_runtime* rt, const char* function, const char* variable) {
  return guarded([&] {
    need(rt, "runtime");
    rt->rt->point_disable_collection(point_id(function, variable));
  });
}

rtspec_status rtspec_update_runtime(rtspec_runtime* rt) {
  return guarded([&] {
    need(rt, "runtime");
    rt->rt->update_runtime();
  });
}

rtspec_status rtspec_get_specialized_function(rtspec_runtime* rt, const char* function, char** variant_id) {
  return guarded([&] {
    need(rt, "runtime");
    need(function, "function");
    need(variant_id, "variant_id");
    *variant_id = dup(rt->rt->get_specialized_function(function).id);
  });
}

rtspec_status rtspec_start_exploration(rtspec_runtime* rt) {
  return guarded([&] {
    need(rt, "runtime");
    if (rt->rt->config().policy.name == rtspec::PolicyName::None)
      throw rtspec::Error(rtspec::ErrorCode::Config, "no exploration policy configured");
    rt->rt->start_configured_policy();
  });
}

rtspec_status rtspec_end_exploration(rtspec_runtime* rt) {
  return guarded([&] {
    need(rt, "runtime");
    rt->rt->end_exploration();
  });
}

rtspec_status rtspec_call(rtspec_runtime* rt, const char* function, rtspec_value* args, size_t nargs,
                          rtspec_result* out) {
  return guarded([&] {
    need(rt, "runtime");
    need(function, "function");
    if (nargs) need(args, "args");
    std::vector<rtspec::Value> vals;
    for (size_t i = 0; i < nargs; ++i) {
      const auto& a = args[i];
      switch (a.kind) {
        case RTSPEC_I64: vals.emplace_back(a.i); break;
        case RTSPEC_F64: vals.emplace_back(a.f); break;
        case RTSPEC_BOOL: vals.emplace_back(a.b != 0); break;
        case RTSPEC_I64_ARRAY:
          if (a.length) need(a.i_array, "i_array");
          vals.emplace_back(std::vector<int64_t>(a.i_array, a.i_array + a.length));
          break;
        case RTSPEC_F64_ARRAY:
          if (a.length) need(a.f_array, "f_array");
          vals.emplace_back(std::vector<double>(a.f_array, a.f_array + a.length));
          break;
        default:
          throw rtspec::Error(rtspec::ErrorCode::InvalidArgument, "bad argument kind");
      }
    }
    auto r = rt->rt->call(function, vals);
    for (size_t i = 0; i < nargs; ++i) {
      if (auto* v = std::get_if<std::vector<int64_t>>(&vals[i]))
        std::copy(v->begin(), v->end(), args[i].i_array);
      else if (auto* d = std::get_if<std::vector<double>>(&vals[i]))
        std::copy(d->begin(), d->end(), args[i].f_array);
    }
    if (out) {
      *out = rtspec_result{};
      if (auto* i = std::get_if<int64_t>(&r.value)) {
        out->kind = RTSPEC_I64;
        out->i = *i;
      } else if (auto* f = std::get_if<double>(&r.value)) {
        out->kind = RTSPEC_F64;
        out->f = *f;
      } else {
        out->kind = RTSPEC_BOOL;
        out->b = std::get<bool>(r.value) ? 1 : 0;
      }
      out->ops = r.ops;
      out->guard_failed = r.guard_failed;
      out->fallback_used = r.fallback_used;
      out->effects = r.effects.size();
    }
  });
}

rtspec_status rtspec_register_cleanup(rtspec_runtime* rt, const char* function, rtspec_cleanup_fn cb, void* user) {
  return guarded([&] {
    need(rt, "runtime");
    need(function, "function");
    if (!cb) {
      rt->rt->register_cleanup(function, nullptr);
      return;
    }
    rt->rt->register_cleanup(function, [cb, user](const std::string& fn, const std::vector<rtspec::Value>&,
                                                   const std::vector<rtspec::EffectRecord>& effects) {
      cb(fn.c_str(), effects.size(), user);
    });
  });
}

rtspec_status rtspec_replace_function(rtspec_runtime* rt, const char* function_text) {
  return guarded([&] {
    need(rt, "runtime");
    need(function_text, "function_text");
    auto p = rtspec::ir::parse_program_unchecked(function_text);
    if (p.functions.size() != 1)
      throw rtspec::Error(rtspec::ErrorCode::InvalidArgument, "expected exactly one function");
    rt->rt->replace_function(p.functions.begin()->second);
  });
}

rtspec_status rtspec_counters(rtspec_runtime* rt, uint64_t* calls, uint64_t* guard_failures) {
  return guarded([&] {
    need(rt, "runtime");
    if (calls) *calls = rt->rt->total_calls();
    if (guard_failures) *guard_failures = rt->rt->total_guard_failures();
  });
}

rtspec_status rtspec_metrics_csv(rtspec_runtime* rt, char** csv) {
  return guarded([&] {
    need(rt, "runtime");
    need(csv, "csv");
    bool wall = rt->rt->config().wallclock;
    std::string s = rtspec::metrics_csv_header(wall) + "\n";
    for (const auto& w : rt->rt->windows()) s += rtspec::metrics_csv_row(w, wall) + "\n";
    *csv = dup(s);
  });
}

rtspec_status rtspec_exploration_csv(rtspec_runtime* rt, char** csv) {
  return guarded([&] {
    need(rt, "runtime");
    need(csv, "csv");
    std::string s = rtspec::exploration_csv_header() + "\n";
    for (const auto& e : rt->rt->trace()) s += rtspec::exploration_csv_row(e) + "\n";
    *csv = dup(s);
  });
}

rtspec_status rtspec_hook_log(rtspec_runtime* rt, char** text) {
  return guarded([&] {
    need(rt, "runtime");
    need(text, "text");
    std::string s;
    for (const auto& h : rt->rt->hook_log()) s += h.hook + " " + h.target + " " + h.detail + "\n";
    *text = dup(s);
  });
}

rtspec_status rtspec_run_config(const char* config_json, const char* out_dir, int has_seed, uint64_t seed,
                                int wallclock, char** summary) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out_dir, "out_dir");
    rtspec::RunOptions opts;
    if (has_seed) opts.seed = seed;
    opts.wallclock = wallclock != 0;
    auto out = rtspec::run_to_dir(config_json, out_dir, opts);
    if (summary) *summary = dup(out.summary);
  });
}

rtspec_status rtspec_specialize_text(const char* program_text, const char* point, const char* value, int no_guard,
                                     int unroll_cap, char** report) {
  return guarded([&] {
    need(program_text, "program_text");
    need(point, "point");
    need(value, "value");
    need(report, "report");
    rtspec::SpecializeRequest req{program_text, point, value, no_guard != 0, unroll_cap};
    *report = dup(rtspec::specialize_report(req));
  });
}

rtspec_status rtspec_report(const char* dir, char** table) {
  return guarded([&] {
    need(dir, "dir");
    need(table, "table");
    *table = dup(rtspec::report_dir(dir));
  });
}

}  // extern "C"
