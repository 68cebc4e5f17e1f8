#pragma once

// Deterministic evaluator with dynamic-op accounting and per-function
// variant dispatch.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "rtspec/error.hpp"
#include "rtspec/ir.hpp"
#include "rtspec/specializer.hpp"

namespace rtspec {

using Value = std::variant<std::int64_t, double, bool, std::vector<std::int64_t>, std::vector<double>>;

enum class TrapKind { DivByZero, OobIndex, Type, BadStep, Guard };

std::string_view to_string(TrapKind k);

struct EffectRecord {
  std::string function;
  std::string tag;
  Scalar payload;
  friend bool operator==(const EffectRecord& a, const EffectRecord& b) {
    return a.function == b.function && a.tag == b.tag && ir::same_value(a.payload, b.payload);
  }
};

class Trap : public Error {
 public:
  Trap(TrapKind kind, std::string function, int stmt_index, std::string detail,
       std::vector<EffectRecord> effects = {});

  TrapKind kind() const noexcept { return kind_; }
  const std::string& function() const noexcept { return function_; }
  int stmt_index() const noexcept { return stmt_index_; }
  const std::vector<EffectRecord>& effects() const noexcept { return effects_; }

 private:
  TrapKind kind_;
  std::string function_;
  int stmt_index_;
  std::vector<EffectRecord> effects_;
};

struct ExecResult {
  Scalar value = std::int64_t{0};
  std::uint64_t ops = 0;
  bool guard_failed = false;
  bool fallback_used = false;
  std::vector<EffectRecord> effects;
  std::string variant_id;
  bool cached = false;
};

struct VariantStats {
  std::uint64_t calls = 0;
  std::uint64_t guard_failures = 0;
  std::uint64_t total_ops = 0;
};

/// Receives the function name, the argument vector and the effects the
/// failed variant produced before its check failed.
using CleanupFn = std::function<void(const std::string& function, const std::vector<Value>& args,
                                     const std::vector<EffectRecord>& effects)>;

struct CompiledFunction;

class Engine {
 public:
  explicit Engine(ir::Program program);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const ir::Program& program() const { return program_; }

  /// Calls `fn` through the dispatch table. Array arguments are updated in place.
  ExecResult call(const std::string& fn, std::vector<Value>& args);

  void set_active_variant(const std::string& fn, std::shared_ptr<const Variant> v);
  void reset_to_generic(const std::string& fn);
  const Variant& active_variant(const std::string& fn) const;
  const Variant& generic_variant(const std::string& fn) const;

  /// Replaces the generic body of `fn` (e.g. after a table update) and bumps
  /// its table version. The active variant is kept; its version check decides.
  void replace_function(ir::FunctionDef f);
  std::int64_t table_version(const std::string& fn) const;
  void bump_table_version(const std::string& fn);

  void register_cleanup(const std::string& fn, CleanupFn cb);

  /// Exact memoization of top-level calls, keyed on the active variant, the
  /// table version and a full copy of the arguments. Observable results,
  /// counters and cleanup invocations are identical with and without it.
  void set_result_cache(bool enabled, std::size_t max_bytes = std::size_t{512} << 20);
  std::uint64_t cache_hits() const { return cache_hits_; }

  const VariantStats& stats(const std::string& variant_id) const;
  const std::map<std::string, VariantStats>& all_stats() const { return stats_; }

  /// True while a call is executing (cleanup callbacks run inside a call).
  bool in_call() const { return depth_ > 0; }

  struct FnEntry;

 private:
  friend struct Machine;
  struct CacheEntry;

  FnEntry& entry(const std::string& fn);
  const FnEntry& entry(const std::string& fn) const;
  std::shared_ptr<CompiledFunction> compile(const ir::FunctionDef& f);

  ir::Program program_;
  std::map<std::string, std::unique_ptr<FnEntry>> fns_;
  std::map<std::string, VariantStats> stats_;
  int depth_ = 0;
  std::uint64_t nested_calls_ = 0;

  bool cache_enabled_ = false;
  std::size_t cache_max_bytes_ = 0;
  std::size_t cache_bytes_ = 0;
  std::uint64_t cache_hits_ = 0;
  std::multimap<std::uint64_t, std::unique_ptr<CacheEntry>> cache_;
  std::deque<std::multimap<std::uint64_t, std::unique_ptr<CacheEntry>>::iterator> cache_order_;
};

/// Converts a runtime value to a scalar if it is one.
std::optional<Scalar> as_scalar(const Value& v);
Value to_value(const Scalar& s);

}  // namespace rtspec
