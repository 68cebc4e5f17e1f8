#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rtspec/ir.hpp"

namespace rtspec {

using ir::Scalar;

struct SpecPointId {
  std::string function;
  std::string variable;

  std::string str() const { return function + ":" + variable; }
  friend auto operator<=>(const SpecPointId&, const SpecPointId&) = default;
};

/// A specializable variable plus the knobs that govern it.
struct SpecPoint {
  SpecPointId id;
  ir::PointKind kind = ir::PointKind::Workload;
  std::optional<std::vector<Scalar>> candidate_values;
  bool guard_enabled = true;
  bool collection_enabled = true;
  // The workload driver adopts the pinned value (the knob is tunable end-to-end).
  bool driver_coupled = false;
  // Value the fixed code passes while the point is not pinned (config knobs).
  std::optional<Scalar> default_value;

  /// Defaults from the declaration: config knobs are unguarded.
  static SpecPoint from_decl(const ir::SpecPointDecl& d);
};

/// Constant assignment for points of one function.
struct PinSet {
  std::string function;
  std::map<std::string, Scalar> values;

  std::string label() const;  // "s=4" or "b1=2|b2=8"
  bool empty() const { return values.empty(); }
  friend bool operator==(const PinSet& a, const PinSet& b);
};

struct HotMapSpec {
  std::string function;
  std::string key;  // scalar parameter the map is keyed on
  std::vector<std::pair<Scalar, Scalar>> entries;
  std::int64_t table_version = 0;
};

struct SpecializeOptions {
  int unroll_cap = 16;
  bool guards = true;
  // Pinned variables whose entry check is omitted even when guards are on.
  std::set<std::string> unguarded;
  int max_iterations = 8;
  // Reject variants whose statement count exceeds this multiple of the generic.
  std::size_t growth_limit = 64;
};

struct PassLogEntry {
  std::string pass;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
};

struct GuardInfo {
  std::vector<std::pair<std::string, Scalar>> checks;  // param == value
  std::optional<std::int64_t> table_version;           // hot-map version check
};

struct Generic {};
using VariantOrigin = std::variant<Generic, PinSet, HotMapSpec>;

/// One compiled version of a function. Immutable once built; execution
/// counters live in the engine.
struct Variant {
  std::string id;
  std::string base;
  VariantOrigin origin;
  ir::FunctionDef code;
  GuardInfo guards;
  std::vector<PassLogEntry> log;

  bool is_generic() const { return std::holds_alternative<Generic>(origin); }
  const PinSet* pins() const { return std::get_if<PinSet>(&origin); }
  const HotMapSpec* hot_map() const { return std::get_if<HotMapSpec>(&origin); }
};

Variant make_generic(const ir::Program& p, const std::string& function);

Variant pin_and_specialize(const ir::Program& p, const PinSet& pins,
                           const SpecializeOptions& opts = {});

Variant apply_hot_map(const ir::Program& p, const HotMapSpec& spec);

// Individual passes. Each takes and returns a whole function.

ir::FunctionDef substitute(const ir::FunctionDef& f, const PinSet& pins);
ir::FunctionDef propagate_and_fold(const ir::FunctionDef& f);
ir::FunctionDef eliminate_dead_code(const ir::FunctionDef& f);
/// `statement_budget` bounds the unrolled size; exceeding it throws
/// SpecializationTooLarge.
ir::FunctionDef unroll_loops(const ir::FunctionDef& f, int unroll_cap,
                             std::size_t statement_budget = SIZE_MAX);
ir::FunctionDef insert_guards(const ir::FunctionDef& f, const PinSet& pins, bool guards_enabled,
                              const std::set<std::string>& unguarded = {});

/// Folds one expression bottom-up (constant operands, algebraic identities).
ir::Expr fold_expr(const ir::Expr& e);

/// True if evaluating `e` can trap (loads, division by a non-constant or zero).
bool may_trap(const ir::Expr& e);

std::string format_pass_log(const std::vector<PassLogEntry>& log);

}  // namespace rtspec
