#include "rtspec/specializer.hpp"

#include <set>

#include "rtspec/error.hpp"

namespace rtspec {

using ir::Expr;
using ir::FunctionDef;
using ir::Stmt;

SpecPoint SpecPoint::from_decl(const ir::SpecPointDecl& d) {
  SpecPoint sp;
  sp.id = {d.function, d.variable};
  sp.kind = d.kind;
  sp.driver_coupled = d.driver_coupled;
  sp.guard_enabled = d.kind == ir::PointKind::Workload;
  return sp;
}

std::string PinSet::label() const {
  std::string out;
  for (const auto& [var, value] : values) {
    if (!out.empty()) out += "|";
    out += var + "=" + ir::format_scalar(value);
  }
  return out;
}

bool operator==(const PinSet& a, const PinSet& b) {
  if (a.function != b.function || a.values.size() != b.values.size()) return false;
  auto it = b.values.begin();
  for (const auto& [k, v] : a.values) {
    if (k != it->first || !ir::same_value(v, it->second)) return false;
    ++it;
  }
  return true;
}

namespace {

const FunctionDef& lookup(const ir::Program& p, const std::string& name) {
  const auto* f = p.find(name);
  if (!f) throw Error(ErrorCode::UnknownFunction, "unknown function '" + name + "'");
  return *f;
}

void log_pass(std::vector<PassLogEntry>& log, const char* name, const FunctionDef& before,
              const FunctionDef& after) {
  log.push_back({name, ir::count_nodes(before.body), ir::count_nodes(after.body)});
}

}  // namespace

Variant make_generic(const ir::Program& p, const std::string& function) {
  const auto& f = lookup(p, function);
  Variant v;
  v.id = function + "#generic";
  v.base = function;
  v.origin = Generic{};
  v.code = f;
  return v;
}

Variant pin_and_specialize(const ir::Program& p, const PinSet& pins,
                           const SpecializeOptions& opts) {
  const auto& f = lookup(p, pins.function);
  if (pins.empty()) throw Error(ErrorCode::InvalidArgument, f.name + ": empty pin set");
  if (opts.unroll_cap < 1) throw Error(ErrorCode::InvalidArgument, "unroll_cap must be >= 1");

  if (opts.guards) {
    for (const auto& [var, value] : pins.values)
      if (!opts.unguarded.contains(var) && f.find_local(var))
        throw Error(ErrorCode::GuardOnLocal,
                    f.name + ": pinned local '" + var + "' cannot be checked at entry");
  }

  Variant v;
  v.base = f.name;
  v.origin = pins;

  FunctionDef code = substitute(f, pins);
  log_pass(v.log, "substitute", f, code);

  std::size_t generic_size = std::max<std::size_t>(1, ir::count_statements(f.body));
  std::size_t budget = generic_size * opts.growth_limit;
  for (int it = 0; it < opts.max_iterations; ++it) {
    FunctionDef start = code;
    FunctionDef next = unroll_loops(code, opts.unroll_cap, budget);
    log_pass(v.log, "unroll", code, next);
    code = std::move(next);
    next = propagate_and_fold(code);
    log_pass(v.log, "fold", code, next);
    code = std::move(next);
    next = eliminate_dead_code(code);
    log_pass(v.log, "dce", code, next);
    code = std::move(next);
    if (code == start) break;
  }
  if (ir::count_statements(code.body) > budget)
    throw Error(ErrorCode::SpecializationTooLarge,
                f.name + ": variant exceeds " + std::to_string(opts.growth_limit) +
                    "x the generic statement count");

  FunctionDef guarded = insert_guards(code, pins, opts.guards, opts.unguarded);
  log_pass(v.log, "guard", code, guarded);
  ir::annotate_function(p, guarded);
  v.code = std::move(guarded);

  if (opts.guards)
    for (const auto& [var, value] : pins.values)
      if (!opts.unguarded.contains(var)) v.guards.checks.emplace_back(var, value);

  v.id = f.name + "{" + pins.label() + "}";
  std::string flags;
  if (!opts.guards) flags += "noguard";
  for (const auto& u : opts.unguarded)
    if (opts.guards && pins.values.contains(u)) flags += (flags.empty() ? "" : ",") + ("unchecked:" + u);
  if (opts.unroll_cap != 16) flags += (flags.empty() ? "" : ",") + ("u" + std::to_string(opts.unroll_cap));
  if (!flags.empty()) v.id += "[" + flags + "]";
  return v;
}

Variant apply_hot_map(const ir::Program& p, const HotMapSpec& spec) {
  const auto& f = lookup(p, spec.function);
  if (!f.pure) throw Error(ErrorCode::NotPure, f.name + ": hot map requires a pure function");
  if (spec.entries.empty()) throw Error(ErrorCode::EmptyHotMap, f.name + ": no hot-map entries");
  const auto* key = f.find_param(spec.key);
  if (!key) throw Error(ErrorCode::UnknownPoint, f.name + ": no parameter '" + spec.key + "'");
  auto key_type = ir::scalar_of(key->type);
  if (!key_type) throw Error(ErrorCode::NotScalar, f.name + ": '" + spec.key + "' is not a scalar");

  std::set<ir::Scalar, ir::ScalarLess> seen;
  std::vector<Stmt> chain;
  chain.push_back(Stmt::guard({Expr::compare(ir::CmpOp::Eq, Expr::version(),
                                             Expr::constant(spec.table_version))}));
  for (const auto& [in, out] : spec.entries) {
    if (ir::type_of(in) != *key_type || !f.return_type || ir::type_of(out) != *f.return_type)
      throw Error(ErrorCode::PinType, f.name + ": hot-map entry " + ir::format_scalar(in) +
                                          " -> " + ir::format_scalar(out) + " has the wrong type");
    if (!seen.insert(in).second)
      throw Error(ErrorCode::InvalidArgument,
                  f.name + ": duplicate hot-map key " + ir::format_scalar(in));
    chain.push_back(Stmt::branch(Expr::compare(ir::CmpOp::Eq, Expr::var(spec.key), Expr::constant(in)),
                                 {Stmt::ret(Expr::constant(out))}, {}));
  }

  Variant v;
  v.base = f.name;
  v.origin = spec;
  v.code = f;
  v.code.body.insert(v.code.body.begin(), chain.begin(), chain.end());
  v.guards.table_version = spec.table_version;
  v.log.push_back({"hot-map", ir::count_nodes(f.body), ir::count_nodes(v.code.body)});
  v.id = f.name + "#hot" + std::to_string(spec.entries.size()) + "@v" +
         std::to_string(spec.table_version);
  return v;
}

}  // namespace rtspec
