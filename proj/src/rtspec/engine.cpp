#include "rtspec/engine.hpp"

#include <cstring>

#include "rtspec/arith.hpp"

namespace rtspec {

using ir::BinOp;
using ir::CmpOp;
using ir::Expr;
using ir::ScalarType;
using ir::Stmt;

std::string_view to_string(TrapKind k) {
  switch (k) {
    case TrapKind::DivByZero: return "div_by_zero";
    case TrapKind::OobIndex: return "oob_index";
    case TrapKind::Type: return "type";
    case TrapKind::BadStep: return "bad_step";
    case TrapKind::Guard: return "guard";
  }
  return "unknown";
}

Trap::Trap(TrapKind kind, std::string function, int stmt_index, std::string detail,
           std::vector<EffectRecord> effects)
    : Error(ErrorCode::Trap, std::string(to_string(kind)) + " in " + function + " at stmt " +
                                 std::to_string(stmt_index) +
                                 (detail.empty() ? std::string() : ": " + detail)),
      kind_(kind),
      function_(std::move(function)),
      stmt_index_(stmt_index),
      effects_(std::move(effects)) {}

std::optional<Scalar> as_scalar(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return Scalar{*i};
  if (const auto* d = std::get_if<double>(&v)) return Scalar{*d};
  if (const auto* b = std::get_if<bool>(&v)) return Scalar{*b};
  return std::nullopt;
}

Value to_value(const Scalar& s) {
  return std::visit([](auto x) -> Value { return x; }, s);
}

// --- compiled form ---------------------------------------------------------

union Slot {
  std::int64_t i;
  double f;
};

enum class Op : std::uint8_t {
  Const, Var, Version,
  AddI, SubI, MulI, DivI, ModI,
  AddF, SubF, MulF, DivF,
  EqI, NeI, LtI, LeI, GtI, GeI,
  EqF, NeF, LtF, LeF, GtF, GeF,
  LoadI, LoadF,
};

struct Node {
  Op op = Op::Const;
  std::uint32_t a = 0, b = 0;
  std::uint32_t slot = 0;
  Slot imm{};
};

struct CallArg {
  bool array = false;
  std::uint32_t index = 0;  // expression root or caller array slot
};

struct CStmt {
  Stmt::Kind kind = Stmt::Kind::Return;
  std::uint32_t slot = 0;  // Assign/Call target, loop var, Store array
  bool has_target = false;
  std::uint32_t e[3] = {0, 0, 0};
  std::uint32_t body = 0, orelse = 0;
  std::uint32_t cost = 1;
  int index = 0;
  Engine::FnEntry* callee = nullptr;
  std::uint32_t first = 0, last = 0;  // call args or guard terms
  std::uint32_t tag = 0;
  ScalarType type = ScalarType::Int64;  // emit payload / call result
};

struct ParamBinding {
  bool array = false;
  ir::ParamType type = ir::ParamType::Int64;
  std::uint32_t slot = 0;
};

struct CompiledFunction {
  std::string name;
  std::vector<Node> nodes;
  std::vector<CStmt> stmts;
  std::vector<std::vector<std::uint32_t>> blocks;
  std::vector<CallArg> call_args;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> guard_terms;  // root, node count
  std::vector<std::string> tags;
  std::vector<ParamBinding> params;
  std::uint32_t n_slots = 0;
  std::uint32_t n_arrays = 0;
  ScalarType return_type = ScalarType::Int64;
};

struct Engine::FnEntry {
  std::string name;
  std::shared_ptr<const Variant> generic, active;
  std::shared_ptr<CompiledFunction> generic_code, active_code;
  VariantStats* active_stats = nullptr;
  std::int64_t version = 0;
  CleanupFn cleanup;
};

struct Engine::CacheEntry {
  std::shared_ptr<const Variant> variant;
  std::int64_t version = 0;
  std::vector<Value> args_in, args_out;
  std::vector<bool> changed;  // args_out[i] differs from args_in[i]
  ExecResult result;
  std::size_t bytes = 0;
};

namespace {

class Compiler {
 public:
  Compiler(const ir::FunctionDef& f, const std::function<Engine::FnEntry*(const std::string&)>& resolve)
      : f_(f), resolve_(resolve) {}

  std::shared_ptr<CompiledFunction> run() {
    auto c = std::make_shared<CompiledFunction>();
    c_ = c.get();
    c_->name = f_.name;
    c_->return_type = f_.return_type.value_or(ScalarType::Int64);
    for (const auto& p : f_.params) {
      ParamBinding b{ir::is_array(p.type), p.type, 0};
      if (b.array) {
        b.slot = c_->n_arrays++;
        arrays_[p.name] = {b.slot, p.type == ir::ParamType::ArrayFloat64};
      } else {
        b.slot = new_slot(p.name, *ir::scalar_of(p.type));
      }
      c_->params.push_back(b);
    }
    for (const auto& l : f_.locals) new_slot(l.name, l.type);
    c_->blocks.emplace_back();
    auto body = block(f_.body);
    c_->blocks[0] = std::move(body);
    return c;
  }

 private:
  struct Var {
    std::uint32_t slot;
    ScalarType type;
  };

  std::uint32_t new_slot(const std::string& name, ScalarType t) {
    std::uint32_t s = c_->n_slots++;
    vars_[name] = {s, t};
    return s;
  }

  std::pair<std::uint32_t, ScalarType> expr(const Expr& e) {
    Node n;
    ScalarType t = ScalarType::Int64;
    switch (e.kind) {
      case Expr::Kind::Const:
        n.op = Op::Const;
        t = ir::type_of(e.value);
        if (t == ScalarType::Float64)
          n.imm.f = std::get<double>(e.value);
        else if (t == ScalarType::Bool)
          n.imm.i = std::get<bool>(e.value) ? 1 : 0;
        else
          n.imm.i = std::get<std::int64_t>(e.value);
        break;
      case Expr::Kind::Var: {
        auto it = vars_.find(e.name);
        if (it == vars_.end()) throw Error(ErrorCode::Validation, f_.name + ": undefined variable " + e.name);
        n.op = Op::Var;
        n.slot = it->second.slot;
        t = it->second.type;
        break;
      }
      case Expr::Kind::Version:
        n.op = Op::Version;
        break;
      case Expr::Kind::Load: {
        auto it = arrays_.find(e.name);
        if (it == arrays_.end()) throw Error(ErrorCode::Validation, f_.name + ": unknown array " + e.name);
        n.a = expr(e.args[0]).first;
        n.slot = it->second.first;
        n.op = it->second.second ? Op::LoadF : Op::LoadI;
        t = it->second.second ? ScalarType::Float64 : ScalarType::Int64;
        break;
      }
      case Expr::Kind::Bin: {
        auto [a, ta] = expr(e.args[0]);
        n.a = a;
        n.b = expr(e.args[1]).first;
        t = ta;
        static constexpr Op int_ops[] = {Op::AddI, Op::SubI, Op::MulI, Op::DivI, Op::ModI};
        static constexpr Op flt_ops[] = {Op::AddF, Op::SubF, Op::MulF, Op::DivF, Op::DivF};
        n.op = (ta == ScalarType::Float64 ? flt_ops : int_ops)[static_cast<int>(e.bin)];
        break;
      }
      case Expr::Kind::Cmp: {
        auto [a, ta] = expr(e.args[0]);
        n.a = a;
        n.b = expr(e.args[1]).first;
        t = ScalarType::Bool;
        static constexpr Op int_ops[] = {Op::EqI, Op::NeI, Op::LtI, Op::LeI, Op::GtI, Op::GeI};
        static constexpr Op flt_ops[] = {Op::EqF, Op::NeF, Op::LtF, Op::LeF, Op::GtF, Op::GeF};
        n.op = (ta == ScalarType::Float64 ? flt_ops : int_ops)[static_cast<int>(e.cmp)];
        break;
      }
    }
    c_->nodes.push_back(n);
    return {static_cast<std::uint32_t>(c_->nodes.size() - 1), t};
  }

  std::uint32_t root(const Expr& e, CStmt& st) {
    st.cost += static_cast<std::uint32_t>(ir::count_nodes(e));
    return expr(e).first;
  }

  std::uint32_t new_block(const std::vector<Stmt>& body) {
    auto id = static_cast<std::uint32_t>(c_->blocks.size());
    c_->blocks.emplace_back();
    auto b = block(body);
    c_->blocks[id] = std::move(b);
    return id;
  }

  std::vector<std::uint32_t> block(const std::vector<Stmt>& body) {
    std::vector<std::uint32_t> out;
    for (const auto& s : body) {
      CStmt st;
      st.kind = s.kind;
      st.index = counter_++;
      auto at = static_cast<std::uint32_t>(c_->stmts.size());
      c_->stmts.emplace_back();
      switch (s.kind) {
        case Stmt::Kind::Assign:
          st.e[0] = root(s.exprs[0], st);
          st.slot = vars_.at(s.name).slot;
          break;
        case Stmt::Kind::Store: {
          const auto& arr = arrays_.at(s.name);
          st.slot = arr.first;
          st.type = arr.second ? ScalarType::Float64 : ScalarType::Int64;
          st.e[0] = root(s.exprs[0], st);
          st.e[1] = root(s.exprs[1], st);
          break;
        }
        case Stmt::Kind::For: {
          for (int i = 0; i < 3; ++i) st.e[i] = root(s.exprs[static_cast<std::size_t>(i)], st);
          auto saved = vars_.find(s.name) != vars_.end() ? std::optional<Var>(vars_[s.name]) : std::nullopt;
          st.slot = new_slot(s.name, ScalarType::Int64);
          st.body = new_block(s.body);
          if (saved)
            vars_[s.name] = *saved;
          else
            vars_.erase(s.name);
          break;
        }
        case Stmt::Kind::If:
          st.e[0] = root(s.exprs[0], st);
          st.body = new_block(s.body);
          st.orelse = new_block(s.orelse);
          break;
        case Stmt::Kind::Return:
          st.e[0] = root(s.exprs[0], st);
          break;
        case Stmt::Kind::Call: {
          st.callee = resolve_(s.name);
          st.first = static_cast<std::uint32_t>(c_->call_args.size());
          for (const auto& a : s.exprs) {
            auto it = a.kind == Expr::Kind::Var ? arrays_.find(a.name) : arrays_.end();
            if (it != arrays_.end()) {
              st.cost += 1;
              c_->call_args.push_back({true, it->second.first});
            } else {
              c_->call_args.push_back({false, root(a, st)});
            }
          }
          st.last = static_cast<std::uint32_t>(c_->call_args.size());
          if (s.into) {
            st.has_target = true;
            st.slot = vars_.at(*s.into).slot;
          }
          break;
        }
        case Stmt::Kind::Emit: {
          st.tag = static_cast<std::uint32_t>(c_->tags.size());
          c_->tags.push_back(s.tag);
          auto [r, t] = expr(s.exprs[0]);
          st.e[0] = r;
          st.type = t;
          st.cost += static_cast<std::uint32_t>(ir::count_nodes(s.exprs[0]));
          break;
        }
        case Stmt::Kind::Guard:
          st.first = static_cast<std::uint32_t>(c_->guard_terms.size());
          for (const auto& term : s.exprs)
            c_->guard_terms.emplace_back(expr(term).first,
                                         static_cast<std::uint32_t>(ir::count_nodes(term)));
          st.last = static_cast<std::uint32_t>(c_->guard_terms.size());
          break;
      }
      c_->stmts[at] = st;
      out.push_back(at);
    }
    return out;
  }

  const ir::FunctionDef& f_;
  const std::function<Engine::FnEntry*(const std::string&)>& resolve_;
  CompiledFunction* c_ = nullptr;
  std::map<std::string, Var> vars_;
  std::map<std::string, std::pair<std::uint32_t, bool>> arrays_;
  int counter_ = 0;
};

struct ArrayRef {
  void* data = nullptr;
  std::size_t size = 0;
};

Scalar to_scalar(Slot s, ScalarType t) {
  switch (t) {
    case ScalarType::Int64: return s.i;
    case ScalarType::Float64: return s.f;
    case ScalarType::Bool: return s.i != 0;
  }
  return s.i;
}

enum class Flow { Next, Return, GuardFail };

struct Frame {
  const CompiledFunction* code;
  Slot* slots;
  ArrayRef* arrays;
  std::int64_t version;
  int stmt = 0;
};

}  // namespace

struct Machine {
  Engine& eng;
  std::uint64_t ops = 0;
  std::vector<EffectRecord> effects;

  [[noreturn]] void trap(const Frame& fr, TrapKind k, std::string detail) {
    throw Trap(k, fr.code->name, fr.stmt, std::move(detail), effects);
  }

  Slot eval(Frame& fr, std::uint32_t idx) {
    const Node& n = fr.code->nodes[idx];
    Slot r{};
    switch (n.op) {
      case Op::Const: return n.imm;
      case Op::Var: return fr.slots[n.slot];
      case Op::Version: r.i = fr.version; return r;
      case Op::AddI: r.i = arith::add(eval(fr, n.a).i, eval(fr, n.b).i); return r;
      case Op::SubI: r.i = arith::sub(eval(fr, n.a).i, eval(fr, n.b).i); return r;
      case Op::MulI: r.i = arith::mul(eval(fr, n.a).i, eval(fr, n.b).i); return r;
      case Op::DivI:
      case Op::ModI: {
        std::int64_t a = eval(fr, n.a).i, b = eval(fr, n.b).i;
        if (b == 0) trap(fr, TrapKind::DivByZero, n.op == Op::DivI ? "integer division" : "modulo");
        r.i = n.op == Op::DivI ? arith::div(a, b) : arith::mod(a, b);
        return r;
      }
      case Op::AddF: r.f = eval(fr, n.a).f + eval(fr, n.b).f; return r;
      case Op::SubF: r.f = eval(fr, n.a).f - eval(fr, n.b).f; return r;
      case Op::MulF: r.f = eval(fr, n.a).f * eval(fr, n.b).f; return r;
      case Op::DivF: {
        double a = eval(fr, n.a).f, b = eval(fr, n.b).f;
        if (b == 0.0) trap(fr, TrapKind::DivByZero, "float division");
        r.f = a / b;
        return r;
      }
      case Op::EqI: r.i = eval(fr, n.a).i == eval(fr, n.b).i; return r;
      case Op::NeI: r.i = eval(fr, n.a).i != eval(fr, n.b).i; return r;
      case Op::LtI: r.i = eval(fr, n.a).i < eval(fr, n.b).i; return r;
      case Op::LeI: r.i = eval(fr, n.a).i <= eval(fr, n.b).i; return r;
      case Op::GtI: r.i = eval(fr, n.a).i > eval(fr, n.b).i; return r;
      case Op::GeI: r.i = eval(fr, n.a).i >= eval(fr, n.b).i; return r;
      case Op::EqF: r.i = eval(fr, n.a).f == eval(fr, n.b).f; return r;
      case Op::NeF: r.i = eval(fr, n.a).f != eval(fr, n.b).f; return r;
      case Op::LtF: r.i = eval(fr, n.a).f < eval(fr, n.b).f; return r;
      case Op::LeF: r.i = eval(fr, n.a).f <= eval(fr, n.b).f; return r;
      case Op::GtF: r.i = eval(fr, n.a).f > eval(fr, n.b).f; return r;
      case Op::GeF: r.i = eval(fr, n.a).f >= eval(fr, n.b).f; return r;
      case Op::LoadI:
      case Op::LoadF: {
        std::int64_t i = eval(fr, n.a).i;
        const ArrayRef& arr = fr.arrays[n.slot];
        if (static_cast<std::uint64_t>(i) >= arr.size)
          trap(fr, TrapKind::OobIndex, "load index " + std::to_string(i) + " of " + std::to_string(arr.size));
        if (n.op == Op::LoadI)
          r.i = static_cast<const std::int64_t*>(arr.data)[i];
        else
          r.f = static_cast<const double*>(arr.data)[i];
        return r;
      }
    }
    return r;
  }

  Flow exec(Frame& fr, std::uint32_t block, Slot& ret) {
    const CompiledFunction& c = *fr.code;
    for (std::uint32_t si : c.blocks[block]) {
      const CStmt& s = c.stmts[si];
      fr.stmt = s.index;
      ops += s.cost;
      switch (s.kind) {
        case Stmt::Kind::Assign:
          fr.slots[s.slot] = eval(fr, s.e[0]);
          break;
        case Stmt::Kind::Store: {
          std::int64_t i = eval(fr, s.e[0]).i;
          Slot v = eval(fr, s.e[1]);
          ArrayRef& arr = fr.arrays[s.slot];
          if (static_cast<std::uint64_t>(i) >= arr.size)
            trap(fr, TrapKind::OobIndex, "store index " + std::to_string(i) + " of " + std::to_string(arr.size));
          if (s.type == ScalarType::Float64)
            static_cast<double*>(arr.data)[i] = v.f;
          else
            static_cast<std::int64_t*>(arr.data)[i] = v.i;
          break;
        }
        case Stmt::Kind::For: {
          std::int64_t v = eval(fr, s.e[0]).i;
          std::int64_t hi = eval(fr, s.e[1]).i;
          std::int64_t step = eval(fr, s.e[2]).i;
          if (step <= 0) trap(fr, TrapKind::BadStep, "step " + std::to_string(step));
          for (;;) {
            ++ops;
            if (v >= hi) break;
            fr.slots[s.slot].i = v;
            Flow f = exec(fr, s.body, ret);
            if (f != Flow::Next) return f;
            fr.stmt = s.index;
            if (__builtin_add_overflow(v, step, &v)) {
              ++ops;
              break;
            }
          }
          break;
        }
        case Stmt::Kind::If: {
          Flow f = exec(fr, eval(fr, s.e[0]).i ? s.body : s.orelse, ret);
          if (f != Flow::Next) return f;
          break;
        }
        case Stmt::Kind::Return:
          ret = eval(fr, s.e[0]);
          return Flow::Return;
        case Stmt::Kind::Call: {
          Slot r = call_nested(fr, s);
          if (s.has_target) fr.slots[s.slot] = r;
          break;
        }
        case Stmt::Kind::Emit: {
          Slot v = eval(fr, s.e[0]);
          effects.push_back({c.name, c.tags[s.tag], to_scalar(v, s.type)});
          break;
        }
        case Stmt::Kind::Guard:
          for (std::uint32_t t = s.first; t < s.last; ++t) {
            ops += c.guard_terms[t].second;
            if (!eval(fr, c.guard_terms[t].first).i) return Flow::GuardFail;
          }
          break;
      }
    }
    return Flow::Next;
  }

  // Runs one function body; returns false on guard failure.
  bool run(const CompiledFunction& code, std::int64_t version, const Slot* scalar_args,
           const ArrayRef* array_args, Slot& ret) {
    std::vector<Slot> slots(code.n_slots, Slot{0});
    std::vector<ArrayRef> arrays(code.n_arrays);
    std::size_t si = 0, ai = 0;
    for (const auto& p : code.params) {
      if (p.array)
        arrays[p.slot] = array_args[ai++];
      else
        slots[p.slot] = scalar_args[si++];
    }
    Frame fr{&code, slots.data(), arrays.data(), version};
    Flow f = exec(fr, 0, ret);
    if (f == Flow::GuardFail) return false;
    if (f != Flow::Return) trap(fr, TrapKind::Type, "fell off the end without returning");
    return true;
  }

  struct Outcome {
    Slot value;
    bool guard_failed = false;
  };

  // Dispatch through the table with fallback. `materialize` builds the
  // argument vector handed to the cleanup callback.
  Outcome dispatch(Engine::FnEntry& e, const Slot* scalars, const ArrayRef* arrays,
                   const std::function<std::vector<Value>()>& materialize) {
    std::uint64_t start = ops;
    std::size_t effects_start = effects.size();
    auto active = e.active_code;
    auto* stats = e.active_stats;
    Outcome out;
    ++stats->calls;
    bool ok = run(*active, e.version, scalars, arrays, out.value);
    if (!ok) {
      ++stats->guard_failures;
      out.guard_failed = true;
      if (e.active == e.generic)
        throw Trap(TrapKind::Guard, e.name, 0, "check failed in the generic function", effects);
      if (e.cleanup) {
        std::vector<EffectRecord> partial(effects.begin() + static_cast<std::ptrdiff_t>(effects_start), effects.end());
        e.cleanup(e.name, materialize(), partial);
      }
      if (!run(*e.generic_code, e.version, scalars, arrays, out.value))
        throw Trap(TrapKind::Guard, e.name, 0, "check failed in the generic function", effects);
    }
    stats->total_ops += ops - start;
    return out;
  }

  Slot call_nested(Frame& fr, const CStmt& s) {
    ++eng.nested_calls_;
    const CompiledFunction& c = *fr.code;
    std::vector<Slot> scalars;
    std::vector<ArrayRef> arrays;
    std::vector<bool> is_array;
    for (std::uint32_t i = s.first; i < s.last; ++i) {
      const CallArg& a = c.call_args[i];
      if (a.array)
        arrays.push_back(fr.arrays[a.index]);
      else
        scalars.push_back(eval(fr, a.index));
    }
    Engine::FnEntry& callee = *s.callee;
    const CompiledFunction& target = *callee.generic_code;
    auto materialize = [&]() {
      std::vector<Value> out;
      std::size_t si = 0, ai = 0;
      for (const auto& p : target.params) {
        if (p.array) {
          const ArrayRef& r = arrays[ai++];
          if (p.type == ir::ParamType::ArrayFloat64) {
            const auto* d = static_cast<const double*>(r.data);
            out.emplace_back(std::vector<double>(d, d + r.size));
          } else {
            const auto* d = static_cast<const std::int64_t*>(r.data);
            out.emplace_back(std::vector<std::int64_t>(d, d + r.size));
          }
        } else {
          out.push_back(to_value(to_scalar(scalars[si++], *ir::scalar_of(p.type))));
        }
      }
      return out;
    };
    Outcome o = dispatch(callee, scalars.data(), arrays.data(), materialize);
    fr.stmt = s.index;
    return o.value;
  }
};

// --- Engine -------------------------------------------------------------------

Engine::Engine(ir::Program program) : program_(std::move(program)) {
  for (const auto& [name, f] : program_.functions) {
    auto e = std::make_unique<FnEntry>();
    e->name = name;
    fns_.emplace(name, std::move(e));
  }
  for (const auto& [name, f] : program_.functions) {
    auto& e = *fns_.at(name);
    e.generic = std::make_shared<const Variant>(make_generic(program_, name));
    e.generic_code = compile(e.generic->code);
    e.active = e.generic;
    e.active_code = e.generic_code;
    e.active_stats = &stats_[e.generic->id];
  }
}

Engine::~Engine() = default;

Engine::FnEntry& Engine::entry(const std::string& fn) {
  auto it = fns_.find(fn);
  if (it == fns_.end()) throw Error(ErrorCode::UnknownFunction, "unknown function '" + fn + "'");
  return *it->second;
}

const Engine::FnEntry& Engine::entry(const std::string& fn) const {
  auto it = fns_.find(fn);
  if (it == fns_.end()) throw Error(ErrorCode::UnknownFunction, "unknown function '" + fn + "'");
  return *it->second;
}

std::shared_ptr<CompiledFunction> Engine::compile(const ir::FunctionDef& f) {
  std::function<FnEntry*(const std::string&)> resolve = [this](const std::string& n) {
    return &entry(n);
  };
  return Compiler(f, resolve).run();
}

void Engine::set_active_variant(const std::string& fn, std::shared_ptr<const Variant> v) {
  auto& e = entry(fn);
  if (!v || v->base != fn)
    throw Error(ErrorCode::InvalidArgument, "variant does not belong to '" + fn + "'");
  if (v->is_generic()) {
    reset_to_generic(fn);
    return;
  }
  e.active_code = compile(v->code);
  e.active = std::move(v);
  e.active_stats = &stats_[e.active->id];
}

void Engine::reset_to_generic(const std::string& fn) {
  auto& e = entry(fn);
  e.active = e.generic;
  e.active_code = e.generic_code;
  e.active_stats = &stats_[e.generic->id];
}

const Variant& Engine::active_variant(const std::string& fn) const { return *entry(fn).active; }
const Variant& Engine::generic_variant(const std::string& fn) const { return *entry(fn).generic; }

void Engine::replace_function(ir::FunctionDef f) {
  auto& e = entry(f.name);
  bool was_generic = e.active == e.generic;
  program_.functions[f.name] = std::move(f);
  e.generic = std::make_shared<const Variant>(make_generic(program_, e.name));
  e.generic_code = compile(e.generic->code);
  if (was_generic) reset_to_generic(e.name);
  ++e.version;
  cache_.clear();
  cache_order_.clear();
  cache_bytes_ = 0;
}

std::int64_t Engine::table_version(const std::string& fn) const { return entry(fn).version; }

void Engine::bump_table_version(const std::string& fn) { ++entry(fn).version; }

void Engine::register_cleanup(const std::string& fn, CleanupFn cb) { entry(fn).cleanup = std::move(cb); }

void Engine::set_result_cache(bool enabled, std::size_t max_bytes) {
  cache_enabled_ = enabled;
  cache_max_bytes_ = max_bytes;
  if (!enabled) {
    cache_.clear();
    cache_order_.clear();
    cache_bytes_ = 0;
  }
}

const VariantStats& Engine::stats(const std::string& variant_id) const {
  static const VariantStats empty;
  auto it = stats_.find(variant_id);
  return it == stats_.end() ? empty : it->second;
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t w) {
  h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h * 0xff51afd7ed558ccdULL;
}

std::uint64_t hash_args(const void* variant, std::int64_t version, const std::vector<Value>& args) {
  std::uint64_t h = mix(reinterpret_cast<std::uintptr_t>(variant), static_cast<std::uint64_t>(version));
  for (const auto& v : args) {
    h = mix(h, v.index());
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::vector<std::int64_t>> || std::is_same_v<T, std::vector<double>>) {
            h = mix(h, x.size());
            // four independent lanes keep large arrays cheap to key
            std::uint64_t lane[4] = {1, 2, 3, 4};
            std::size_t i = 0;
            for (; i + 4 <= x.size(); i += 4)
              for (std::size_t k = 0; k < 4; ++k) {
                std::uint64_t w;
                std::memcpy(&w, &x[i + k], sizeof w);
                lane[k] = (lane[k] ^ w) * 0x9e3779b97f4a7c15ULL;
              }
            for (; i < x.size(); ++i) {
              std::uint64_t w;
              std::memcpy(&w, &x[i], sizeof w);
              lane[0] = (lane[0] ^ w) * 0x9e3779b97f4a7c15ULL;
            }
            for (auto l : lane) h = mix(h, l);
          } else {
            std::uint64_t w = 0;
            std::memcpy(&w, &x, sizeof x);
            h = mix(h, w);
          }
        },
        v);
  }
  return h;
}

std::size_t value_bytes(const std::vector<Value>& args) {
  std::size_t n = 0;
  for (const auto& v : args) {
    if (const auto* a = std::get_if<std::vector<std::int64_t>>(&v)) n += a->size() * 8;
    else if (const auto* d = std::get_if<std::vector<double>>(&v)) n += d->size() * 8;
    else n += 16;
  }
  return n;
}

}  // namespace

ExecResult Engine::call(const std::string& fn, std::vector<Value>& args) {
  auto& e = entry(fn);
  const auto& params = e.generic->code.params;
  if (args.size() != params.size())
    throw Trap(TrapKind::Type, fn, 0,
               "expected " + std::to_string(params.size()) + " arguments, got " + std::to_string(args.size()));
  std::vector<Slot> scalars;
  std::vector<ArrayRef> arrays;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& v = args[i];
    bool ok = false;
    switch (params[i].type) {
      case ir::ParamType::Int64:
        if ((ok = std::holds_alternative<std::int64_t>(v))) scalars.push_back(Slot{std::get<std::int64_t>(v)});
        break;
      case ir::ParamType::Float64:
        if ((ok = std::holds_alternative<double>(v))) {
          Slot s;
          s.f = std::get<double>(v);
          scalars.push_back(s);
        }
        break;
      case ir::ParamType::Bool:
        if ((ok = std::holds_alternative<bool>(v))) scalars.push_back(Slot{std::get<bool>(v) ? 1 : 0});
        break;
      case ir::ParamType::ArrayInt64:
        if ((ok = std::holds_alternative<std::vector<std::int64_t>>(v))) {
          auto& a = std::get<std::vector<std::int64_t>>(args[i]);
          arrays.push_back({a.data(), a.size()});
        }
        break;
      case ir::ParamType::ArrayFloat64:
        if ((ok = std::holds_alternative<std::vector<double>>(v))) {
          auto& a = std::get<std::vector<double>>(args[i]);
          arrays.push_back({a.data(), a.size()});
        }
        break;
    }
    if (!ok)
      throw Trap(TrapKind::Type, fn, 0,
                 "argument " + std::to_string(i) + " must be " + std::string(ir::to_string(params[i].type)));
  }

  std::uint64_t key = 0;
  if (cache_enabled_ && depth_ == 0) {
    key = hash_args(e.active.get(), e.version, args);
    auto [lo, hi] = cache_.equal_range(key);
    for (auto it = lo; it != hi; ++it) {
      const CacheEntry& c = *it->second;
      if (c.variant != e.active || c.version != e.version || c.args_in != args) continue;
      ++cache_hits_;
      auto* st = e.active_stats;
      ++st->calls;
      st->total_ops += c.result.ops;
      if (c.result.guard_failed) {
        ++st->guard_failures;
        if (e.cleanup) {
          ++depth_;
          try {
            e.cleanup(fn, c.args_in, {});
          } catch (...) {
            --depth_;
            throw;
          }
          --depth_;
        }
      }
      for (std::size_t i = 0; i < args.size(); ++i)
        if (c.changed[i]) args[i] = c.args_out[i];
      ExecResult r = c.result;
      r.cached = true;
      return r;
    }
  }

  Machine m{*this, 0, {}};
  ExecResult r;
  r.variant_id = e.active->id;
  auto active = e.active;
  std::int64_t version = e.version;
  std::vector<Value> args_in;
  if (cache_enabled_ && depth_ == 0) args_in = args;
  std::uint64_t nested_before = nested_calls_;
  ++depth_;
  Machine::Outcome o;
  try {
    o = m.dispatch(e, scalars.data(), arrays.data(), [&]() { return args; });
  } catch (...) {
    --depth_;
    throw;
  }
  --depth_;
  r.value = to_scalar(o.value, e.generic->code.return_type.value_or(ScalarType::Int64));
  r.ops = m.ops;
  r.guard_failed = o.guard_failed;
  r.fallback_used = o.guard_failed;
  r.effects = std::move(m.effects);

  if (cache_enabled_ && depth_ == 0 && nested_calls_ == nested_before) {
    auto c = std::make_unique<CacheEntry>();
    c->variant = active;
    c->version = version;
    c->args_in = std::move(args_in);
    c->args_out = args;
    for (std::size_t i = 0; i < args.size(); ++i) c->changed.push_back(!(c->args_in[i] == args[i]));
    c->result = r;
    c->bytes = value_bytes(c->args_in) * 2 + 256;
    if (c->bytes <= cache_max_bytes_) {
      while (cache_bytes_ + c->bytes > cache_max_bytes_ && !cache_order_.empty()) {
        cache_bytes_ -= cache_order_.front()->second->bytes;
        cache_.erase(cache_order_.front());
        cache_order_.pop_front();
      }
      cache_bytes_ += c->bytes;
      cache_order_.push_back(cache_.emplace(key, std::move(c)));
    }
  }
  return r;
}

}  // namespace rtspec
