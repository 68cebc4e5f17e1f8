// IR-to-IR transformations applied when a function is specialized.

#include <algorithm>
#include <cmath>
#include <functional>

#include "rtspec/arith.hpp"
#include "rtspec/error.hpp"
#include "rtspec/specializer.hpp"

namespace rtspec {

using ir::BinOp;
using ir::CmpOp;
using ir::Expr;
using ir::FunctionDef;
using ir::Stmt;

namespace {

using Env = std::map<std::string, Scalar>;

Expr replace_vars(const Expr& e, const Env& env) {
  if (e.kind == Expr::Kind::Var) {
    auto it = env.find(e.name);
    if (it != env.end()) return Expr::constant(it->second);
    return e;
  }
  Expr out = e;
  for (auto& a : out.args) a = replace_vars(a, env);
  return out;
}

void replace_vars_in(std::vector<Stmt>& body, const Env& env) {
  for (auto& s : body) {
    for (auto& e : s.exprs) e = replace_vars(e, env);
    replace_vars_in(s.body, env);
    replace_vars_in(s.orelse, env);
  }
}

bool is_int_const(const Expr& e, std::int64_t v) {
  if (!e.is_const()) return false;
  const auto* i = std::get_if<std::int64_t>(&e.value);
  return i && *i == v;
}

bool is_float_const(const Expr& e, double v) {
  if (!e.is_const()) return false;
  const auto* d = std::get_if<double>(&e.value);
  return d && *d == v && !std::signbit(*d);
}

std::optional<Scalar> fold_binary(BinOp op, const Scalar& a, const Scalar& b) {
  if (const auto* x = std::get_if<std::int64_t>(&a)) {
    std::int64_t y = std::get<std::int64_t>(b);
    switch (op) {
      case BinOp::Add: return Scalar{arith::add(*x, y)};
      case BinOp::Sub: return Scalar{arith::sub(*x, y)};
      case BinOp::Mul: return Scalar{arith::mul(*x, y)};
      case BinOp::Div: return y == 0 ? std::nullopt : std::optional<Scalar>(arith::div(*x, y));
      case BinOp::Mod: return y == 0 ? std::nullopt : std::optional<Scalar>(arith::mod(*x, y));
    }
  }
  if (const auto* x = std::get_if<double>(&a)) {
    double y = std::get<double>(b);
    switch (op) {
      case BinOp::Add: return Scalar{*x + y};
      case BinOp::Sub: return Scalar{*x - y};
      case BinOp::Mul: return Scalar{*x * y};
      case BinOp::Div: return y == 0.0 ? std::nullopt : std::optional<Scalar>(*x / y);
      case BinOp::Mod: return std::nullopt;
    }
  }
  return std::nullopt;
}

template <typename T>
bool compare(CmpOp op, T a, T b) {
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
  }
  return false;
}

Scalar fold_compare(CmpOp op, const Scalar& a, const Scalar& b) {
  if (const auto* x = std::get_if<std::int64_t>(&a)) return compare(op, *x, std::get<std::int64_t>(b));
  if (const auto* x = std::get_if<double>(&a)) return compare(op, *x, std::get<double>(b));
  return compare(op, std::get<bool>(a), std::get<bool>(b));
}

bool terminates(const std::vector<Stmt>& body);

bool terminates(const Stmt& s) {
  if (s.kind == Stmt::Kind::Return) return true;
  if (s.kind == Stmt::Kind::If) return terminates(s.body) && terminates(s.orelse);
  return false;
}

bool terminates(const std::vector<Stmt>& body) {
  return std::any_of(body.begin(), body.end(), [](const Stmt& s) { return terminates(s); });
}

// --- constant propagation ---------------------------------------------------

class Propagator {
 public:
  std::vector<Stmt> run(const std::vector<Stmt>& body, Env& env) {
    std::vector<Stmt> out;
    out.reserve(body.size());
    for (const auto& s : body) {
      Stmt t = s;
      switch (s.kind) {
        case Stmt::Kind::Assign: {
          t.exprs[0] = fold_expr(replace_vars(s.exprs[0], env));
          if (t.exprs[0].is_const())
            env[s.name] = t.exprs[0].value;
          else
            env.erase(s.name);
          break;
        }
        case Stmt::Kind::Store:
        case Stmt::Kind::Return:
        case Stmt::Kind::Emit:
          for (auto& e : t.exprs) e = fold_expr(replace_vars(e, env));
          break;
        case Stmt::Kind::Call:
          for (auto& e : t.exprs) e = fold_expr(replace_vars(e, env));
          if (s.into) env.erase(*s.into);
          break;
        case Stmt::Kind::Guard:
          break;
        case Stmt::Kind::For: {
          for (auto& e : t.exprs) e = fold_expr(replace_vars(e, env));
          std::set<std::string> killed;
          ir::collect_assigned(s.body, killed);
          killed.insert(s.name);
          for (const auto& k : killed) env.erase(k);
          Env inner = env;
          t.body = run(s.body, inner);
          break;
        }
        case Stmt::Kind::If: {
          t.exprs[0] = fold_expr(replace_vars(s.exprs[0], env));
          Env e_then = env, e_else = env;
          t.body = run(s.body, e_then);
          t.orelse = run(s.orelse, e_else);
          std::optional<bool> known;
          if (t.exprs[0].is_const()) known = std::get<bool>(t.exprs[0].value);
          bool then_ends = terminates(t.body), else_ends = terminates(t.orelse);
          if (known.value_or(false) || (!known && else_ends && !then_ends)) {
            env = std::move(e_then);
          } else if ((known && !*known) || (!known && then_ends && !else_ends)) {
            env = std::move(e_else);
          } else {
            Env meet;
            for (const auto& [k, v] : e_then) {
              auto it = e_else.find(k);
              if (it != e_else.end() && ir::same_value(it->second, v)) meet.emplace(k, v);
            }
            env = std::move(meet);
          }
          break;
        }
      }
      out.push_back(std::move(t));
    }
    return out;
  }
};

// --- dead code ----------------------------------------------------------------

std::vector<Stmt> prune(const std::vector<Stmt>& body) {
  std::vector<Stmt> out;
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::If) {
      if (s.exprs[0].is_const()) {
        auto live = prune(std::get<bool>(s.exprs[0].value) ? s.body : s.orelse);
        bool ends = terminates(live);
        for (auto& l : live) out.push_back(std::move(l));
        if (ends) break;
        continue;
      }
      Stmt t = s;
      t.body = prune(s.body);
      t.orelse = prune(s.orelse);
      if (t.body.empty() && t.orelse.empty() && !may_trap(t.exprs[0])) continue;
      out.push_back(std::move(t));
    } else if (s.kind == Stmt::Kind::For) {
      Stmt t = s;
      t.body = prune(s.body);
      bool const_bounds = t.exprs[0].is_const() && t.exprs[1].is_const() && t.exprs[2].is_const();
      if (const_bounds) {
        auto lo = std::get<std::int64_t>(t.exprs[0].value);
        auto hi = std::get<std::int64_t>(t.exprs[1].value);
        auto step = std::get<std::int64_t>(t.exprs[2].value);
        if (step > 0 && (lo >= hi || t.body.empty())) continue;
      }
      out.push_back(std::move(t));
    } else {
      out.push_back(s);
      if (s.kind == Stmt::Kind::Return) break;
    }
  }
  return out;
}

// Backward liveness over locals; removes assignments whose value is never read.
class DeadStores {
 public:
  explicit DeadStores(const FunctionDef& f) {
    for (const auto& l : f.locals) locals_.insert(l.name);
  }

  // `live` is live-out on entry and live-in on exit.
  std::vector<Stmt> run(const std::vector<Stmt>& body, std::set<std::string>& live,
                        bool transform) {
    std::vector<Stmt> rev;
    for (auto it = body.rbegin(); it != body.rend(); ++it) {
      const Stmt& s = *it;
      Stmt t = s;
      bool keep = true;
      switch (s.kind) {
        case Stmt::Kind::Assign:
          if (locals_.contains(s.name) && !live.contains(s.name) && !may_trap(s.exprs[0])) {
            keep = false;
          } else {
            live.erase(s.name);
            ir::collect_uses(s.exprs[0], live);
          }
          break;
        case Stmt::Kind::Return:
          live.clear();
          ir::collect_uses(s.exprs[0], live);
          break;
        case Stmt::Kind::Call:
          if (s.into) live.erase(*s.into);
          for (const auto& e : s.exprs) ir::collect_uses(e, live);
          break;
        case Stmt::Kind::Store:
        case Stmt::Kind::Emit:
        case Stmt::Kind::Guard:
          for (const auto& e : s.exprs) ir::collect_uses(e, live);
          break;
        case Stmt::Kind::If: {
          std::set<std::string> l_then = live, l_else = live;
          t.body = run(s.body, l_then, transform);
          t.orelse = run(s.orelse, l_else, transform);
          live = std::move(l_then);
          live.insert(l_else.begin(), l_else.end());
          ir::collect_uses(s.exprs[0], live);
          break;
        }
        case Stmt::Kind::For: {
          // live-out of the body = live after the loop plus live-in of the body
          std::set<std::string> out = live;
          for (int guard = 0; guard < 64; ++guard) {
            std::set<std::string> in = out;
            run(s.body, in, false);
            in.erase(s.name);
            std::set<std::string> next = live;
            next.insert(in.begin(), in.end());
            if (next == out) break;
            out = std::move(next);
          }
          std::set<std::string> in = out;
          t.body = run(s.body, in, transform);
          in.erase(s.name);
          live.insert(in.begin(), in.end());
          for (const auto& e : s.exprs) ir::collect_uses(e, live);
          break;
        }
      }
      if (keep || !transform) rev.push_back(std::move(t));
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
  }

 private:
  std::set<std::string> locals_;
};

// --- unrolling ------------------------------------------------------------------

class Unroller {
 public:
  Unroller(int cap, std::size_t budget, std::size_t base_size)
      : cap_(cap), budget_(budget), size_(base_size) {}

  std::vector<Stmt> run(const std::vector<Stmt>& body) {
    std::vector<Stmt> out;
    for (const auto& s : body) {
      if (s.kind == Stmt::Kind::If) {
        Stmt t = s;
        t.body = run(s.body);
        t.orelse = run(s.orelse);
        out.push_back(std::move(t));
        continue;
      }
      if (s.kind != Stmt::Kind::For) {
        out.push_back(s);
        continue;
      }
      Stmt t = s;
      t.body = run(s.body);
      auto trips = constant_trips(t);
      if (!trips || *trips < 1 || *trips > cap_) {
        out.push_back(std::move(t));
        continue;
      }
      // t copies of the body replace the loop statement itself
      std::size_t body_size = ir::count_statements(t.body);
      std::size_t grown = body_size * static_cast<std::size_t>(*trips);
      std::size_t removed = 1 + body_size;
      if (grown > removed) {
        size_ += grown - removed;
        if (size_ > budget_)
          throw Error(ErrorCode::SpecializationTooLarge,
                      "unrolled size exceeds " + std::to_string(budget_) + " statements");
      } else {
        size_ -= removed - grown;
      }
      auto lo = std::get<std::int64_t>(t.exprs[0].value);
      auto step = std::get<std::int64_t>(t.exprs[2].value);
      for (std::int64_t k = 0; k < *trips; ++k) {
        std::vector<Stmt> copy = t.body;
        replace_vars_in(copy, Env{{t.name, Scalar{arith::add(lo, arith::mul(k, step))}}});
        for (auto& c : copy) out.push_back(std::move(c));
      }
    }
    return out;
  }

 private:
  static std::optional<std::int64_t> constant_trips(const Stmt& s) {
    for (const auto& e : s.exprs)
      if (!e.is_const()) return std::nullopt;
    auto lo = std::get<std::int64_t>(s.exprs[0].value);
    auto hi = std::get<std::int64_t>(s.exprs[1].value);
    auto step = std::get<std::int64_t>(s.exprs[2].value);
    if (step <= 0) return std::nullopt;
    return arith::trip_count(lo, hi, step);
  }

  int cap_;
  std::size_t budget_;
  std::size_t size_;
};

void check_refused(const std::vector<Stmt>& body, const std::string& var, const std::string& fn) {
  std::set<std::string> assigned;
  ir::collect_assigned(body, assigned);
  if (assigned.contains(var))
    throw Error(ErrorCode::SubstitutionRefused,
                fn + ": pinned variable '" + var + "' is assigned in the body");
}

}  // namespace

bool may_trap(const Expr& e) {
  if (e.kind == Expr::Kind::Load) return true;
  if (e.kind == Expr::Kind::Bin && (e.bin == BinOp::Div || e.bin == BinOp::Mod)) {
    const auto& rhs = e.args[1];
    if (!rhs.is_const()) return true;
    if (const auto* i = std::get_if<std::int64_t>(&rhs.value); i && *i == 0) return true;
    if (const auto* d = std::get_if<double>(&rhs.value); d && *d == 0.0) return true;
  }
  for (const auto& a : e.args)
    if (may_trap(a)) return true;
  return false;
}

Expr fold_expr(const Expr& e) {
  if (e.kind != Expr::Kind::Bin && e.kind != Expr::Kind::Cmp && e.kind != Expr::Kind::Load) return e;
  Expr out = e;
  for (auto& a : out.args) a = fold_expr(a);
  if (out.kind == Expr::Kind::Load) return out;
  const Expr& l = out.args[0];
  const Expr& r = out.args[1];
  if (l.is_const() && r.is_const()) {
    if (out.kind == Expr::Kind::Cmp) return Expr::constant(fold_compare(out.cmp, l.value, r.value));
    if (auto v = fold_binary(out.bin, l.value, r.value)) return Expr::constant(*v);
    return out;
  }
  if (out.kind != Expr::Kind::Bin) return out;
  // Algebraic identities. Integer rules are exact under wrapping arithmetic;
  // float rules are restricted to those exact for every input (incl. -0, NaN).
  switch (out.bin) {
    case BinOp::Add:
      if (is_int_const(r, 0)) return l;
      if (is_int_const(l, 0)) return r;
      break;
    case BinOp::Sub:
      if (is_int_const(r, 0) || is_float_const(r, 0.0)) return l;
      break;
    case BinOp::Mul:
      if (is_int_const(r, 1) || is_float_const(r, 1.0)) return l;
      if (is_int_const(l, 1) || is_float_const(l, 1.0)) return r;
      if (is_int_const(r, 0) && !may_trap(l)) return r;
      if (is_int_const(l, 0) && !may_trap(r)) return l;
      break;
    case BinOp::Div:
      if (is_int_const(r, 1) || is_float_const(r, 1.0)) return l;
      break;
    case BinOp::Mod:
      break;
  }
  return out;
}

FunctionDef substitute(const FunctionDef& f, const PinSet& pins) {
  FunctionDef out = f;
  Env params;
  for (const auto& [var, value] : pins.values) {
    auto type = f.scalar_type_of(var);
    if (!type) {
      if (f.find_param(var))
        throw Error(ErrorCode::NotScalar, f.name + ": '" + var + "' is not a scalar");
      throw Error(ErrorCode::UnknownPoint, f.name + ": no variable '" + var + "'");
    }
    if (ir::type_of(value) != *type)
      throw Error(ErrorCode::PinType, f.name + ": value " + ir::format_scalar(value) +
                                          " does not match type " +
                                          std::string(ir::to_string(*type)) + " of '" + var + "'");
    if (f.find_param(var)) {
      check_refused(f.body, var, f.name);
      params.emplace(var, value);
      continue;
    }
    // A local is pinnable when it has exactly one assignment, at the top
    // level; reads after that assignment see the pinned constant.
    int top = -1, count = 0;
    for (std::size_t i = 0; i < out.body.size(); ++i) {
      const auto& s = out.body[i];
      if (s.kind == Stmt::Kind::Assign && s.name == var) top = static_cast<int>(i);
    }
    std::function<void(const std::vector<Stmt>&)> count_assign = [&](const std::vector<Stmt>& b) {
      for (const auto& s : b) {
        if ((s.kind == Stmt::Kind::Assign && s.name == var) ||
            (s.kind == Stmt::Kind::Call && s.into == var))
          ++count;
        count_assign(s.body);
        count_assign(s.orelse);
      }
    };
    count_assign(out.body);
    if (count != 1 || top < 0)
      throw Error(ErrorCode::SubstitutionRefused,
                  f.name + ": pinned local '" + var + "' must have exactly one top-level assignment");
    std::vector<Stmt> tail(out.body.begin() + top + 1, out.body.end());
    replace_vars_in(tail, Env{{var, value}});
    out.body.resize(static_cast<std::size_t>(top) + 1);
    out.body.insert(out.body.end(), tail.begin(), tail.end());
  }
  replace_vars_in(out.body, params);
  return out;
}

FunctionDef propagate_and_fold(const FunctionDef& f) {
  FunctionDef out = f;
  Env env;
  out.body = Propagator().run(f.body, env);
  return out;
}

FunctionDef eliminate_dead_code(const FunctionDef& f) {
  FunctionDef out = f;
  out.body = prune(f.body);
  std::set<std::string> live;
  out.body = DeadStores(out).run(out.body, live, true);
  out.body = prune(out.body);
  return out;
}

FunctionDef unroll_loops(const FunctionDef& f, int unroll_cap, std::size_t statement_budget) {
  if (unroll_cap < 1) throw Error(ErrorCode::InvalidArgument, "unroll_cap must be >= 1");
  FunctionDef out = f;
  out.body = Unroller(unroll_cap, statement_budget, ir::count_statements(f.body)).run(f.body);
  return out;
}

FunctionDef insert_guards(const FunctionDef& f, const PinSet& pins, bool guards_enabled,
                          const std::set<std::string>& unguarded) {
  FunctionDef out = f;
  if (!guards_enabled) return out;
  std::vector<Expr> terms;
  for (const auto& [var, value] : pins.values) {
    if (unguarded.contains(var)) continue;
    if (!f.find_param(var))
      throw Error(ErrorCode::GuardOnLocal,
                  f.name + ": pinned local '" + var + "' cannot be checked at entry");
    terms.push_back(Expr::compare(CmpOp::Eq, Expr::var(var), Expr::constant(value)));
  }
  if (terms.empty()) return out;
  if (!out.body.empty() && out.body.front().kind == Stmt::Kind::Guard) {
    auto& g = out.body.front().exprs;
    g.insert(g.end(), terms.begin(), terms.end());
    return out;
  }
  out.body.insert(out.body.begin(), Stmt::guard(std::move(terms)));
  return out;
}

std::string format_pass_log(const std::vector<PassLogEntry>& log) {
  std::string out;
  for (const auto& e : log)
    out += e.pass + ": " + std::to_string(e.nodes_before) + " -> " + std::to_string(e.nodes_after) +
           " nodes\n";
  return out;
}

}  // namespace rtspec
