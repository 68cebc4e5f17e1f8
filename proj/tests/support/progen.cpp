#include "progen.hpp"

#include <set>
#include <stdexcept>

namespace progen {

using namespace rtspec;
using ir::BinOp;
using ir::CmpOp;
using ir::Expr;
using ir::Stmt;

struct Generator::Scope {
  std::vector<std::string> ints;    // readable i64 names
  std::vector<std::string> floats;  // readable f64 names
  std::vector<std::string> bools;
  std::vector<std::string> int_locals;  // assignable
  std::vector<std::string> float_locals;
  std::set<std::string> defined;    // locals assigned on every path so far
  bool has_array = true;
  bool has_farray = false;
  bool has_helper = true;
};

std::int64_t Generator::pick(std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
}

bool Generator::coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

Expr Generator::int_expr(const Scope& s, int depth) {
  auto r = pick(0, depth <= 0 ? 1 : 9);
  if (r == 0 || (r == 1 && s.ints.empty())) return Expr::constant(pick(-6, 12));
  if (r == 1) {
    std::vector<std::string> ready;
    for (const auto& n : s.ints)
      if (!n.starts_with("l") || s.defined.contains(n)) ready.push_back(n);
    if (ready.empty()) return Expr::constant(pick(-6, 12));
    return Expr::var(ready[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(ready.size()) - 1))]);
  }
  if (r <= 6) {
    static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Add, BinOp::Div, BinOp::Mod};
    auto op = ops[pick(0, 5)];
    bool divides = op == BinOp::Div || op == BinOp::Mod;
    auto rhs = divides && coin(0.8) ? Expr::constant(coin(0.8) ? pick(1, 7) : pick(-3, -1)) : int_expr(s, depth - 1);
    return Expr::binary(op, int_expr(s, depth - 1), std::move(rhs));
  }
  if (r == 7 && s.has_array) return Expr::load("a", index(s, depth - 1));
  if (r == 8) return Expr::binary(BinOp::Add, int_expr(s, depth - 1), Expr::constant(pick(0, 3)));
  return Expr::constant(pick(-3, 20));
}

// Mostly wrapped into [0, 8); sometimes raw so out-of-range traps stay covered.
Expr Generator::index(const Scope& s, int depth) {
  auto e = int_expr(s, depth);
  if (coin(0.1)) return e;
  auto eight = Expr::constant(std::int64_t{8});
  return Expr::binary(BinOp::Mod, Expr::binary(BinOp::Add, Expr::binary(BinOp::Mod, e, eight), eight), eight);
}

Expr Generator::float_expr(const Scope& s, int depth) {
  auto r = pick(0, depth <= 0 ? 1 : 5);
  if (r == 0 || s.floats.empty()) return Expr::constant(static_cast<double>(pick(-8, 8)) / 4.0);
  if (r == 1) {
    std::vector<std::string> ready;
    for (const auto& n : s.floats)
      if (!n.starts_with("g") || s.defined.contains(n)) ready.push_back(n);
    if (ready.empty()) return Expr::constant(1.5);
    return Expr::var(ready[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(ready.size()) - 1))]);
  }
  if (r == 5 && s.has_farray)
    return Expr::load("fa", Expr::binary(BinOp::Mod, int_expr(s, depth - 1), Expr::constant(std::int64_t{4})));
  static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div};
  return Expr::binary(ops[pick(0, 3)], float_expr(s, depth - 1), float_expr(s, depth - 1));
}

Expr Generator::cond(const Scope& s, int depth) {
  static const CmpOp ops[] = {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge};
  auto r = pick(0, 9);
  if (r == 0) return Expr::constant(coin(0.5));
  if (r == 1 && !s.bools.empty())
    return Expr::compare(coin(0.5) ? CmpOp::Eq : CmpOp::Ne, Expr::var(s.bools[0]), Expr::constant(coin(0.5)));
  if (r == 2 && !s.floats.empty())
    return Expr::compare(ops[pick(0, 5)], float_expr(s, depth - 1), float_expr(s, depth - 1));
  return Expr::compare(ops[pick(0, 5)], int_expr(s, depth - 1), int_expr(s, depth - 1));
}

Stmt Generator::stmt(Scope& s, int depth) {
  for (;;) {
    auto r = pick(0, 11);
    if (r <= 2 && !s.int_locals.empty()) {
      auto name = s.int_locals[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(s.int_locals.size()) - 1))];
      auto st = Stmt::assign(name, int_expr(s, 2));
      s.defined.insert(name);
      return st;
    }
    if (r == 3 && !s.float_locals.empty()) {
      auto st = Stmt::assign(s.float_locals[0], float_expr(s, 2));
      s.defined.insert(s.float_locals[0]);
      return st;
    }
    if (r == 4 && s.has_array) return Stmt::store("a", index(s, 1), int_expr(s, 2));
    if (r == 5 && depth > 0) {
      std::string var = "i" + std::to_string(loop_counter_++);
      Expr lo = Expr::constant(pick(-1, 2));
      Expr hi = coin(0.6) ? Expr::constant(pick(0, 6)) : int_expr(s, 1);
      Expr step = coin(0.95) ? Expr::constant(pick(1, 2)) : int_expr(s, 0);
      // hi from arbitrary expressions is clamped so loops stay short
      if (!hi.is_const()) hi = Expr::binary(BinOp::Mod, hi, Expr::constant(std::int64_t{7}));
      Scope inner = s;
      inner.ints.push_back(var);
      auto body = block(inner, depth - 1, 3);
      return Stmt::loop(var, lo, hi, step, std::move(body));
    }
    if (r == 6 && depth > 0) {
      auto c = cond(s, 2);
      Scope t = s, e = s;
      auto then_body = block(t, depth - 1, 3);
      auto else_body = coin(0.7) ? block(e, depth - 1, 2) : std::vector<Stmt>{};
      for (const auto& n : t.defined)
        if (e.defined.contains(n)) s.defined.insert(n);
      return Stmt::branch(c, std::move(then_body), std::move(else_body));
    }
    if (r == 7) return Stmt::emit(coin(0.5) ? "tx" : "log", int_expr(s, 2));
    if (r == 8 && !s.floats.empty()) return Stmt::emit("fx", float_expr(s, 1));
    if (r == 9 && s.has_helper && !s.int_locals.empty()) {
      auto into = s.int_locals.back();
      auto st = Stmt::call("h", {int_expr(s, 1), int_expr(s, 1)}, into);
      s.defined.insert(into);
      return st;
    }
    if (r == 10 && depth < 2) return Stmt::ret(int_expr(s, 2));
    if (r == 11) return Stmt::emit("v", int_expr(s, 1));
  }
}

std::vector<Stmt> Generator::block(Scope& s, int depth, int max_stmts) {
  std::vector<Stmt> out;
  auto n = pick(1, max_stmts);
  for (std::int64_t i = 0; i < n; ++i) {
    out.push_back(stmt(s, depth));
    if (out.back().kind == Stmt::Kind::Return) break;
  }
  return out;
}

ir::FunctionDef Generator::helper() {
  ir::FunctionDef h;
  h.name = "h";
  h.params = {{"u", ir::ParamType::Int64}, {"v", ir::ParamType::Int64}};
  Scope s;
  s.ints = {"u", "v"};
  s.has_array = false;
  s.has_helper = false;
  auto c = Expr::compare(CmpOp::Lt, Expr::var("u"), Expr::var("v"));
  h.body.push_back(Stmt::branch(c, {Stmt::ret(int_expr(s, 2))}, {}));
  h.body.push_back(Stmt::ret(int_expr(s, 2)));
  return h;
}

ir::FunctionDef Generator::entry() {
  ir::FunctionDef f;
  f.name = "f";
  f.params = {{"p0", ir::ParamType::Int64}, {"p1", ir::ParamType::Int64}, {"a", ir::ParamType::ArrayInt64}};
  Scope s;
  s.ints = {"p0", "p1"};
  if (coin(0.5)) {
    f.params.push_back({"p2", ir::ParamType::Int64});
    s.ints.push_back("p2");
  }
  if (coin(0.35)) {
    f.params.push_back({"x", ir::ParamType::Float64});
    s.floats.push_back("x");
  }
  if (coin(0.25)) {
    f.params.push_back({"flag", ir::ParamType::Bool});
    s.bools.push_back("flag");
  }
  if (coin(0.2)) {
    f.params.push_back({"fa", ir::ParamType::ArrayFloat64});
    s.has_farray = true;
  }
  int nl = static_cast<int>(pick(1, 3));
  for (int i = 0; i < nl; ++i) {
    std::string n = "l" + std::to_string(i);
    f.locals.push_back({n, ir::ScalarType::Int64});
    s.ints.push_back(n);
    s.int_locals.push_back(n);
  }
  if (!s.floats.empty() && coin(0.5)) {
    f.locals.push_back({"g0", ir::ScalarType::Float64});
    s.floats.push_back("g0");
    s.float_locals.push_back("g0");
  }
  loop_counter_ = 0;
  f.body = block(s, 3, 6);
  if (f.body.empty() || f.body.back().kind != Stmt::Kind::Return) f.body.push_back(Stmt::ret(int_expr(s, 2)));
  return f;
}

ir::Program Generator::program() {
  for (int attempt = 0; attempt < 200; ++attempt) {
    ir::Program p;
    p.functions.emplace("h", helper());
    p.functions.emplace("f", entry());
    if (ir::validate(p).empty()) {
      ir::annotate(p);
      return p;
    }
  }
  throw std::runtime_error("generator could not produce a valid program");
}

Case Generator::make_case() {
  Case c;
  c.program = program();
  c.entry = "f";
  const auto& f = c.program.functions.at("f");
  std::vector<std::string> scalars;
  for (const auto& p : f.params) {
    switch (p.type) {
      case ir::ParamType::Int64: c.args.emplace_back(pick(-4, 9)); scalars.push_back(p.name); break;
      case ir::ParamType::Float64:
        c.args.emplace_back(static_cast<double>(pick(-8, 8)) / 2.0);
        scalars.push_back(p.name);
        break;
      case ir::ParamType::Bool: c.args.emplace_back(coin(0.5)); scalars.push_back(p.name); break;
      case ir::ParamType::ArrayInt64: {
        std::vector<std::int64_t> a(8);
        for (auto& v : a) v = pick(-5, 9);
        c.args.emplace_back(std::move(a));
        break;
      }
      case ir::ParamType::ArrayFloat64: {
        std::vector<double> a(4);
        for (auto& v : a) v = static_cast<double>(pick(-8, 8)) / 4.0;
        c.args.emplace_back(std::move(a));
        break;
      }
    }
  }
  c.pins.function = "f";
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (!ir::scalar_of(f.params[i].type)) continue;
    if (coin(0.5) || (c.pins.empty() && i + 1 == f.params.size()))
      c.pins.values.emplace(f.params[i].name, *as_scalar(c.args[i]));
  }
  if (c.pins.empty()) c.pins.values.emplace("p0", *as_scalar(c.args[0]));
  return c;
}

std::vector<Value> Generator::violate(const Case& c) {
  auto args = c.args;
  const auto& f = c.program.functions.at(c.entry);
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (!c.pins.values.contains(f.params[i].name)) continue;
    if (auto* v = std::get_if<std::int64_t>(&args[i])) *v += pick(1, 5);
    else if (auto* d = std::get_if<double>(&args[i])) *d += 0.5;
    else if (auto* b = std::get_if<bool>(&args[i])) *b = !*b;
    return args;
  }
  return args;
}

}  // namespace progen
