#include "rtspec/ir.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <limits>

namespace rtspec::ir {

ScalarType type_of(const Scalar& v) {
  switch (v.index()) {
    case 0: return ScalarType::Int64;
    case 1: return ScalarType::Float64;
    default: return ScalarType::Bool;
  }
}

bool is_array(ParamType t) {
  return t == ParamType::ArrayInt64 || t == ParamType::ArrayFloat64;
}

std::optional<ScalarType> scalar_of(ParamType t) {
  switch (t) {
    case ParamType::Int64: return ScalarType::Int64;
    case ParamType::Float64: return ScalarType::Float64;
    case ParamType::Bool: return ScalarType::Bool;
    default: return std::nullopt;
  }
}

ScalarType element_of(ParamType t) {
  return t == ParamType::ArrayFloat64 ? ScalarType::Float64 : ScalarType::Int64;
}

ParamType param_type_of(ScalarType t) {
  switch (t) {
    case ScalarType::Int64: return ParamType::Int64;
    case ScalarType::Float64: return ParamType::Float64;
    case ScalarType::Bool: return ParamType::Bool;
  }
  return ParamType::Int64;
}

std::string_view to_string(ScalarType t) {
  switch (t) {
    case ScalarType::Int64: return "i64";
    case ScalarType::Float64: return "f64";
    case ScalarType::Bool: return "bool";
  }
  return "?";
}

std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::Int64: return "i64";
    case ParamType::Float64: return "f64";
    case ParamType::Bool: return "bool";
    case ParamType::ArrayInt64: return "arr-i64";
    case ParamType::ArrayFloat64: return "arr-f64";
  }
  return "?";
}

std::optional<ParamType> parse_type(std::string_view text) {
  if (text == "i64") return ParamType::Int64;
  if (text == "f64") return ParamType::Float64;
  if (text == "bool") return ParamType::Bool;
  if (text == "arr-i64") return ParamType::ArrayInt64;
  if (text == "arr-f64") return ParamType::ArrayFloat64;
  return std::nullopt;
}

bool same_value(const Scalar& a, const Scalar& b) {
  if (a.index() != b.index()) return false;
  if (const auto* da = std::get_if<double>(&a)) {
    double db = std::get<double>(b);
    if (std::isnan(*da) && std::isnan(db)) return true;
    return std::bit_cast<std::uint64_t>(*da) == std::bit_cast<std::uint64_t>(db);
  }
  return a == b;
}

namespace {

// IEEE-754 totalOrder key.
std::int64_t total_order_key(double d) {
  auto x = std::bit_cast<std::int64_t>(d);
  return x ^ ((x >> 63) & std::numeric_limits<std::int64_t>::max());
}

}  // namespace

bool ScalarLess::operator()(const Scalar& a, const Scalar& b) const {
  if (a.index() != b.index()) return a.index() < b.index();
  if (const auto* da = std::get_if<double>(&a))
    return total_order_key(*da) < total_order_key(std::get<double>(b));
  return a < b;
}

std::string format_scalar(const Scalar& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  double d = std::get<double>(v);
  if (std::isnan(d)) return std::signbit(d) ? "-nan" : "nan";
  if (std::isinf(d)) return d < 0 ? "-inf" : "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), d);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

std::optional<Scalar> parse_scalar(std::string_view text, std::optional<ScalarType> want) {
  if (text.empty()) return std::nullopt;
  if (text == "true") return Scalar{true};
  if (text == "false") return Scalar{false};
  if (text == "inf") return Scalar{std::numeric_limits<double>::infinity()};
  if (text == "-inf") return Scalar{-std::numeric_limits<double>::infinity()};
  if (text == "nan") return Scalar{std::numeric_limits<double>::quiet_NaN()};
  if (text == "-nan") return Scalar{-std::numeric_limits<double>::quiet_NaN()};
  bool floaty = text.find_first_of(".eE") != std::string_view::npos;
  if (!floaty && want != ScalarType::Float64) {
    std::int64_t i = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), i);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return Scalar{i};
  }
  double d = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), d);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return Scalar{d};
}

std::string_view to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
  }
  return "?";
}

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string_view to_string(PointKind k) {
  return k == PointKind::Workload ? "workload" : "config";
}

Expr Expr::constant(Scalar v) {
  Expr e;
  e.kind = Kind::Const;
  e.value = v;
  return e;
}

Expr Expr::var(std::string name) {
  Expr e;
  e.kind = Kind::Var;
  e.name = std::move(name);
  return e;
}

Expr Expr::binary(BinOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Kind::Bin;
  e.bin = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

Expr Expr::compare(CmpOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Kind::Cmp;
  e.cmp = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

Expr Expr::load(std::string array, Expr index) {
  Expr e;
  e.kind = Kind::Load;
  e.name = std::move(array);
  e.args.push_back(std::move(index));
  return e;
}

Expr Expr::version() {
  Expr e;
  e.kind = Kind::Version;
  return e;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Const: return same_value(a.value, b.value);
    case Expr::Kind::Var: return a.name == b.name;
    case Expr::Kind::Bin: return a.bin == b.bin && a.args == b.args;
    case Expr::Kind::Cmp: return a.cmp == b.cmp && a.args == b.args;
    case Expr::Kind::Load: return a.name == b.name && a.args == b.args;
    case Expr::Kind::Version: return true;
  }
  return false;
}

Stmt Stmt::assign(std::string var, Expr value) {
  Stmt s;
  s.kind = Kind::Assign;
  s.name = std::move(var);
  s.exprs.push_back(std::move(value));
  return s;
}

Stmt Stmt::store(std::string array, Expr index, Expr value) {
  Stmt s;
  s.kind = Kind::Store;
  s.name = std::move(array);
  s.exprs.push_back(std::move(index));
  s.exprs.push_back(std::move(value));
  return s;
}

Stmt Stmt::loop(std::string var, Expr lo, Expr hi, Expr step, std::vector<Stmt> body) {
  Stmt s;
  s.kind = Kind::For;
  s.name = std::move(var);
  s.exprs.push_back(std::move(lo));
  s.exprs.push_back(std::move(hi));
  s.exprs.push_back(std::move(step));
  s.body = std::move(body);
  return s;
}

Stmt Stmt::branch(Expr cond, std::vector<Stmt> then_body, std::vector<Stmt> else_body) {
  Stmt s;
  s.kind = Kind::If;
  s.exprs.push_back(std::move(cond));
  s.body = std::move(then_body);
  s.orelse = std::move(else_body);
  return s;
}

Stmt Stmt::ret(Expr value) {
  Stmt s;
  s.kind = Kind::Return;
  s.exprs.push_back(std::move(value));
  return s;
}

Stmt Stmt::call(std::string callee, std::vector<Expr> args, std::optional<std::string> into) {
  Stmt s;
  s.kind = Kind::Call;
  s.name = std::move(callee);
  s.exprs = std::move(args);
  s.into = std::move(into);
  return s;
}

Stmt Stmt::emit(std::string tag, Expr payload) {
  Stmt s;
  s.kind = Kind::Emit;
  s.tag = std::move(tag);
  s.exprs.push_back(std::move(payload));
  return s;
}

Stmt Stmt::guard(std::vector<Expr> terms) {
  Stmt s;
  s.kind = Kind::Guard;
  s.exprs = std::move(terms);
  return s;
}

bool operator==(const Stmt& a, const Stmt& b) {
  return a.kind == b.kind && a.name == b.name && a.exprs == b.exprs && a.body == b.body &&
         a.orelse == b.orelse && a.tag == b.tag && a.into == b.into;
}

const Param* FunctionDef::find_param(std::string_view n) const {
  for (const auto& p : params)
    if (p.name == n) return &p;
  return nullptr;
}

const Local* FunctionDef::find_local(std::string_view n) const {
  for (const auto& l : locals)
    if (l.name == n) return &l;
  return nullptr;
}

std::optional<ScalarType> FunctionDef::scalar_type_of(std::string_view n) const {
  if (const auto* p = find_param(n)) return scalar_of(p->type);
  if (const auto* l = find_local(n)) return l->type;
  return std::nullopt;
}

bool operator==(const FunctionDef& a, const FunctionDef& b) {
  return a.name == b.name && a.params == b.params && a.locals == b.locals && a.body == b.body &&
         a.pure == b.pure && a.return_type == b.return_type;
}

const FunctionDef* Program::find(std::string_view name) const {
  auto it = functions.find(std::string(name));
  return it == functions.end() ? nullptr : &it->second;
}

const SpecPointDecl* Program::find_point(std::string_view function,
                                         std::string_view variable) const {
  for (const auto& p : points)
    if (p.function == function && p.variable == variable) return &p;
  return nullptr;
}

bool operator==(const Program& a, const Program& b) {
  return a.functions == b.functions && a.points == b.points;
}

std::string to_string(const Diagnostic& d) {
  std::string out = d.function.empty() ? std::string("<program>") : d.function;
  if (d.stmt_index >= 0) out += "[stmt " + std::to_string(d.stmt_index) + "]";
  out += ": " + d.rule;
  if (!d.message.empty()) out += ": " + d.message;
  return out;
}

std::size_t count_nodes(const Expr& e) {
  std::size_t n = 1;
  for (const auto& a : e.args) n += count_nodes(a);
  return n;
}

std::size_t count_statements(const std::vector<Stmt>& body) {
  std::size_t n = 0;
  for (const auto& s : body) n += 1 + count_statements(s.body) + count_statements(s.orelse);
  return n;
}

std::size_t count_nodes(const std::vector<Stmt>& body) {
  std::size_t n = 0;
  for (const auto& s : body) {
    n += 1 + count_nodes(s.body) + count_nodes(s.orelse);
    for (const auto& e : s.exprs) n += count_nodes(e);
  }
  return n;
}

std::size_t count_loops(const std::vector<Stmt>& body) {
  std::size_t n = 0;
  for (const auto& s : body)
    n += (s.kind == Stmt::Kind::For ? 1 : 0) + count_loops(s.body) + count_loops(s.orelse);
  return n;
}

void collect_uses(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Var) out.insert(e.name);
  for (const auto& a : e.args) collect_uses(a, out);
}

void collect_assigned(const std::vector<Stmt>& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::Assign || s.kind == Stmt::Kind::For) out.insert(s.name);
    if (s.kind == Stmt::Kind::Call && s.into) out.insert(*s.into);
    collect_assigned(s.body, out);
    collect_assigned(s.orelse, out);
  }
}

namespace {
bool expr_uses(const Expr& e, std::string_view var) {
  if (e.kind == Expr::Kind::Var && e.name == var) return true;
  for (const auto& a : e.args)
    if (expr_uses(a, var)) return true;
  return false;
}
}  // namespace

bool uses_variable(const std::vector<Stmt>& body, std::string_view var) {
  for (const auto& s : body) {
    for (const auto& e : s.exprs)
      if (expr_uses(e, var)) return true;
    if (uses_variable(s.body, var) || uses_variable(s.orelse, var)) return true;
  }
  return false;
}

}  // namespace rtspec::ir
