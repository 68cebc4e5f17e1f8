// Reader for the textual IR: S-expressions with `;` line comments.

#include <cctype>
#include <memory>

#include "rtspec/error.hpp"
#include "rtspec/ir.hpp"

namespace rtspec::ir {
namespace {

struct Sexp {
  enum class Kind { Atom, String, List } kind = Kind::Atom;
  std::string text;
  std::vector<Sexp> items;
  int line = 0;

  bool is_atom(std::string_view t) const { return kind == Kind::Atom && text == t; }
  bool is_list() const { return kind == Kind::List; }
  // `(head ...)` list whose first element is the atom `head`.
  bool is_form(std::string_view head) const {
    return is_list() && !items.empty() && items[0].is_atom(head);
  }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Sexp> read_all() {
    std::vector<Sexp> out;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) break;
      out.push_back(read());
    }
    return out;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  Sexp read() {
    skip_space();
    if (pos_ >= text_.size()) throw SyntaxError(line_, "unexpected end of input");
    char c = text_[pos_];
    Sexp s;
    s.line = line_;
    if (c == '(') {
      ++pos_;
      s.kind = Sexp::Kind::List;
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) throw SyntaxError(s.line, "unclosed '('");
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        s.items.push_back(read());
      }
      return s;
    }
    if (c == ')') throw SyntaxError(line_, "unexpected ')'");
    if (c == '"') {
      ++pos_;
      s.kind = Sexp::Kind::String;
      for (;;) {
        if (pos_ >= text_.size() || text_[pos_] == '\n')
          throw SyntaxError(s.line, "unterminated string");
        char d = text_[pos_++];
        if (d == '"') break;
        if (d == '\\') {
          if (pos_ >= text_.size()) throw SyntaxError(s.line, "unterminated string");
          d = text_[pos_++];
        }
        s.text.push_back(d);
      }
      return s;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';' ||
          d == '"')
        break;
      ++pos_;
    }
    s.text = std::string(text_.substr(start, pos_ - start));
    return s;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

bool is_identifier(std::string_view t) {
  if (t.empty()) return false;
  unsigned char c0 = static_cast<unsigned char>(t[0]);
  if (!(std::isalpha(c0) || c0 == '_')) return false;
  for (char c : t) {
    unsigned char u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '_' || c == '-' || c == '.')) return false;
  }
  static const std::set<std::string_view> reserved = {
      "true", "false", "inf", "nan", "func", "locals", "set", "store", "for", "if", "then",
      "else", "return", "call", "into", "emit", "load", "guard", "version", "specpoint"};
  return !reserved.contains(t);
}

std::optional<BinOp> bin_op(std::string_view t) {
  if (t == "+") return BinOp::Add;
  if (t == "-") return BinOp::Sub;
  if (t == "*") return BinOp::Mul;
  if (t == "/") return BinOp::Div;
  if (t == "%") return BinOp::Mod;
  return std::nullopt;
}

std::optional<CmpOp> cmp_op(std::string_view t) {
  if (t == "==") return CmpOp::Eq;
  if (t == "!=") return CmpOp::Ne;
  if (t == "<") return CmpOp::Lt;
  if (t == "<=") return CmpOp::Le;
  if (t == ">") return CmpOp::Gt;
  if (t == ">=") return CmpOp::Ge;
  return std::nullopt;
}

const std::string& atom(const Sexp& s, std::string_view what) {
  if (s.kind != Sexp::Kind::Atom) throw SyntaxError(s.line, "expected " + std::string(what));
  return s.text;
}

std::string name_of(const Sexp& s, std::string_view what) {
  const auto& t = atom(s, what);
  if (!is_identifier(t)) throw SyntaxError(s.line, "invalid " + std::string(what) + " '" + t + "'");
  return t;
}

Expr build_expr(const Sexp& s) {
  if (s.kind == Sexp::Kind::String) throw SyntaxError(s.line, "string literal in expression");
  if (s.kind == Sexp::Kind::Atom) {
    if (auto v = parse_scalar(s.text)) return Expr::constant(*v);
    if (is_identifier(s.text)) return Expr::var(s.text);
    throw SyntaxError(s.line, "bad expression atom '" + s.text + "'");
  }
  if (s.items.empty()) throw SyntaxError(s.line, "empty expression");
  const auto& head = atom(s.items[0], "operator");
  if (head == "version") {
    if (s.items.size() != 1) throw SyntaxError(s.line, "(version) takes no operands");
    return Expr::version();
  }
  if (head == "load") {
    if (s.items.size() != 3) throw SyntaxError(s.line, "(load ARRAY INDEX) expected");
    return Expr::load(name_of(s.items[1], "array name"), build_expr(s.items[2]));
  }
  if (s.items.size() != 3) throw SyntaxError(s.line, "operator '" + head + "' takes 2 operands");
  if (auto op = bin_op(head)) return Expr::binary(*op, build_expr(s.items[1]), build_expr(s.items[2]));
  if (auto op = cmp_op(head)) return Expr::compare(*op, build_expr(s.items[1]), build_expr(s.items[2]));
  throw SyntaxError(s.line, "unknown operator '" + head + "'");
}

std::vector<Stmt> build_stmts(const std::vector<Sexp>& items, std::size_t from);

Stmt build_stmt(const Sexp& s) {
  if (!s.is_list() || s.items.empty()) throw SyntaxError(s.line, "expected statement");
  const auto& head = atom(s.items[0], "statement keyword");
  const auto n = s.items.size();
  if (head == "set") {
    if (n != 3) throw SyntaxError(s.line, "(set NAME EXPR) expected");
    return Stmt::assign(name_of(s.items[1], "variable"), build_expr(s.items[2]));
  }
  if (head == "store") {
    if (n != 4) throw SyntaxError(s.line, "(store NAME INDEX VALUE) expected");
    return Stmt::store(name_of(s.items[1], "array name"), build_expr(s.items[2]),
                       build_expr(s.items[3]));
  }
  if (head == "for") {
    if (n < 5) throw SyntaxError(s.line, "(for VAR LO HI STEP STMT ...) expected");
    return Stmt::loop(name_of(s.items[1], "loop variable"), build_expr(s.items[2]),
                      build_expr(s.items[3]), build_expr(s.items[4]), build_stmts(s.items, 5));
  }
  if (head == "if") {
    if (n != 4 || !s.items[2].is_form("then") || !s.items[3].is_form("else"))
      throw SyntaxError(s.line, "(if COND (then ...) (else ...)) expected");
    return Stmt::branch(build_expr(s.items[1]), build_stmts(s.items[2].items, 1),
                        build_stmts(s.items[3].items, 1));
  }
  if (head == "return") {
    if (n != 2) throw SyntaxError(s.line, "(return EXPR) expected");
    return Stmt::ret(build_expr(s.items[1]));
  }
  if (head == "call") {
    if (n != 3 && n != 5) throw SyntaxError(s.line, "(call NAME (ARGS...) [into VAR]) expected");
    if (!s.items[2].is_list()) throw SyntaxError(s.items[2].line, "call arguments must be a list");
    std::vector<Expr> args;
    for (const auto& a : s.items[2].items) args.push_back(build_expr(a));
    std::optional<std::string> into;
    if (n == 5) {
      if (!s.items[3].is_atom("into")) throw SyntaxError(s.items[3].line, "expected 'into'");
      into = name_of(s.items[4], "result variable");
    }
    return Stmt::call(name_of(s.items[1], "function name"), std::move(args), std::move(into));
  }
  if (head == "emit") {
    if (n != 3 || s.items[1].kind != Sexp::Kind::String)
      throw SyntaxError(s.line, "(emit \"tag\" EXPR) expected");
    return Stmt::emit(s.items[1].text, build_expr(s.items[2]));
  }
  if (head == "guard") {
    if (n < 2) throw SyntaxError(s.line, "(guard COND ...) expects at least one condition");
    std::vector<Expr> terms;
    for (std::size_t i = 1; i < n; ++i) terms.push_back(build_expr(s.items[i]));
    return Stmt::guard(std::move(terms));
  }
  throw SyntaxError(s.line, "unknown statement '" + head + "'");
}

std::vector<Stmt> build_stmts(const std::vector<Sexp>& items, std::size_t from) {
  std::vector<Stmt> out;
  for (std::size_t i = from; i < items.size(); ++i) out.push_back(build_stmt(items[i]));
  return out;
}

FunctionDef build_function(const Sexp& s) {
  if (s.items.size() < 3) throw SyntaxError(s.line, "(func NAME (PARAMS) ...) expected");
  FunctionDef f;
  f.name = name_of(s.items[1], "function name");
  const auto& params = s.items[2];
  if (!params.is_list()) throw SyntaxError(params.line, "parameter list expected");
  for (const auto& p : params.items) {
    if (!p.is_list() || p.items.size() != 2) throw SyntaxError(p.line, "(name TYPE) expected");
    auto type = parse_type(atom(p.items[1], "type"));
    if (!type) throw SyntaxError(p.line, "unknown type '" + p.items[1].text + "'");
    f.params.push_back({name_of(p.items[0], "parameter name"), *type});
  }
  std::size_t body_from = 3;
  if (s.items.size() > 3 && s.items[3].is_form("locals")) {
    for (std::size_t i = 1; i < s.items[3].items.size(); ++i) {
      const auto& l = s.items[3].items[i];
      if (!l.is_list() || l.items.size() != 2) throw SyntaxError(l.line, "(name TYPE) expected");
      auto type = parse_type(atom(l.items[1], "type"));
      if (!type || is_array(*type))
        throw SyntaxError(l.line, "locals must have a scalar type");
      f.locals.push_back({name_of(l.items[0], "local name"), *scalar_of(*type)});
    }
    body_from = 4;
  }
  f.body = build_stmts(s.items, body_from);
  return f;
}

SpecPointDecl build_point(const Sexp& s) {
  if (s.items.size() < 4 || s.items.size() > 5)
    throw SyntaxError(s.line, "(specpoint FUNC VAR KIND [driver-coupled]) expected");
  SpecPointDecl d;
  d.function = name_of(s.items[1], "function name");
  d.variable = name_of(s.items[2], "variable");
  const auto& kind = atom(s.items[3], "point kind");
  if (kind == "workload") {
    d.kind = PointKind::Workload;
  } else if (kind == "config") {
    d.kind = PointKind::Config;
  } else {
    throw SyntaxError(s.items[3].line, "point kind must be 'workload' or 'config'");
  }
  if (s.items.size() == 5) {
    if (!s.items[4].is_atom("driver-coupled"))
      throw SyntaxError(s.items[4].line, "unknown specpoint flag '" + s.items[4].text + "'");
    d.driver_coupled = true;
  }
  return d;
}

}  // namespace

Program parse_program_unchecked(std::string_view text) {
  Program p;
  for (const auto& form : Reader(text).read_all()) {
    if (form.is_form("func")) {
      auto f = build_function(form);
      if (p.functions.contains(f.name))
        throw SyntaxError(form.line, "duplicate function '" + f.name + "'");
      auto name = f.name;
      p.functions.emplace(std::move(name), std::move(f));
    } else if (form.is_form("specpoint")) {
      auto d = build_point(form);
      if (p.find_point(d.function, d.variable))
        throw SyntaxError(form.line, "duplicate specpoint " + d.function + ":" + d.variable);
      p.points.push_back(std::move(d));
    } else {
      throw SyntaxError(form.line, "expected (func ...) or (specpoint ...)");
    }
  }
  return p;
}

Program parse_program(std::string_view text) {
  Program p = parse_program_unchecked(text);
  auto diags = validate(p);
  if (!diags.empty()) {
    const auto& d = diags.front();
    std::string msg = d.rule;
    if (d.stmt_index >= 0) msg += " (stmt " + std::to_string(d.stmt_index) + ")";
    if (!d.message.empty()) msg += ": " + d.message;
    throw ValidationError(d.function, msg);
  }
  annotate(p);
  return p;
}

}  // namespace rtspec::ir
