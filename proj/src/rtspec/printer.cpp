#include "rtspec/ir.hpp"

namespace rtspec::ir {
namespace {

void print_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Const: out += format_scalar(e.value); return;
    case Expr::Kind::Var: out += e.name; return;
    case Expr::Kind::Version: out += "(version)"; return;
    case Expr::Kind::Load:
      out += "(load " + e.name + " ";
      print_expr(e.args[0], out);
      out += ")";
      return;
    case Expr::Kind::Bin:
    case Expr::Kind::Cmp:
      out += "(";
      out += e.kind == Expr::Kind::Bin ? to_string(e.bin) : to_string(e.cmp);
      out += " ";
      print_expr(e.args[0], out);
      out += " ";
      print_expr(e.args[1], out);
      out += ")";
      return;
  }
}

std::string quote(const std::string& tag) {
  std::string out = "\"";
  for (char c : tag) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

void print_stmts(const std::vector<Stmt>& body, int depth, std::string& out);

void print_stmt(const Stmt& s, int depth, std::string& out) {
  out += "\n" + std::string(static_cast<std::size_t>(depth) * 2, ' ');
  switch (s.kind) {
    case Stmt::Kind::Assign:
      out += "(set " + s.name + " ";
      print_expr(s.exprs[0], out);
      out += ")";
      return;
    case Stmt::Kind::Store:
      out += "(store " + s.name + " ";
      print_expr(s.exprs[0], out);
      out += " ";
      print_expr(s.exprs[1], out);
      out += ")";
      return;
    case Stmt::Kind::For:
      out += "(for " + s.name;
      for (const auto& e : s.exprs) {
        out += " ";
        print_expr(e, out);
      }
      print_stmts(s.body, depth + 1, out);
      out += ")";
      return;
    case Stmt::Kind::If: {
      out += "(if ";
      print_expr(s.exprs[0], out);
      std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
      out += "\n" + pad + "(then";
      print_stmts(s.body, depth + 2, out);
      out += ")\n" + pad + "(else";
      print_stmts(s.orelse, depth + 2, out);
      out += "))";
      return;
    }
    case Stmt::Kind::Return:
      out += "(return ";
      print_expr(s.exprs[0], out);
      out += ")";
      return;
    case Stmt::Kind::Call:
      out += "(call " + s.name + " (";
      for (std::size_t i = 0; i < s.exprs.size(); ++i) {
        if (i) out += " ";
        print_expr(s.exprs[i], out);
      }
      out += ")";
      if (s.into) out += " into " + *s.into;
      out += ")";
      return;
    case Stmt::Kind::Emit:
      out += "(emit " + quote(s.tag) + " ";
      print_expr(s.exprs[0], out);
      out += ")";
      return;
    case Stmt::Kind::Guard:
      out += "(guard";
      for (const auto& e : s.exprs) {
        out += " ";
        print_expr(e, out);
      }
      out += ")";
      return;
  }
}

void print_stmts(const std::vector<Stmt>& body, int depth, std::string& out) {
  for (const auto& s : body) print_stmt(s, depth, out);
}

void print_function(const FunctionDef& f, std::string& out) {
  out += "(func " + f.name + " (";
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (i) out += " ";
    out += "(" + f.params[i].name + " " + std::string(to_string(f.params[i].type)) + ")";
  }
  out += ")";
  if (!f.locals.empty()) {
    out += "\n  (locals";
    for (const auto& l : f.locals) out += " (" + l.name + " " + std::string(to_string(l.type)) + ")";
    out += ")";
  }
  print_stmts(f.body, 1, out);
  out += ")\n";
}

}  // namespace

std::string pretty_print(const FunctionDef& f) {
  std::string out;
  print_function(f, out);
  return out;
}

std::string pretty_print(const Program& p) {
  std::string out;
  bool first = true;
  for (const auto& [name, f] : p.functions) {
    if (!first) out += "\n";
    first = false;
    print_function(f, out);
  }
  if (!p.points.empty()) {
    if (!first) out += "\n";
    for (const auto& d : p.points) {
      out += "(specpoint " + d.function + " " + d.variable + " " + std::string(to_string(d.kind));
      if (d.driver_coupled) out += " driver-coupled";
      out += ")\n";
    }
  }
  return out;
}

}  // namespace rtspec::ir
