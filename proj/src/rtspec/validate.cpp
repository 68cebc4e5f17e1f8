#include <functional>

#include "rtspec/ir.hpp"

namespace rtspec::ir {
namespace {

// Return type from the first well-typed Return statement. Unknown names
// are assumed to be loop variables (Int64); the full checker reports them.
std::optional<ScalarType> infer_return_type(const FunctionDef& f);

std::optional<ScalarType> loose_type(const FunctionDef& f, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Const: return type_of(e.value);
    case Expr::Kind::Var: {
      if (const auto* p = f.find_param(e.name)) return scalar_of(p->type);
      if (const auto* l = f.find_local(e.name)) return l->type;
      return ScalarType::Int64;
    }
    case Expr::Kind::Bin: return loose_type(f, e.args[0]);
    case Expr::Kind::Cmp: return ScalarType::Bool;
    case Expr::Kind::Load: {
      const auto* p = f.find_param(e.name);
      if (!p || !is_array(p->type)) return std::nullopt;
      return element_of(p->type);
    }
    case Expr::Kind::Version: return ScalarType::Int64;
  }
  return std::nullopt;
}

std::optional<ScalarType> first_return(const FunctionDef& f, const std::vector<Stmt>& body) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::Return) {
      if (auto t = loose_type(f, s.exprs[0])) return t;
    }
    if (auto t = first_return(f, s.body)) return t;
    if (auto t = first_return(f, s.orelse)) return t;
  }
  return std::nullopt;
}

std::optional<ScalarType> infer_return_type(const FunctionDef& f) { return first_return(f, f.body); }

class FunctionChecker {
 public:
  FunctionChecker(const Program& p, const FunctionDef& f, std::vector<Diagnostic>& out)
      : prog_(p), f_(f), out_(out) {}

  void run() {
    std::set<std::string> seen;
    for (const auto& prm : f_.params)
      if (!seen.insert(prm.name).second) report(-1, "duplicate name", prm.name);
    for (const auto& l : f_.locals)
      if (!seen.insert(l.name).second) report(-1, "duplicate name", l.name);
    return_type_ = infer_return_type(f_);

    std::set<std::string> defined;
    bool terminates = check_list(f_.body, defined, /*top_level=*/true);
    if (!terminates) report(-1, "missing return", "control can reach the end of the function");
  }

 private:
  void report(int idx, std::string rule, std::string message = {}) {
    out_.push_back({f_.name, idx, std::move(rule), std::move(message)});
  }

  bool is_loop_var(const std::string& n) const {
    for (const auto& v : loop_vars_)
      if (v == n) return true;
    return false;
  }

  std::optional<ScalarType> type_expr(const Expr& e, int idx, const std::set<std::string>& defined) {
    switch (e.kind) {
      case Expr::Kind::Const: return type_of(e.value);
      case Expr::Kind::Version: return ScalarType::Int64;
      case Expr::Kind::Var: {
        if (is_loop_var(e.name)) return ScalarType::Int64;
        if (const auto* p = f_.find_param(e.name)) {
          if (is_array(p->type)) {
            report(idx, "type mismatch", "array '" + e.name + "' used as a scalar");
            return std::nullopt;
          }
          return scalar_of(p->type);
        }
        if (const auto* l = f_.find_local(e.name)) {
          if (!defined.contains(e.name)) report(idx, "use before definition", e.name);
          return l->type;
        }
        report(idx, "undefined variable", e.name);
        return std::nullopt;
      }
      case Expr::Kind::Load: {
        auto it = type_expr(e.args[0], idx, defined);
        if (it && *it != ScalarType::Int64) report(idx, "type mismatch", "load index must be i64");
        const auto* p = f_.find_param(e.name);
        if (!p || !is_array(p->type)) {
          report(idx, "unknown array", e.name);
          return std::nullopt;
        }
        return element_of(p->type);
      }
      case Expr::Kind::Bin: {
        auto l = type_expr(e.args[0], idx, defined);
        auto r = type_expr(e.args[1], idx, defined);
        if (!l || !r) return std::nullopt;
        if (*l != *r) {
          report(idx, "type mismatch",
                 std::string("operands of '") + std::string(to_string(e.bin)) + "' are " +
                     std::string(to_string(*l)) + " and " + std::string(to_string(*r)));
          return std::nullopt;
        }
        if (*l == ScalarType::Bool) {
          report(idx, "type mismatch", "arithmetic on bool");
          return std::nullopt;
        }
        if (e.bin == BinOp::Mod && *l != ScalarType::Int64) {
          report(idx, "type mismatch", "'%' requires i64 operands");
          return std::nullopt;
        }
        return l;
      }
      case Expr::Kind::Cmp: {
        auto l = type_expr(e.args[0], idx, defined);
        auto r = type_expr(e.args[1], idx, defined);
        if (!l || !r) return ScalarType::Bool;
        if (*l != *r) {
          report(idx, "type mismatch",
                 "comparison of " + std::string(to_string(*l)) + " and " + std::string(to_string(*r)));
        } else if (*l == ScalarType::Bool && e.cmp != CmpOp::Eq && e.cmp != CmpOp::Ne) {
          report(idx, "type mismatch", "ordering comparison on bool");
        }
        return ScalarType::Bool;
      }
    }
    return std::nullopt;
  }

  void expect(const Expr& e, ScalarType want, int idx, const std::set<std::string>& defined,
              std::string_view what) {
    auto t = type_expr(e, idx, defined);
    if (t && *t != want)
      report(idx, "type mismatch",
             std::string(what) + " must be " + std::string(to_string(want)) + ", got " +
                 std::string(to_string(*t)));
  }

  // Checks an assignment target; returns its type if assignable.
  std::optional<ScalarType> target(const std::string& name, int idx) {
    if (is_loop_var(name)) {
      report(idx, "loop variable reassigned", name);
      return std::nullopt;
    }
    if (const auto* p = f_.find_param(name)) {
      if (is_array(p->type)) {
        report(idx, "type mismatch", "cannot assign to array '" + name + "'");
        return std::nullopt;
      }
      return scalar_of(p->type);
    }
    if (const auto* l = f_.find_local(name)) return l->type;
    report(idx, "undefined variable", name);
    return std::nullopt;
  }

  // Returns true if the list definitely terminates (returns on every path).
  bool check_list(const std::vector<Stmt>& body, std::set<std::string>& defined, bool top_level) {
    bool terminated = false;
    bool leading = top_level;
    for (const auto& s : body) {
      int idx = counter_++;
      if (s.kind != Stmt::Kind::Guard) leading = false;
      switch (s.kind) {
        case Stmt::Kind::Assign: {
          auto vt = type_expr(s.exprs[0], idx, defined);
          auto tt = target(s.name, idx);
          if (vt && tt && *vt != *tt)
            report(idx, "type mismatch",
                   "assigning " + std::string(to_string(*vt)) + " to " + s.name + " (" +
                       std::string(to_string(*tt)) + ")");
          if (f_.find_local(s.name)) defined.insert(s.name);
          break;
        }
        case Stmt::Kind::Store: {
          const auto* p = f_.find_param(s.name);
          expect(s.exprs[0], ScalarType::Int64, idx, defined, "store index");
          if (!p || !is_array(p->type)) {
            report(idx, "unknown array", s.name);
            type_expr(s.exprs[1], idx, defined);
          } else {
            expect(s.exprs[1], element_of(p->type), idx, defined, "stored value");
          }
          break;
        }
        case Stmt::Kind::For: {
          for (const auto& e : s.exprs) expect(e, ScalarType::Int64, idx, defined, "loop bound");
          if (f_.find_param(s.name) || f_.find_local(s.name) || is_loop_var(s.name))
            report(idx, "loop variable shadows", s.name);
          loop_vars_.push_back(s.name);
          std::set<std::string> inner = defined;
          check_list(s.body, inner, false);
          loop_vars_.pop_back();
          break;
        }
        case Stmt::Kind::If: {
          expect(s.exprs[0], ScalarType::Bool, idx, defined, "if condition");
          std::set<std::string> d_then = defined, d_else = defined;
          bool t_then = check_list(s.body, d_then, false);
          bool t_else = check_list(s.orelse, d_else, false);
          if (t_then && t_else) {
            terminated = true;
          } else if (t_then) {
            defined = d_else;
          } else if (t_else) {
            defined = d_then;
          } else {
            std::set<std::string> both;
            for (const auto& v : d_then)
              if (d_else.contains(v)) both.insert(v);
            defined = std::move(both);
          }
          break;
        }
        case Stmt::Kind::Return: {
          auto t = type_expr(s.exprs[0], idx, defined);
          if (t && return_type_ && *t != *return_type_)
            report(idx, "inconsistent return type",
                   "returns " + std::string(to_string(*t)) + ", expected " +
                       std::string(to_string(*return_type_)));
          terminated = true;
          break;
        }
        case Stmt::Kind::Call: {
          const auto* callee = prog_.find(s.name);
          if (!callee) {
            report(idx, "unknown function", s.name);
            for (const auto& a : s.exprs)
              if (a.kind != Expr::Kind::Var) type_expr(a, idx, defined);
          } else {
            check_call_args(s, *callee, idx, defined);
          }
          if (s.into) {
            auto tt = target(*s.into, idx);
            if (callee && tt) {
              auto rt = callee == &f_ ? return_type_ : infer_return_type(*callee);
              if (rt && *rt != *tt)
                report(idx, "type mismatch",
                       "call result " + std::string(to_string(*rt)) + " stored into " + *s.into);
            }
            if (f_.find_local(*s.into)) defined.insert(*s.into);
          }
          break;
        }
        case Stmt::Kind::Emit:
          type_expr(s.exprs[0], idx, defined);
          break;
        case Stmt::Kind::Guard:
          if (!leading) report(idx, "misplaced guard", "guards must precede all other statements");
          for (const auto& e : s.exprs) expect(e, ScalarType::Bool, idx, defined, "guard term");
          break;
      }
      if (terminated) {
        // statements after a return are unreachable; still type-check them
        std::set<std::string> all = defined;
        for (const auto& l : f_.locals) all.insert(l.name);
        defined = std::move(all);
      }
    }
    return terminated;
  }

  void check_call_args(const Stmt& s, const FunctionDef& callee, int idx,
                       const std::set<std::string>& defined) {
    if (s.exprs.size() != callee.params.size()) {
      report(idx, "arity mismatch",
             s.name + " expects " + std::to_string(callee.params.size()) + " arguments, got " +
                 std::to_string(s.exprs.size()));
      return;
    }
    for (std::size_t i = 0; i < s.exprs.size(); ++i) {
      const auto& a = s.exprs[i];
      const auto& want = callee.params[i].type;
      if (is_array(want)) {
        const Param* src = a.kind == Expr::Kind::Var ? f_.find_param(a.name) : nullptr;
        if (!src || src->type != want)
          report(idx, "type mismatch",
                 "argument " + std::to_string(i) + " of " + s.name + " must be an " +
                     std::string(to_string(want)) + " parameter");
      } else {
        expect(a, *scalar_of(want), idx, defined, "call argument");
      }
    }
  }

  const Program& prog_;
  const FunctionDef& f_;
  std::vector<Diagnostic>& out_;
  std::vector<std::string> loop_vars_;
  std::optional<ScalarType> return_type_;
  int counter_ = 0;
};

void collect_callees(const std::vector<Stmt>& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::Call) out.insert(s.name);
    collect_callees(s.body, out);
    collect_callees(s.orelse, out);
  }
}

bool has_effects(const std::vector<Stmt>& body) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::Store || s.kind == Stmt::Kind::Emit) return true;
    if (has_effects(s.body) || has_effects(s.orelse)) return true;
  }
  return false;
}

}  // namespace

std::vector<Diagnostic> validate_function(const Program& p, const FunctionDef& f) {
  std::vector<Diagnostic> out;
  FunctionChecker(p, f, out).run();
  return out;
}

std::vector<Diagnostic> validate(const Program& p) {
  std::vector<Diagnostic> out;
  for (const auto& [name, f] : p.functions) {
    auto d = validate_function(p, f);
    out.insert(out.end(), d.begin(), d.end());
  }

  // Call graph must be acyclic.
  std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    color[name] = 1;
    std::set<std::string> callees;
    collect_callees(p.functions.at(name).body, callees);
    for (const auto& c : callees) {
      if (!p.functions.contains(c)) continue;
      if (color[c] == 1) {
        out.push_back({name, -1, "recursion not allowed", name + " -> " + c});
      } else if (color[c] == 0) {
        visit(c);
      }
    }
    color[name] = 2;
  };
  for (const auto& [name, f] : p.functions)
    if (color[name] == 0) visit(name);

  for (const auto& d : p.points) {
    const auto* f = p.find(d.function);
    if (!f) {
      out.push_back({d.function, -1, "invalid specpoint", "unknown function " + d.function});
      continue;
    }
    if (const auto* prm = f->find_param(d.variable)) {
      if (is_array(prm->type))
        out.push_back({d.function, -1, "invalid specpoint", d.variable + " is not a scalar"});
    } else if (!f->find_local(d.variable)) {
      out.push_back({d.function, -1, "invalid specpoint", "unknown variable " + d.variable});
    }
  }
  return out;
}

void annotate_function(const Program& p, FunctionDef& f) {
  f.return_type = infer_return_type(f);
  bool pure = !has_effects(f.body);
  if (pure) {
    std::set<std::string> callees;
    collect_callees(f.body, callees);
    for (const auto& c : callees) {
      const auto* g = p.find(c);
      if (!g || !g->pure) pure = false;
    }
  }
  f.pure = pure;
}

void annotate(Program& p) {
  // Callees first; the call graph is acyclic for validated programs.
  std::set<std::string> done;
  std::function<void(const std::string&, int)> visit = [&](const std::string& name, int depth) {
    if (done.contains(name) || depth > static_cast<int>(p.functions.size())) return;
    std::set<std::string> callees;
    collect_callees(p.functions.at(name).body, callees);
    for (const auto& c : callees)
      if (p.functions.contains(c)) visit(c, depth + 1);
    annotate_function(p, p.functions.at(name));
    done.insert(name);
  };
  for (const auto& [name, f] : p.functions) visit(name, 0);
}

}  // namespace rtspec::ir
