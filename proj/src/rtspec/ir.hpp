#pragma once

// Kernel IR: a small first-order language with structured control flow in
// which all specializable handler code is written.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rtspec::ir {

enum class ScalarType : std::uint8_t { Int64, Float64, Bool };

enum class ParamType : std::uint8_t { Int64, Float64, Bool, ArrayInt64, ArrayFloat64 };

using Scalar = std::variant<std::int64_t, double, bool>;

ScalarType type_of(const Scalar& v);
bool is_array(ParamType t);
std::optional<ScalarType> scalar_of(ParamType t);
ScalarType element_of(ParamType t);  // array element type
ParamType param_type_of(ScalarType t);

std::string_view to_string(ScalarType t);
std::string_view to_string(ParamType t);
std::optional<ParamType> parse_type(std::string_view text);

/// Value equality used for structural comparison: doubles compare bitwise,
/// except that any two NaNs are equal.
bool same_value(const Scalar& a, const Scalar& b);

/// Total order over scalars (type index first, IEEE total order for doubles).
struct ScalarLess {
  bool operator()(const Scalar& a, const Scalar& b) const;
};

/// Canonical literal text, re-parseable by the IR reader.
std::string format_scalar(const Scalar& v);

/// Parses a literal (`12`, `-3`, `1.5`, `true`, `inf`, ...). The target type,
/// when given, lets `4` be read as a float.
std::optional<Scalar> parse_scalar(std::string_view text,
                                   std::optional<ScalarType> want = std::nullopt);

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Mod };
enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(BinOp op);
std::string_view to_string(CmpOp op);

struct Expr {
  enum class Kind : std::uint8_t { Const, Var, Bin, Cmp, Load, Version };

  Kind kind = Kind::Const;
  Scalar value = std::int64_t{0};  // Const
  std::string name;                // Var, Load (array name)
  BinOp bin = BinOp::Add;
  CmpOp cmp = CmpOp::Eq;
  std::vector<Expr> args;          // Bin/Cmp: lhs, rhs; Load: index

  static Expr constant(Scalar v);
  static Expr var(std::string name);
  static Expr binary(BinOp op, Expr lhs, Expr rhs);
  static Expr compare(CmpOp op, Expr lhs, Expr rhs);
  static Expr load(std::string array, Expr index);
  static Expr version();

  bool is_const() const { return kind == Kind::Const; }
};

bool operator==(const Expr& a, const Expr& b);

struct Stmt {
  enum class Kind : std::uint8_t { Assign, Store, For, If, Return, Call, Emit, Guard };

  Kind kind = Kind::Return;
  // Assign/For: variable; Store: array; Call: callee.
  std::string name;
  // Assign: value; Store: index, value; For: lo, hi, step; If: cond;
  // Return/Emit: value; Call: arguments; Guard: conjunction terms.
  std::vector<Expr> exprs;
  std::vector<Stmt> body;    // For body, If then-branch
  std::vector<Stmt> orelse;  // If else-branch
  std::string tag;           // Emit
  std::optional<std::string> into;  // Call result

  static Stmt assign(std::string var, Expr value);
  static Stmt store(std::string array, Expr index, Expr value);
  static Stmt loop(std::string var, Expr lo, Expr hi, Expr step, std::vector<Stmt> body);
  static Stmt branch(Expr cond, std::vector<Stmt> then_body, std::vector<Stmt> else_body);
  static Stmt ret(Expr value);
  static Stmt call(std::string callee, std::vector<Expr> args,
                   std::optional<std::string> into = std::nullopt);
  static Stmt emit(std::string tag, Expr payload);
  static Stmt guard(std::vector<Expr> terms);
};

bool operator==(const Stmt& a, const Stmt& b);

struct Param {
  std::string name;
  ParamType type;
  friend bool operator==(const Param&, const Param&) = default;
};

struct Local {
  std::string name;
  ScalarType type;
  friend bool operator==(const Local&, const Local&) = default;
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  std::vector<Local> locals;
  std::vector<Stmt> body;
  // Derived by annotate(): no Store, no Emit, only pure callees.
  bool pure = false;
  std::optional<ScalarType> return_type;

  const Param* find_param(std::string_view n) const;
  const Local* find_local(std::string_view n) const;
  std::optional<ScalarType> scalar_type_of(std::string_view n) const;
};

bool operator==(const FunctionDef& a, const FunctionDef& b);

enum class PointKind : std::uint8_t { Workload, Config };

std::string_view to_string(PointKind k);

struct SpecPointDecl {
  std::string function;
  std::string variable;
  PointKind kind = PointKind::Workload;
  bool driver_coupled = false;
  friend bool operator==(const SpecPointDecl&, const SpecPointDecl&) = default;
};

struct Program {
  std::map<std::string, FunctionDef> functions;
  std::vector<SpecPointDecl> points;

  const FunctionDef* find(std::string_view name) const;
  const SpecPointDecl* find_point(std::string_view function, std::string_view variable) const;
};

bool operator==(const Program& a, const Program& b);

struct Diagnostic {
  std::string function;
  int stmt_index = -1;  // preorder statement index within the function, -1 if n/a
  std::string rule;
  std::string message;
};

std::string to_string(const Diagnostic& d);

// --- parse / print / validate ---------------------------------------------

/// Parses and validates; throws SyntaxError or ValidationError.
Program parse_program(std::string_view text);

/// Parses without validating (used for diagnostics tooling and tests).
Program parse_program_unchecked(std::string_view text);

std::string pretty_print(const Program& p);
std::string pretty_print(const FunctionDef& f);

std::vector<Diagnostic> validate(const Program& p);

/// Validates one function against the program it lives in (callees are
/// looked up in `p`; `f` may differ from p.functions[f.name]).
std::vector<Diagnostic> validate_function(const Program& p, const FunctionDef& f);

/// Fills in FunctionDef::pure and FunctionDef::return_type for every function.
void annotate(Program& p);

/// Annotates a single function against an already annotated program.
void annotate_function(const Program& p, FunctionDef& f);

// --- structural helpers used by passes and the engine ---------------------

std::size_t count_statements(const std::vector<Stmt>& body);
std::size_t count_nodes(const std::vector<Stmt>& body);
std::size_t count_nodes(const Expr& e);
std::size_t count_loops(const std::vector<Stmt>& body);

/// Variables read by an expression (arrays excluded unless `arrays` is set).
void collect_uses(const Expr& e, std::set<std::string>& out);

/// Variables assigned anywhere in the statements (Assign targets, Call
/// results, loop variables).
void collect_assigned(const std::vector<Stmt>& body, std::set<std::string>& out);

bool uses_variable(const std::vector<Stmt>& body, std::string_view var);

}  // namespace rtspec::ir
