#include <doctest.h>

#include "progen.hpp"
#include "rtspec/error.hpp"
#include "rtspec/ir.hpp"
#include "rtspec/workloads.hpp"

using namespace rtspec;

namespace {

bool has_rule(const std::vector<ir::Diagnostic>& d, const std::string& rule) {
  for (const auto& x : d)
    if (x.rule == rule) return true;
  return false;
}

}  // namespace

TEST_CASE("identity function parses as pure") {
  auto p = ir::parse_program("(func id ((x i64)) (return x))");
  REQUIRE(p.functions.size() == 1);
  const auto& f = p.functions.at("id");
  CHECK(f.pure);
  CHECK(f.return_type == ir::ScalarType::Int64);
  CHECK(f.params.size() == 1);
}

TEST_CASE("mixed int and float arithmetic is rejected") {
  CHECK_THROWS_AS(ir::parse_program("(func f ((x i64)) (return (+ x 1.0)))"), ValidationError);
}

TEST_CASE("syntax errors carry a line number") {
  try {
    ir::parse_program("(func f ((x i64))\n  (return (+ x 1))");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.code() == ErrorCode::Syntax);
  }
  CHECK_THROWS_AS(ir::parse_program("(func f ((x i32)) (return x))"), SyntaxError);
}

TEST_CASE("matmul source has one function and six loops") {
  auto p = workloads::build_mmul(64);
  REQUIRE(p.functions.size() == 1);
  CHECK(ir::count_loops(p.functions.at("matmul").body) == 6);
  REQUIRE(p.points.size() == 1);
  CHECK(p.points[0].variable == "s");
  CHECK(p.points[0].driver_coupled);
}

TEST_CASE("validator diagnostics") {
  SUBCASE("loop variable reassigned") {
    auto p = ir::parse_program_unchecked("(func f ((n i64)) (for i 0 n 1 (set i 3)) (return 0))");
    auto d = ir::validate(p);
    REQUIRE(d.size() == 1);
    CHECK(d[0].rule == "loop variable reassigned");
    CHECK(d[0].function == "f");
    CHECK(d[0].stmt_index >= 0);
  }
  SUBCASE("recursion") {
    auto p = ir::parse_program_unchecked(
        "(func f ((n i64)) (locals (r i64)) (call f (n) into r) (return r))");
    auto d = ir::validate(p);
    REQUIRE(d.size() == 1);
    CHECK(d[0].rule == "recursion not allowed");
  }
  SUBCASE("lpm workload is valid") {
    std::vector<workloads::LpmRule> rules{{0x0A000000u, 8, 1}, {0x0A010000u, 16, 2}};
    auto p = ir::parse_program_unchecked(workloads::lpm_source(rules));
    CHECK(ir::validate(p).empty());
    auto r = workloads::random_lpm_rules(1000, 5);
    CHECK(ir::validate(ir::parse_program_unchecked(workloads::lpm_source(r))).empty());
  }
  SUBCASE("use before definition") {
    auto p = ir::parse_program_unchecked("(func f ((n i64)) (locals (t i64)) (return t))");
    CHECK(has_rule(ir::validate(p), "use before definition"));
  }
  SUBCASE("loop-body definitions are not visible after the loop") {
    auto p = ir::parse_program_unchecked(
        "(func f ((n i64)) (locals (t i64)) (for i 0 n 1 (set t i)) (return t))");
    CHECK(has_rule(ir::validate(p), "use before definition"));
  }
  SUBCASE("modulo needs integers") {
    auto p = ir::parse_program_unchecked("(func f ((x f64)) (return (% x 2.0)))");
    CHECK(has_rule(ir::validate(p), "type mismatch"));
  }
  SUBCASE("inconsistent return types") {
    auto p = ir::parse_program_unchecked(
        "(func f ((x i64)) (if (< x 0) (then (return 1.5)) (else)) (return x))");
    CHECK(has_rule(ir::validate(p), "inconsistent return type"));
  }
}

TEST_CASE("purity follows stores, emits and callees") {
  auto p = ir::parse_program(R"(
(func g ((x i64)) (emit "e" x) (return x))
(func h ((x i64)) (return (* x 2)))
(func f ((x i64)) (locals (y i64)) (call h (x) into y) (return y))
(func k ((x i64)) (locals (y i64)) (call g (x) into y) (return y))
(func w ((a arr-i64)) (store a 0 1) (return 0))
)");
  CHECK_FALSE(p.functions.at("g").pure);
  CHECK(p.functions.at("h").pure);
  CHECK(p.functions.at("f").pure);
  CHECK_FALSE(p.functions.at("k").pure);
  CHECK_FALSE(p.functions.at("w").pure);
}

TEST_CASE("pretty print round trips") {
  SUBCASE("identity") {
    auto p = ir::parse_program("(func id ((x i64)) (return x))");
    auto text = ir::pretty_print(p);
    CHECK(ir::parse_program(text) == p);
    CHECK(ir::pretty_print(ir::parse_program(text)) == text);
  }
  SUBCASE("nested if inside for") {
    auto p = ir::parse_program(R"(
(func f ((n i64) (a arr-i64)) (locals (t i64))
  (set t 0)
  (for i 0 n 1
    (if (< i 3)
      (then (if (== i 1) (then (store a i 7)) (else (emit "x" i))))
      (else (set t (+ t i)))))
  (return t))
(specpoint f n workload)
)");
    CHECK(ir::parse_program(ir::pretty_print(p)) == p);
  }
  SUBCASE("literals") {
    auto p = ir::parse_program("(func f ((x f64) (b bool)) (if (== b true) (then (return -0.0)) (else)) (return (* x 1e300)))");
    CHECK(ir::parse_program(ir::pretty_print(p)) == p);
  }
  SUBCASE("generated programs") {
    progen::Generator g(99);
    for (int i = 0; i < 50; ++i) {
      auto p = g.program();
      CHECK(ir::parse_program(ir::pretty_print(p)) == p);
    }
  }
}

TEST_CASE("scalar literal parsing") {
  CHECK(ir::same_value(*ir::parse_scalar("4"), Scalar{std::int64_t{4}}));
  CHECK(ir::same_value(*ir::parse_scalar("4", ir::ScalarType::Float64), Scalar{4.0}));
  CHECK(ir::same_value(*ir::parse_scalar("true"), Scalar{true}));
  CHECK_FALSE(ir::parse_scalar("four").has_value());
  CHECK(ir::format_scalar(Scalar{2.0}) != ir::format_scalar(Scalar{std::int64_t{2}}));
}
