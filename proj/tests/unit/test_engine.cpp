#include <doctest.h>

#include "progen.hpp"
#include "rtspec/engine.hpp"
#include "rtspec/workloads.hpp"

using namespace rtspec;

namespace {

std::shared_ptr<const Variant> specialize(const ir::Program& p, const std::string& fn,
                                          std::map<std::string, Scalar> pins, SpecializeOptions o = {}) {
  return std::make_shared<const Variant>(pin_and_specialize(p, PinSet{fn, std::move(pins)}, o));
}

ExecResult run(Engine& e, const std::string& fn, std::vector<Value> args) { return e.call(fn, args); }

TrapKind trap_of(Engine& e, const std::string& fn, std::vector<Value> args) {
  try {
    e.call(fn, args);
  } catch (const Trap& t) {
    return t.kind();
  }
  FAIL("no trap");
  return TrapKind::Type;
}

}  // namespace

TEST_CASE("op counting") {
  Engine e(ir::parse_program("(func f () (return 1))"));
  CHECK(run(e, "f", {}).ops == 2);

  Engine l(ir::parse_program("(func f () (locals (x i64)) (set x 0) (for i 0 2 1 (set x i)) (return x))"));
  // set 2 + loop 1 + bounds 3 + 2 * (set 2) + return 2
  CHECK(run(l, "f", {}).ops == 2 + 11 + 2);

  Engine only(ir::parse_program("(func g ((x i64)) (for i 0 2 1 (set x i)) (return 0))"));
  CHECK(run(only, "g", {std::int64_t{0}}).ops == 11 + 2);
}

TEST_CASE("matmul op goldens at N=8") {
  auto p = workloads::build_mmul(8);
  Engine e(p);
  auto args = workloads::mmul_args(workloads::mmul_inputs(8, 1), 4);
  auto g = e.call("matmul", args);
  CHECK(g.ops == 11563);

  e.set_active_variant("matmul", specialize(p, "matmul", {{"s", Scalar{std::int64_t{4}}}}));
  auto args2 = workloads::mmul_args(workloads::mmul_inputs(8, 1), 4);
  auto s = e.call("matmul", args2);
  CHECK(s.ops == 7615);
  CHECK(args == args2);
  CHECK_FALSE(s.guard_failed);
}

TEST_CASE("guard failure falls back to the generic function") {
  auto p = ir::parse_program("(func f ((s i64) (x i64)) (emit \"e\" x) (return (* s x)))");
  Engine e(p);
  e.set_active_variant("f", specialize(p, "f", {{"s", Scalar{std::int64_t{3}}}}));
  int cleanups = 0;
  std::vector<EffectRecord> partial{{"x", "x", Scalar{std::int64_t{9}}}};
  e.register_cleanup("f", [&](const std::string& fn, const std::vector<Value>& args,
                               const std::vector<EffectRecord>& eff) {
    ++cleanups;
    CHECK(fn == "f");
    CHECK(std::get<std::int64_t>(args[0]) == 5);
    partial = eff;
  });

  auto hit = run(e, "f", {std::int64_t{3}, std::int64_t{7}});
  CHECK(ir::same_value(hit.value, Scalar{std::int64_t{21}}));
  CHECK_FALSE(hit.fallback_used);
  CHECK(cleanups == 0);

  auto miss = run(e, "f", {std::int64_t{5}, std::int64_t{7}});
  CHECK(ir::same_value(miss.value, Scalar{std::int64_t{35}}));
  CHECK(miss.guard_failed);
  CHECK(miss.fallback_used);
  CHECK(cleanups == 1);
  CHECK(partial.empty());
  REQUIRE(miss.effects.size() == 1);
  CHECK(ir::same_value(miss.effects[0].payload, Scalar{std::int64_t{7}}));

  const auto& st = e.stats(e.active_variant("f").id);
  CHECK(st.calls == 2);
  CHECK(st.guard_failures == 1);
}

TEST_CASE("unguarded variant computes with the pinned value") {
  auto p = ir::parse_program("(func f ((s i64) (x i64)) (return (* s x)))");
  Engine e(p);
  e.set_active_variant("f", specialize(p, "f", {{"s", Scalar{std::int64_t{3}}}}, {.guards = false}));
  auto r = run(e, "f", {std::int64_t{5}, std::int64_t{7}});
  CHECK(ir::same_value(r.value, Scalar{std::int64_t{21}}));
  CHECK_FALSE(r.guard_failed);
  e.reset_to_generic("f");
  CHECK(ir::same_value(run(e, "f", {std::int64_t{5}, std::int64_t{7}}).value, Scalar{std::int64_t{35}}));
}

TEST_CASE("traps") {
  Engine e(ir::parse_program(R"(
(func div ((x i64)) (return (/ 10 x)))
(func oob ((a arr-i64) (i i64)) (return (load a i)))
(func step ((n i64)) (locals (t i64)) (set t 0) (for i 0 4 n (set t i)) (return t))
(func fdiv ((x f64)) (return (/ 1.0 x))))"));
  CHECK(trap_of(e, "div", {std::int64_t{0}}) == TrapKind::DivByZero);
  CHECK(trap_of(e, "oob", {std::vector<std::int64_t>{1, 2}, std::int64_t{2}}) == TrapKind::OobIndex);
  CHECK(trap_of(e, "oob", {std::vector<std::int64_t>{1, 2}, std::int64_t{-1}}) == TrapKind::OobIndex);
  CHECK(trap_of(e, "step", {std::int64_t{0}}) == TrapKind::BadStep);
  CHECK(trap_of(e, "div", {1.5}) == TrapKind::Type);
  CHECK(trap_of(e, "fdiv", {0.0}) == TrapKind::DivByZero);
  CHECK(std::get<double>(run(e, "fdiv", {4.0}).value) == 0.25);
  try {
    std::vector<Value> a{std::int64_t{0}};
    e.call("div", a);
  } catch (const Trap& t) {
    CHECK(std::string(t.what()).find("div_by_zero in div at stmt 0") != std::string::npos);
  }
}

TEST_CASE("wrapping integer arithmetic") {
  Engine e(ir::parse_program("(func f ((x i64)) (return (* x 2)))"));
  auto r = run(e, "f", {std::int64_t{INT64_MAX}});
  CHECK(std::get<std::int64_t>(r.value) == -2);
  Engine d(ir::parse_program("(func f ((x i64)) (return (/ x -1)))"));
  CHECK(std::get<std::int64_t>(run(d, "f", {std::int64_t{INT64_MIN}}).value) == INT64_MIN);
}

TEST_CASE("nested calls and array aliasing") {
  Engine e(ir::parse_program(R"(
(func inc ((a arr-i64) (i i64)) (store a i (+ (load a i) 1)) (return 0))
(func f ((a arr-i64)) (locals (t i64)) (call inc (a 0) into t) (call inc (a 0)) (return (load a 0))))"));
  std::vector<Value> args{std::vector<std::int64_t>{5, 0}};
  auto r = e.call("f", args);
  CHECK(std::get<std::int64_t>(r.value) == 7);
  CHECK(std::get<std::vector<std::int64_t>>(args[0])[0] == 7);
}

TEST_CASE("replace_function bumps the table version") {
  auto p = workloads::build_lpm({{0x0A000000u, 8, 1}});
  Engine e(p);
  CHECK(e.table_version("lpm") == 0);
  auto v = std::make_shared<const Variant>(
      apply_hot_map(p, {"lpm", "addr", {{Scalar{std::int64_t{0x0A000001}}, Scalar{std::int64_t{1}}}}, 0}));
  e.set_active_variant("lpm", v);
  CHECK_FALSE(run(e, "lpm", {std::int64_t{0x0A000001}}).guard_failed);

  auto q = workloads::build_lpm({{0x0A000000u, 8, 4}});
  e.replace_function(q.functions.at("lpm"));
  CHECK(e.table_version("lpm") == 1);
  CHECK(e.active_variant("lpm").id == v->id);
  auto r = run(e, "lpm", {std::int64_t{0x0A000001}});
  CHECK(r.guard_failed);
  CHECK(std::get<std::int64_t>(r.value) == 4);
}

TEST_CASE("result cache is observationally transparent") {
  progen::Generator gen(77);
  for (int n = 0; n < 40; ++n) {
    auto c = gen.make_case();
    Engine plain(c.program), cached(c.program);
    cached.set_result_cache(true);
    auto v = specialize(c.program, c.entry, c.pins.values);
    plain.set_active_variant(c.entry, v);
    cached.set_active_variant(c.entry, v);
    int pc = 0, cc = 0;
    plain.register_cleanup(c.entry, [&](auto&&...) { ++pc; });
    cached.register_cleanup(c.entry, [&](auto&&...) { ++cc; });
    auto bad = gen.violate(c);
    for (int rep = 0; rep < 3; ++rep) {
      for (const auto* in : {&c.args, &bad}) {
        auto a1 = *in, a2 = *in;
        std::optional<ExecResult> r1, r2;
        bool t1 = false, t2 = false;
        try {
          r1 = plain.call(c.entry, a1);
        } catch (const Trap&) {
          t1 = true;
        }
        try {
          r2 = cached.call(c.entry, a2);
        } catch (const Trap&) {
          t2 = true;
        }
        REQUIRE(t1 == t2);
        if (t1) continue;
        CHECK(ir::same_value(r1->value, r2->value));
        CHECK(r1->ops == r2->ops);
        CHECK(r1->guard_failed == r2->guard_failed);
        CHECK(r1->effects == r2->effects);
        CHECK(a1 == a2);
      }
    }
    CHECK(pc == cc);
    CHECK(plain.all_stats() .size() == cached.all_stats().size());
    for (const auto& [id, st] : plain.all_stats()) {
      CHECK(cached.stats(id).calls == st.calls);
      CHECK(cached.stats(id).total_ops == st.total_ops);
      CHECK(cached.stats(id).guard_failures == st.guard_failures);
    }
  }
}
