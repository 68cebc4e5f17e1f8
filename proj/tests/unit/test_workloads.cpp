#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "rtspec/error.hpp"
#include "rtspec/workloads.hpp"

using namespace rtspec;
using namespace rtspec::workloads;

TEST_CASE("matmul matches the naive product") {
  for (std::int64_t N : {4, 8, 12}) {
    auto p = build_mmul(N);
    auto in = mmul_inputs(N, 3);
    auto want = naive_matmul(in.a, in.b, N);
    for (std::int64_t s : {1, 2, 4}) {
      if (N % s) continue;
      Engine e(p);
      auto args = mmul_args(in, s);
      e.call("matmul", args);
      CHECK(std::get<std::vector<std::int64_t>>(args[2]) == want);

      auto v = std::make_shared<const Variant>(
          pin_and_specialize(p, PinSet{"matmul", {{"s", Scalar{s}}}}));
      e.set_active_variant("matmul", v);
      auto args2 = mmul_args(in, s);
      auto r = e.call("matmul", args2);
      CHECK_FALSE(r.guard_failed);
      CHECK(std::get<std::vector<std::int64_t>>(args2[2]) == want);
    }
  }
}

TEST_CASE("matmul by the identity") {
  Engine e(build_mmul(2));
  std::vector<Value> args{std::vector<std::int64_t>{1, 2, 3, 4}, std::vector<std::int64_t>{1, 0, 0, 1},
                          std::vector<std::int64_t>(4, 0), std::int64_t{2}, std::int64_t{1}};
  e.call("matmul", args);
  CHECK(std::get<std::vector<std::int64_t>>(args[2]) == std::vector<std::int64_t>{1, 2, 3, 4});
}

TEST_CASE("matmul N=64 ops per block size") {
  // frozen from the reference evaluator (tools/mmul_oracle)
  const std::map<std::int64_t, std::uint64_t> generic{{2, 8526023}, {4, 5899879},  {8, 5067191},
                                                      {16, 4738687}, {32, 4592363}, {64, 4523179}};
  const std::map<std::int64_t, std::uint64_t> pinned{{2, 5380299}, {4, 3876459},  {8, 3448251},
                                                     {16, 3285507}, {32, 4592351}, {64, 4523181}};
  auto p = build_mmul(64);
  auto in = mmul_inputs(64, 1);
  for (const auto& [s, ops] : generic) {
    Engine e(p);
    auto args = mmul_args(in, s);
    CHECK(e.call("matmul", args).ops == ops);
    e.set_active_variant("matmul", std::make_shared<const Variant>(pin_and_specialize(p, PinSet{"matmul", {{"s", Scalar{s}}}})));
    auto again = mmul_args(in, s);
    CHECK(e.call("matmul", again).ops == pinned.at(s));
  }
}

TEST_CASE("f64 matmul within relative tolerance") {
  auto p = ir::parse_program(mmul_f64_source());
  const std::int64_t N = 8;
  std::mt19937_64 rng(3);
  std::vector<double> a(N * N), b(N * N);
  for (auto& x : a) x = uniform01(rng) - 0.5;
  for (auto& x : b) x = uniform01(rng) * 3.0;
  std::vector<double> want(N * N, 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    for (std::int64_t j = 0; j < N; ++j)
      for (std::int64_t k = 0; k < N; ++k) want[i * N + j] += a[i * N + k] * b[k * N + j];
  for (std::int64_t s : {2, 4}) {
    std::vector<double> packed(N * N);
    for (std::int64_t r = 0; r < N; ++r)
      for (std::int64_t c = 0; c < N; ++c)
        packed[((r / s) * (N / s) + c / s) * s * s + (r % s) * s + c % s] = b[r * N + c];
    Engine e(p);
    e.set_active_variant("matmul_f64", std::make_shared<const Variant>(
                                           pin_and_specialize(p, PinSet{"matmul_f64", {{"s", Scalar{s}}}})));
    std::vector<Value> args{a, packed, std::vector<double>(N * N, 0.0), N, s};
    CHECK_FALSE(e.call("matmul_f64", args).guard_failed);
    const auto& c = std::get<std::vector<double>>(args[2]);
    for (std::size_t k = 0; k < want.size(); ++k)
      CHECK(std::abs(c[k] - want[k]) <= 1e-12 * std::max(1.0, std::abs(want[k])));
  }
}

TEST_CASE("tile packing") {
  std::vector<std::int64_t> m(16);
  std::iota(m.begin(), m.end(), 0);
  auto t = pack_tiles(m, 4, 2);
  CHECK(t == std::vector<std::int64_t>{0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15});
  CHECK(pack_tiles(m, 4, 4) == m);
}

TEST_CASE("lpm agrees with the reference") {
  auto rules = random_lpm_rules(300, 21);
  auto p = build_lpm(rules);
  Engine e(p);
  for (auto a : lpm_addresses(rules, 200, 8)) {
    std::vector<Value> args{a};
    CHECK(std::get<std::int64_t>(e.call("lpm", args).value) == lpm_reference(rules, a));
  }
  std::vector<Value> miss{std::int64_t{0}};
  CHECK(std::get<std::int64_t>(e.call("lpm", miss).value) == lpm_reference(rules, 0));
}

TEST_CASE("lpm longest prefix wins") {
  std::vector<LpmRule> rules{{*parse_ipv4("10.0.0.0"), 8, 1}, {*parse_ipv4("10.1.0.0"), 16, 2},
                             {*parse_ipv4("10.1.2.0"), 24, 3}, {0, 0, 9}};
  auto p = build_lpm(rules);
  Engine e(p);
  auto route = [&](const char* ip) {
    std::vector<Value> a{static_cast<std::int64_t>(*parse_ipv4(ip))};
    return std::get<std::int64_t>(e.call("lpm", a).value);
  };
  CHECK(route("10.1.2.3") == 3);
  CHECK(route("10.1.9.9") == 2);
  CHECK(route("10.200.0.1") == 1);
  CHECK(route("192.168.0.1") == 9);
}

TEST_CASE("lpm rejects bad prefixes") {
  auto code = [](std::vector<LpmRule> r) {
    try {
      build_lpm(r);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code({{0x0A000000u, 33, 1}}) == ErrorCode::InvalidPrefix);
  CHECK(code({{0x0A000001u, 8, 1}}) == ErrorCode::InvalidPrefix);
  CHECK(code({{0x0A000000u, 8, 1}, {0x0A000000u, 8, 2}}) == ErrorCode::InvalidPrefix);
}

TEST_CASE("ipv4 text") {
  CHECK(parse_ipv4("10.1.2.3") == 0x0A010203u);
  CHECK(format_ipv4(0x0A010203u) == "10.1.2.3");
  CHECK_FALSE(parse_ipv4("10.1.2"));
  CHECK_FALSE(parse_ipv4("256.1.2.3"));
}

TEST_CASE("pipeline copies the payload through") {
  auto p = build_batch_pipeline();
  std::vector<std::int64_t> payload(36);
  std::iota(payload.begin(), payload.end(), 100);
  auto sum = std::accumulate(payload.begin(), payload.end(), std::int64_t{0});
  std::set<std::uint64_t> costs;
  for (auto [b1, b2, b3] : {std::tuple{1, 1, 1}, std::tuple{4, 4, 8}, std::tuple{32, 32, 32}, std::tuple{5, 7, 3}}) {
    Engine e(p);
    auto args = pipeline_args(payload, b1, b2, b3);
    auto r = e.call("pipeline", args);
    costs.insert(r.ops);
    CHECK(std::get<std::int64_t>(r.value) == sum);
    const auto& out = std::get<std::vector<std::int64_t>>(args[2]);
    REQUIRE(out.size() >= payload.size());
    CHECK(std::equal(payload.begin(), payload.end(), out.begin()));
  }
  CHECK(costs.size() == 4);
}

TEST_CASE("zipf top key mass") {
  double h = 0;
  for (int k = 1; k <= 1000; ++k) h += std::pow(k, -1.2);
  ZipfSampler z(1000, 1.2);
  CHECK(z.mass(0) == doctest::Approx(1.0 / h).epsilon(1e-9));

  RequestStream spec{"lpm", 42, {}};
  Distribution d;
  d.kind = Distribution::Kind::Zipf;
  d.count = 1000;
  d.exponent = 1.2;
  spec.phases.push_back({100000, {{"key", d}}});
  StreamGenerator g(spec);
  std::uint64_t top = 0, n = 0;
  while (auto r = g.next()) {
    ++n;
    if (std::get<std::int64_t>(r->at("key")) == 0) ++top;
  }
  CHECK(n == 100000);
  CHECK(std::abs(static_cast<double>(top) / 1e5 - 1.0 / h) < 0.01);
}

TEST_CASE("phase switch is exact") {
  RequestStream spec{"mmul", 1, {}};
  spec.phases.push_back({500, {{"N", {Distribution::Kind::Constant, {Scalar{std::int64_t{256}}}, 0, 1.0}}}});
  spec.phases.push_back({500, {{"N", {Distribution::Kind::Constant, {Scalar{std::int64_t{64}}}, 0, 1.0}}}});
  StreamGenerator g(spec);
  std::vector<std::int64_t> ns;
  while (auto r = g.next()) ns.push_back(std::get<std::int64_t>(r->at("N")));
  REQUIRE(ns.size() == 1000);
  CHECK(std::count(ns.begin(), ns.begin() + 500, 256) == 500);
  CHECK(std::count(ns.begin() + 500, ns.end(), 64) == 500);
}

TEST_CASE("streams are deterministic and phased") {
  RequestStream spec{"mmul", 7, {}};
  Distribution c{Distribution::Kind::Constant, {Scalar{std::int64_t{256}}}, 0, 1.0};
  Distribution ch{Distribution::Kind::Choice, {Scalar{std::int64_t{1}}, Scalar{std::int64_t{2}}}, 0, 1.0};
  spec.phases.push_back({3, {{"N", c}}});
  spec.phases.push_back({4, {{"N", ch}}});
  CHECK(spec.total_calls() == 7);
  StreamGenerator a(spec), b(spec);
  std::vector<std::int64_t> xs, ys;
  while (auto r = a.next()) xs.push_back(std::get<std::int64_t>(r->at("N")));
  while (auto r = b.next()) ys.push_back(std::get<std::int64_t>(r->at("N")));
  CHECK(xs == ys);
  REQUIRE(xs.size() == 7);
  CHECK(xs[0] == 256);
  CHECK(xs[2] == 256);
  for (std::size_t k = 3; k < 7; ++k) CHECK((xs[k] == 1 || xs[k] == 2));
  CHECK(a.phase() == 2);
}

TEST_CASE("uniform01 range") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 10000; ++n) {
    double u = uniform01(rng);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}
