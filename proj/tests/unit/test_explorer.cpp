#include <doctest.h>

#include "rtspec/error.hpp"
#include "rtspec/explorer.hpp"

using namespace rtspec;

namespace {

Scalar i(std::int64_t v) { return Scalar{v}; }

ConfigSpace one_point(std::vector<std::int64_t> vals) {
  ConfigSpace s{"f", {"s"}, {}, 256};
  for (auto v : vals) s.candidates["s"].push_back(i(v));
  return s;
}

MetricWindow window(const Explorer& e, double thr) {
  MetricWindow w;
  w.config_id = e.configs().empty() ? "generic" : e.configs()[e.current()].label();
  w.calls = 1;
  w.throughput = thr;
  return w;
}

// Runs a sweep where `thr` maps config label to throughput; returns the settled label.
std::string sweep(Explorer& e, const std::map<std::string, double>& thr) {
  auto a = e.begin();
  while (a.kind != Action::Kind::Settle) a = e.step(window(e, thr.at(e.configs()[e.current()].label())));
  return e.configs()[a.config].label();
}

}  // namespace

TEST_CASE("enumerate configs") {
  auto c = enumerate_configs(one_point({8, 2, 4, 4}));
  REQUIRE(c.size() == 4);
  CHECK(c[0].label() == "generic");
  CHECK(c[1].label() == "s=2");
  CHECK(c[3].label() == "s=8");

  ConfigSpace three{"p", {"b1", "b2", "b3"}, {}, 256};
  for (const auto* v : {"b1", "b2", "b3"}) three.candidates[v] = {i(1), i(2)};
  auto all = enumerate_configs(three);
  CHECK(all.size() == 9);
  CHECK(all[1].label() == "b1=1|b2=1|b3=1");
  CHECK(all[2].label() == "b1=1|b2=1|b3=2");
  CHECK(all[8].label() == "b1=2|b2=2|b3=2");

  three.cap = 3;
  auto cut = enumerate_configs(three);
  REQUIRE(cut.size() == 4);
  CHECK(cut[3].label() == "b1=1|b2=2|b3=1");

  three.candidates["b2"].clear();
  CHECK_THROWS_AS(enumerate_configs(three), Error);
}

TEST_CASE("exhaustive sweep settles on the argmax") {
  Explorer e([] { return enumerate_configs(one_point({2, 4, 8})); }, ExhaustiveSweep{1}, {}, 0);
  auto label = sweep(e, {{"generic", 40}, {"s=2", 50}, {"s=4", 100}, {"s=8", 80}});
  CHECK(label == "s=4");
  CHECK(e.phase() == ExplorerPhase::Exploiting);
  CHECK(e.settled()->second == 100);
}

TEST_CASE("ties prefer fewer pins then earlier configs") {
  Explorer e([] { return enumerate_configs(one_point({2, 4})); }, ExhaustiveSweep{1}, {}, 0);
  CHECK(sweep(e, {{"generic", 10}, {"s=2", 10}, {"s=4", 10}}) == "generic");
  Explorer f([] { return enumerate_configs(one_point({2, 4})); }, ExhaustiveSweep{1}, {}, 0);
  CHECK(sweep(f, {{"generic", 1}, {"s=2", 10}, {"s=4", 10}}) == "s=2");
}

TEST_CASE("windows per config uses the best window") {
  Explorer e([] { return enumerate_configs(one_point({2})); }, ExhaustiveSweep{2}, {}, 0);
  e.begin();
  CHECK(e.step(window(e, 5)).kind == Action::Kind::Continue);
  auto a = e.step(window(e, 7));
  CHECK(a.kind == Action::Kind::Install);
  CHECK(a.config == 1);
  e.step(window(e, 6));
  a = e.step(window(e, 6));
  CHECK(a.kind == Action::Kind::Settle);
  CHECK(a.config == 0);
  CHECK(e.scoreboard().at(0) == 7);
}

TEST_CASE("drift restart") {
  auto build = [] { return enumerate_configs(one_point({4})); };
  SUBCASE("sustained drop restarts on the second window") {
    Explorer e(build, ExhaustiveSweep{1}, {0.2, 2, DriftMode::Drop}, 0);
    sweep(e, {{"generic", 50}, {"s=4", 100}});
    CHECK(e.step(window(e, 75)).kind == Action::Kind::Continue);
    CHECK(e.step(window(e, 70)).kind == Action::Kind::Restart);
    CHECK(e.phase() == ExplorerPhase::Monitoring);
    CHECK(e.scoreboard().empty());
    CHECK(e.step(window(e, 70)).kind == Action::Kind::Install);
  }
  SUBCASE("a dip that recovers continues") {
    Explorer e(build, ExhaustiveSweep{1}, {0.2, 2, DriftMode::Drop}, 0);
    sweep(e, {{"generic", 50}, {"s=4", 100}});
    CHECK(e.step(window(e, 85)).kind == Action::Kind::Continue);
    CHECK(e.step(window(e, 95)).kind == Action::Kind::Continue);
    CHECK(e.step(window(e, 70)).kind == Action::Kind::Continue);
    CHECK(e.step(window(e, 99)).kind == Action::Kind::Continue);
    CHECK(e.phase() == ExplorerPhase::Exploiting);
  }
  SUBCASE("change mode also reacts to rises") {
    Explorer e(build, ExhaustiveSweep{1}, {0.15, 3, DriftMode::Change}, 0);
    sweep(e, {{"generic", 50}, {"s=4", 100}});
    CHECK(e.step(window(e, 300)).kind == Action::Kind::Continue);
    CHECK(e.step(window(e, 300)).kind == Action::Kind::Continue);
    CHECK(e.step(window(e, 300)).kind == Action::Kind::Restart);
    Explorer d(build, ExhaustiveSweep{1}, {0.15, 3, DriftMode::Drop}, 0);
    sweep(d, {{"generic", 50}, {"s=4", 100}});
    for (int n = 0; n < 5; ++n) CHECK(d.step(window(d, 300)).kind == Action::Kind::Continue);
  }
}

TEST_CASE("monitoring precedes exploration") {
  Explorer e([] { return enumerate_configs(one_point({4})); }, ExhaustiveSweep{1}, {}, 2);
  CHECK(e.begin().kind == Action::Kind::Continue);
  CHECK(e.phase() == ExplorerPhase::Monitoring);
  CHECK(e.step(window(e, 1)).kind == Action::Kind::Continue);
  auto a = e.step(window(e, 1));
  CHECK(a.kind == Action::Kind::Install);
  CHECK(a.config == 0);
}

TEST_CASE("epsilon greedy is reproducible") {
  auto land = [](const std::string& l) { return l == "s=8" ? 90.0 : l == "generic" ? 30.0 : 40.0; };
  auto trace = [&](std::uint64_t seed) {
    Explorer e([] { return enumerate_configs(one_point({2, 4, 8, 16})); }, EpsilonGreedy{0.3, 1, seed, 0}, {}, 0);
    std::vector<std::size_t> picks;
    auto a = e.begin();
    while (a.kind != Action::Kind::Settle) {
      picks.push_back(e.current());
      a = e.step(window(e, land(e.configs()[e.current()].label())));
    }
    picks.push_back(a.config);
    return picks;
  };
  auto a = trace(11), b = trace(11);
  CHECK(a == b);
  CHECK(a.size() == 2 * 5 + 1);
  CHECK(a.front() == 0);
  CHECK(trace(11) != trace(12));
}

TEST_CASE("infeasible configs are skipped") {
  Explorer e([] { return enumerate_configs(one_point({2, 4, 8})); }, ExhaustiveSweep{1}, {}, 0);
  e.begin();
  auto a = e.step(window(e, 10));
  REQUIRE(a.config == 1);
  a = e.infeasible(1);
  CHECK(a.kind == Action::Kind::Install);
  CHECK(a.config == 2);
  e.step(window(e, 20));
  a = e.infeasible(3);
  CHECK(a.kind == Action::Kind::Settle);
  CHECK(a.config == 2);
  CHECK(e.infeasible_configs().size() == 2);
}

TEST_CASE("parameters are validated") {
  auto build = [] { return std::vector<Config>{}; };
  CHECK_THROWS_AS(Explorer(build, ExhaustiveSweep{0}, {}, 0), Error);
  CHECK_THROWS_AS(Explorer(build, EpsilonGreedy{1.5, 1, 0, 0}, {}, 0), Error);
  CHECK_THROWS_AS(Explorer(build, ExhaustiveSweep{1}, {1.0, 3, DriftMode::Drop}, 0), Error);
  CHECK_THROWS_AS(Explorer(build, ExhaustiveSweep{1}, {0.15, 0, DriftMode::Drop}, 0), Error);
}

TEST_CASE("feasibility filter") {
  SpecPoint wp = SpecPoint::from_decl({"f", "s", ir::PointKind::Workload, false});
  SpecPoint cp = SpecPoint::from_decl({"f", "b", ir::PointKind::Config, false});
  PointProfile skewed({"f", "s"}), flat({"f", "s"});
  for (int n = 0; n < 90; ++n) skewed.observe(i(4));
  for (int n = 0; n < 10; ++n) skewed.observe(i(8));
  for (std::int64_t v = 0; v < 10; ++v) flat.observe(i(v));

  ConfigSpace s{"f", {"s"}, {{"s", {i(4), i(8)}}}, 256};
  auto gone = guard_feasibility_filter(s, {{"s", {&wp, &skewed}}});
  CHECK(gone.empty());
  REQUIRE(s.candidates["s"].size() == 1);
  CHECK(ir::same_value(s.candidates["s"][0], i(4)));

  ConfigSpace u{"f", {"s", "b"}, {{"s", {}}, {"b", {i(1), i(2)}}}, 256};
  for (std::int64_t v = 0; v < 10; ++v) u.candidates["s"].push_back(i(v));
  gone = guard_feasibility_filter(u, {{"s", {&wp, &flat}}, {"b", {&cp, &flat}}});
  CHECK(gone == std::vector<std::string>{"s"});
  CHECK(u.variables == std::vector<std::string>{"b"});
  CHECK(u.candidates["b"].size() == 2);

  SpecPoint coupled = wp;
  coupled.driver_coupled = true;
  ConfigSpace k{"f", {"s"}, {{"s", {i(4), i(8)}}}, 256};
  guard_feasibility_filter(k, {{"s", {&coupled, &flat}}});
  CHECK(k.candidates["s"].size() == 2);
}
