#include "rtspec/config.hpp"

#include <json.hpp>

#include "rtspec/error.hpp"

namespace rtspec {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("'" + (path_.empty() ? std::string("(root)") : path_) + "' must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) fail("unknown key '" + join(path_, k) + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return join(path_, key); }

  std::string str(const char* key) const {
    const auto& v = need(key);
    if (!v.is_string()) fail("key '" + path(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::optional<std::string> opt_str(const char* key) const {
    return has(key) ? std::optional(str(key)) : std::nullopt;
  }

  bool boolean(const char* key, bool dflt) const {
    if (!has(key)) return dflt;
    if (!at(key).is_boolean()) fail("key '" + path(key) + "' must be a boolean");
    return at(key).get<bool>();
  }
  std::optional<bool> opt_bool(const char* key) const {
    return has(key) ? std::optional(boolean(key, false)) : std::nullopt;
  }

  double number(const char* key, double dflt) const {
    if (!has(key)) return dflt;
    if (!at(key).is_number()) fail("key '" + path(key) + "' must be a number");
    return at(key).get<double>();
  }

  std::uint64_t count(const char* key, std::uint64_t dflt) const {
    if (!has(key)) return dflt;
    const auto& v = at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      fail("key '" + path(key) + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  int small(const char* key, int dflt) const {
    auto v = count(key, static_cast<std::uint64_t>(dflt));
    if (v > 1'000'000'000) fail("key '" + path(key) + "' is too large");
    return static_cast<int>(v);
  }

 private:
  const json& need(const char* key) const {
    if (!has(key)) fail("missing key '" + path(key) + "'");
    return at(key);
  }

  const json& j_;
  std::string path_;
};

Scalar to_scalar(const json& v, const std::string& path) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) {
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
      fail("key '" + path + "' is out of range");
    return v.get<std::int64_t>();
  }
  if (v.is_number_float()) return v.get<double>();
  fail("key '" + path + "' must be a scalar (integer, float or boolean)");
}

std::vector<Scalar> to_scalars(const json& v, const std::string& path) {
  if (!v.is_array()) fail("key '" + path + "' must be an array");
  std::vector<Scalar> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(to_scalar(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

PointConfig read_point(const json& j, const std::string& path) {
  Reader r(j, path);
  r.allow({"function", "variable", "kind", "candidates", "guard", "collection", "driver_coupled", "default"});
  PointConfig p;
  p.id = {r.str("function"), r.str("variable")};
  if (auto k = r.opt_str("kind")) {
    if (*k == "workload") p.kind = ir::PointKind::Workload;
    else if (*k == "config") p.kind = ir::PointKind::Config;
    else fail("key '" + r.path("kind") + "' must be \"workload\" or \"config\"");
  }
  if (r.has("candidates")) p.candidates = to_scalars(r.at("candidates"), r.path("candidates"));
  p.guard = r.opt_bool("guard");
  p.collection = r.opt_bool("collection");
  p.driver_coupled = r.opt_bool("driver_coupled");
  if (r.has("default")) p.default_value = to_scalar(r.at("default"), r.path("default"));
  return p;
}

PolicyConfig read_policy(const json& j) {
  Reader r(j, "policy");
  auto name = r.str("name");
  PolicyConfig p;
  if (name == "none") {
    r.allow({"name"});
  } else if (name == "exhaustive") {
    r.allow({"name", "windows_per_config"});
    p.name = PolicyName::Exhaustive;
    p.windows_per_config = r.small("windows_per_config", 1);
  } else if (name == "epsilon_greedy") {
    r.allow({"name", "epsilon", "windows_per_pull", "pulls", "seed"});
    p.name = PolicyName::EpsilonGreedy;
    p.epsilon = r.number("epsilon", 0.1);
    p.windows_per_pull = r.small("windows_per_pull", 1);
    p.pulls = r.small("pulls", 0);
    if (r.has("seed")) p.seed = r.count("seed", 0);
  } else if (name == "hot_map") {
    r.allow({"name", "function", "key"});
    p.name = PolicyName::HotMap;
    p.function = r.str("function");
    p.key = r.str("key");
  } else {
    fail("key 'policy.name' must be one of none, exhaustive, epsilon_greedy, hot_map");
  }
  return p;
}

RuntimeConfig read_runtime(const Reader& r) {
  RuntimeConfig c;
  if (r.has("points")) {
    const auto& pts = r.at("points");
    if (!pts.is_array()) fail("key 'points' must be an array");
    for (std::size_t i = 0; i < pts.size(); ++i)
      c.points.push_back(read_point(pts[i], "points[" + std::to_string(i) + "]"));
  }
  if (r.has("policy")) c.policy = read_policy(r.at("policy"));
  c.calls_per_window = r.count("calls_per_window", c.calls_per_window);
  if (c.calls_per_window == 0) fail("key 'calls_per_window' must be >= 1");
  c.budget_ops = r.count("budget_ops", c.budget_ops);
  if (c.budget_ops == 0) fail("key 'budget_ops' must be >= 1");
  c.monitor_windows = r.small("monitor_windows", c.monitor_windows);
  c.drift.delta = r.number("drop_threshold", c.drift.delta);
  if (c.drift.delta <= 0 || c.drift.delta >= 1) fail("key 'drop_threshold' must be in (0, 1)");
  c.drift.windows = r.small("drop_windows", c.drift.windows);
  if (c.drift.windows < 1) fail("key 'drop_windows' must be >= 1");
  if (auto m = r.opt_str("drift")) {
    if (*m == "change") c.drift.mode = DriftMode::Change;
    else if (*m == "drop") c.drift.mode = DriftMode::Drop;
    else fail("key 'drift' must be \"change\" or \"drop\"");
  }
  c.unroll_cap = r.small("unroll_cap", c.unroll_cap);
  if (c.unroll_cap < 1) fail("key 'unroll_cap' must be >= 1");
  c.cap = r.count("cap", c.cap);
  c.top_k = r.count("top_k", c.top_k);
  if (c.top_k == 0) fail("key 'top_k' must be >= 1");
  c.feasibility_floor = r.number("feasibility_floor", c.feasibility_floor);
  if (c.feasibility_floor < 0 || c.feasibility_floor > 1) fail("key 'feasibility_floor' must be in [0, 1]");
  c.histogram_capacity = r.count("histogram_capacity", c.histogram_capacity);
  if (c.histogram_capacity == 0) fail("key 'histogram_capacity' must be >= 1");
  c.exec_cache = r.boolean("exec_cache", c.exec_cache);
  c.wallclock = r.boolean("wallclock", c.wallclock);
  c.seed = r.count("seed", c.seed);
  return c;
}

const std::initializer_list<const char*> kRuntimeKeys = {
    "points", "policy", "calls_per_window", "budget_ops", "monitor_windows", "drop_threshold",
    "drop_windows", "drift", "unroll_cap", "cap", "top_k", "feasibility_floor", "histogram_capacity",
    "exec_cache", "wallclock", "seed"};

workloads::Distribution read_distribution(const json& j, const std::string& path) {
  Reader r(j, path);
  r.allow({"constant", "choice", "zipf"});
  if (j.size() != 1) fail("key '" + path + "' needs exactly one of constant, choice, zipf");
  workloads::Distribution d;
  if (r.has("constant")) {
    d.kind = workloads::Distribution::Kind::Constant;
    d.values = {to_scalar(r.at("constant"), r.path("constant"))};
  } else if (r.has("choice")) {
    d.kind = workloads::Distribution::Kind::Choice;
    d.values = to_scalars(r.at("choice"), r.path("choice"));
    if (d.values.empty()) fail("key '" + r.path("choice") + "' must not be empty");
  } else {
    Reader z(r.at("zipf"), r.path("zipf"));
    z.allow({"exponent", "count", "values"});
    d.kind = workloads::Distribution::Kind::Zipf;
    d.exponent = z.number("exponent", 1.0);
    if (z.has("values")) d.values = to_scalars(z.at("values"), z.path("values"));
    d.count = static_cast<std::int64_t>(z.count("count", d.values.size()));
    if (d.values.empty() && d.count == 0) fail("key '" + r.path("zipf") + "' needs count or values");
  }
  return d;
}

WorkloadConfig read_workload(const json& j, std::uint64_t default_seed) {
  Reader r(j, "workload");
  r.allow({"generator", "seed", "phases", "params"});
  WorkloadConfig w;
  w.generator = r.str("generator");
  if (w.generator != "mmul" && w.generator != "lpm" && w.generator != "pipeline")
    fail("key 'workload.generator' must be one of mmul, lpm, pipeline");
  w.stream.generator = w.generator;
  w.stream.seed = r.count("seed", default_seed);
  if (r.has("params")) {
    Reader p(r.at("params"), "workload.params");
    p.allow({"input_seed", "rules", "addresses", "items"});
    w.input_seed = p.count("input_seed", w.input_seed);
    w.rules = p.count("rules", w.rules);
    w.addresses = p.count("addresses", w.addresses);
    w.items = p.count("items", w.items);
  }
  if (!r.has("phases")) fail("missing key 'workload.phases'");
  const auto& phases = r.at("phases");
  if (!phases.is_array() || phases.empty()) fail("key 'workload.phases' must be a non-empty array");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    std::string path = "workload.phases[" + std::to_string(i) + "]";
    Reader pr(phases[i], path);
    pr.allow({"calls", "params"});
    workloads::Phase ph;
    ph.calls = pr.count("calls", 0);
    if (ph.calls == 0) fail("key '" + pr.path("calls") + "' must be >= 1");
    if (pr.has("params")) {
      const auto& params = pr.at("params");
      if (!params.is_object()) fail("key '" + pr.path("params") + "' must be an object");
      for (const auto& [name, d] : params.items())
        ph.params.emplace(name, read_distribution(d, pr.path("params") + "." + name));
    }
    w.stream.phases.push_back(std::move(ph));
  }
  return w;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

RuntimeConfig parse_runtime_config(std::string_view json_text) {
  json j = parse_json(json_text);
  Reader r(j, "");
  r.allow(kRuntimeKeys);
  return read_runtime(r);
}

RunConfig parse_run_config(std::string_view json_text) {
  json j = parse_json(json_text);
  Reader r(j, "");
  std::vector<const char*> keys(kRuntimeKeys);
  for (const auto& [k, v] : j.items()) {
    bool ok = k == "workload";
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) fail("unknown key '" + k + "'");
  }
  RunConfig c;
  c.runtime = read_runtime(r);
  if (!r.has("workload")) fail("missing key 'workload'");
  c.workload = read_workload(r.at("workload"), c.runtime.seed);
  return c;
}

}  // namespace rtspec
