#include "rtspec/driver.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "rtspec/error.hpp"
#include "rtspec/runtime.hpp"
#include "rtspec/workloads.hpp"

namespace rtspec {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty()) rows.push_back(split(line, ','));
  }
  return rows;
}

// Resolves each scalar parameter of `fn` for one request: tuned points take
// the runtime's value, otherwise the request supplies it.
std::map<std::string, Scalar> resolve_params(const Runtime& rt, const std::string& fn,
                                             const workloads::Request& req) {
  std::map<std::string, Scalar> out;
  const auto& f = rt.program().functions.at(fn);
  for (const auto& p : f.params) {
    if (!ir::scalar_of(p.type)) continue;
    std::optional<Scalar> v;
    if (const auto* d = rt.program().find_point(fn, p.name)) {
      const auto& sp = rt.point({fn, p.name});
      if (d->kind == ir::PointKind::Config || sp.driver_coupled) v = rt.current_value({fn, p.name});
    }
    if (!v) {
      if (auto it = req.find(p.name); it != req.end()) v = it->second;
    }
    if (!v && rt.program().find_point(fn, p.name)) v = rt.current_value({fn, p.name});
    if (v) out.emplace(p.name, *v);
  }
  return out;
}

std::int64_t need_int(const std::map<std::string, Scalar>& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw Error(ErrorCode::Config, "workload supplies no value for '" + name + "'");
  if (!std::holds_alternative<std::int64_t>(it->second))
    throw Error(ErrorCode::Config, "workload value for '" + name + "' must be an integer");
  return std::get<std::int64_t>(it->second);
}

void zero(Value& v) {
  if (auto* a = std::get_if<std::vector<std::int64_t>>(&v)) std::fill(a->begin(), a->end(), 0);
}

struct Workload {
  virtual ~Workload() = default;
  virtual const std::string& function() const = 0;
  virtual ExecResult step(Runtime& rt, const workloads::Request& req) = 0;
};

struct MmulWorkload : Workload {
  std::string fn = "matmul";
  std::uint64_t seed;
  std::map<std::int64_t, workloads::MmulInputs> inputs;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<Value>> buffers;

  explicit MmulWorkload(std::uint64_t s) : seed(s) {}
  const std::string& function() const override { return fn; }

  ExecResult step(Runtime& rt, const workloads::Request& req) override {
    auto params = resolve_params(rt, fn, req);
    auto N = need_int(params, "N");
    auto s = need_int(params, "s");
    if (N < 1 || s < 1 || N % s != 0)
      throw Error(ErrorCode::Config, "block size " + std::to_string(s) + " does not divide N=" + std::to_string(N));
    auto in = inputs.find(N);
    if (in == inputs.end()) in = inputs.emplace(N, workloads::mmul_inputs(N, seed)).first;
    auto buf = buffers.find({N, s});
    if (buf == buffers.end()) buf = buffers.emplace(std::make_pair(N, s), workloads::mmul_args(in->second, s)).first;
    auto r = rt.call(fn, buf->second);
    zero(buf->second[2]);
    return r;
  }
};

struct LpmWorkload : Workload {
  std::string fn = "lpm";
  std::vector<workloads::LpmRule> rules;
  std::vector<std::int64_t> addresses;
  std::uint64_t wrong = 0;

  const std::string& function() const override { return fn; }

  ExecResult step(Runtime& rt, const workloads::Request& req) override {
    std::int64_t addr;
    if (auto k = req.find("key"); k != req.end()) {
      if (!std::holds_alternative<std::int64_t>(k->second))
        throw Error(ErrorCode::Config, "workload value for 'key' must be an integer");
      auto idx = std::get<std::int64_t>(k->second);
      if (idx < 0 || static_cast<std::size_t>(idx) >= addresses.size())
        throw Error(ErrorCode::Config, "key " + std::to_string(idx) + " outside the address set");
      addr = addresses[static_cast<std::size_t>(idx)];
    } else {
      addr = need_int(resolve_params(rt, fn, req), "addr");
    }
    std::vector<Value> args{addr};
    auto r = rt.call(fn, args);
    if (!ir::same_value(r.value, Scalar{workloads::lpm_reference(rules, addr)})) ++wrong;
    return r;
  }
};

struct PipelineWorkload : Workload {
  std::string fn = "pipeline";
  std::vector<std::int64_t> payload;
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::vector<Value>> buffers;
  std::uint64_t wrong = 0;

  const std::string& function() const override { return fn; }

  ExecResult step(Runtime& rt, const workloads::Request& req) override {
    auto params = resolve_params(rt, fn, req);
    auto b1 = need_int(params, "b1"), b2 = need_int(params, "b2"), b3 = need_int(params, "b3");
    auto key = std::make_tuple(b1, b2, b3);
    auto buf = buffers.find(key);
    if (buf == buffers.end()) buf = buffers.emplace(key, workloads::pipeline_args(payload, b1, b2, b3)).first;
    auto r = rt.call(fn, buf->second);
    if (std::get<std::vector<std::int64_t>>(buf->second[2]) != payload) ++wrong;
    zero(buf->second[1]);
    zero(buf->second[2]);
    return r;
  }
};

std::string fmt(double v) { return format_decimal(v); }

}  // namespace

RunOutput run_workload(RunConfig cfg, const RunOptions& opts) {
  if (opts.seed) {
    cfg.runtime.seed = *opts.seed;
    cfg.workload.stream.seed = *opts.seed;
  }
  if (opts.wallclock) cfg.runtime.wallclock = true;
  const auto& w = cfg.workload;

  std::unique_ptr<Workload> work;
  ir::Program program;
  if (w.generator == "mmul") {
    program = workloads::build_mmul(1);
    work = std::make_unique<MmulWorkload>(w.input_seed);
  } else if (w.generator == "lpm") {
    auto lw = std::make_unique<LpmWorkload>();
    lw->rules = workloads::random_lpm_rules(w.rules, w.input_seed);
    lw->addresses = workloads::lpm_addresses(lw->rules, w.addresses, w.input_seed + 1);
    program = workloads::build_lpm(lw->rules);
    work = std::move(lw);
  } else {
    auto pw = std::make_unique<PipelineWorkload>();
    std::mt19937_64 rng(w.input_seed);
    for (std::size_t i = 0; i < w.items; ++i) pw->payload.push_back(static_cast<std::int64_t>(rng() % 1000));
    program = workloads::build_batch_pipeline();
    work = std::move(pw);
  }

  Runtime rt(std::move(program), cfg.runtime);
  rt.start_configured_policy();
  workloads::StreamGenerator gen(w.stream);
  while (auto req = gen.next()) work->step(rt, *req);
  rt.flush_window();

  RunOutput out;
  out.metrics_csv = metrics_csv_header(cfg.runtime.wallclock) + "\n";
  for (const auto& win : rt.windows()) out.metrics_csv += metrics_csv_row(win, cfg.runtime.wallclock) + "\n";
  out.exploration_csv = exploration_csv_header() + "\n";
  for (const auto& e : rt.trace()) out.exploration_csv += exploration_csv_row(e) + "\n";
  out.summary = summarize(out.metrics_csv, out.exploration_csv);
  std::uint64_t wrong = 0;
  if (auto* l = dynamic_cast<LpmWorkload*>(work.get())) wrong = l->wrong;
  if (auto* p = dynamic_cast<PipelineWorkload*>(work.get())) wrong = p->wrong;
  out.summary += "incorrect_results: " + std::to_string(wrong) + "\n";
  for (const auto& x : rt.excluded_points()) out.summary += "excluded_point: " + x + "\n";
  return out;
}

RunOutput run_to_dir(const std::string& config_json, const std::filesystem::path& dir, const RunOptions& opts) {
  auto out = run_workload(parse_run_config(config_json), opts);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
  };
  write("metrics.csv", out.metrics_csv);
  write("exploration.csv", out.exploration_csv);
  write("summary.txt", out.summary);
  return out;
}

std::string summarize(const std::string& metrics_csv, const std::string& exploration_csv) {
  struct Row {
    std::uint64_t id, calls, ops, failures;
    std::string config;
    std::optional<double> thr;
  };
  std::vector<Row> rows;
  for (const auto& r : csv_rows(metrics_csv)) {
    if (r.size() < 6) throw Error(ErrorCode::Io, "malformed metrics row");
    rows.push_back({std::stoull(r[0]), std::stoull(r[2]), std::stoull(r[3]), std::stoull(r[5]), r[1],
                    r[4].empty() ? std::nullopt : std::optional(std::stod(r[4]))});
  }
  std::vector<std::string> settles;
  std::optional<std::uint64_t> last_settle, restart_before;
  std::uint64_t restart_after = UINT64_MAX;
  std::uint64_t restarts = 0;
  for (const auto& e : csv_rows(exploration_csv)) {
    if (e.size() < 5) throw Error(ErrorCode::Io, "malformed exploration row");
    auto wid = std::stoull(e[1]);
    if (e[0] == "settle") {
      settles.push_back(e[2]);
      last_settle = wid;
      restart_after = UINT64_MAX;
    } else if (e[0] == "restart") {
      ++restarts;
      if (!last_settle || wid >= *last_settle) restart_after = wid;
    }
  }
  if (last_settle)
    for (const auto& e : csv_rows(exploration_csv))
      if (e[0] == "restart" && std::stoull(e[1]) <= *last_settle) restart_before = std::stoull(e[1]);

  std::uint64_t calls = 0, failures = 0;
  for (const auto& r : rows) {
    calls += r.calls;
    failures += r.failures;
  }
  std::string s;
  s += "settled_config: " + (settles.empty() ? std::string("none") : settles.back()) + "\n";
  std::string hist;
  for (const auto& x : settles) hist += (hist.empty() ? "" : " -> ") + x;
  s += "settle_history: " + (hist.empty() ? std::string("none") : hist) + "\n";
  s += "restarts: " + std::to_string(restarts) + "\n";
  s += "windows: " + std::to_string(rows.size()) + "\n";
  s += "calls: " + std::to_string(calls) + "\n";
  s += "guard_failures: " + std::to_string(failures) + "\n";

  auto mean = [](const std::vector<const Row*>& rs) {
    std::uint64_t c = 0, o = 0;
    double t = 0;
    std::size_t n = 0;
    for (const auto* r : rs) {
      c += r->calls;
      o += r->ops;
      if (r->thr) {
        t += *r->thr;
        ++n;
      }
    }
    return std::make_tuple(c ? static_cast<double>(o) / static_cast<double>(c) : 0.0, n ? t / double(n) : 0.0, c);
  };
  if (last_settle) {
    std::uint64_t lo = restart_before.value_or(0);
    std::vector<const Row*> before, after;
    for (const auto& r : rows) {
      if (r.id >= lo && r.id < *last_settle && r.config == "generic") before.push_back(&r);
      if (r.id >= *last_settle && r.id < restart_after) after.push_back(&r);
    }
    auto [ops_b, thr_b, calls_b] = mean(before);
    auto [ops_a, thr_a, calls_a] = mean(after);
    s += "throughput_before: " + (calls_b ? fmt(thr_b) : std::string("n/a")) + "\n";
    s += "throughput_after: " + (calls_a ? fmt(thr_a) : std::string("n/a")) + "\n";
    s += "ops_per_call_before: " + (calls_b ? fmt(ops_b) : std::string("n/a")) + "\n";
    s += "ops_per_call_after: " + (calls_a ? fmt(ops_a) : std::string("n/a")) + "\n";
    s += "op_reduction_pct: " +
         (calls_a && calls_b && ops_b > 0 ? fmt((1.0 - ops_a / ops_b) * 100.0) : std::string("n/a")) + "\n";
  }
  return s;
}

std::string specialize_report(const SpecializeRequest& req) {
  auto program = ir::parse_program(req.program_text);
  auto colon = req.point.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "point must be FN:VAR");
  std::string fn = req.point.substr(0, colon), var = req.point.substr(colon + 1);
  const auto* f = program.find(fn);
  if (!f) throw Error(ErrorCode::UnknownFunction, "unknown function '" + fn + "'");
  if (!program.find_point(fn, var)) throw Error(ErrorCode::UnknownPoint, "unknown point " + req.point);
  auto t = f->scalar_type_of(var);
  if (!t) throw Error(ErrorCode::NotScalar, req.point + " is not a scalar");
  auto value = ir::parse_scalar(req.value, *t);
  if (!value || ir::type_of(*value) != *t)
    throw Error(ErrorCode::PinType, "'" + req.value + "' is not a " + std::string(ir::to_string(*t)));
  SpecializeOptions opts;
  opts.unroll_cap = req.unroll_cap;
  opts.guards = !req.no_guard;
  auto v = pin_and_specialize(program, PinSet{fn, {{var, *value}}}, opts);
  auto before = ir::count_statements(f->body), after = ir::count_statements(v.code.body);
  std::string out;
  out += ";; generic\n" + ir::pretty_print(*f) + "\n";
  out += ";; " + v.id + "\n" + ir::pretty_print(v.code) + "\n";
  out += ";; passes\n" + format_pass_log(v.log);
  if (!out.empty() && out.back() != '\n') out += "\n";
  auto delta = static_cast<long long>(after) - static_cast<long long>(before);
  out += ";; statements: " + std::to_string(before) + " -> " + std::to_string(after) + " (" +
         (delta >= 0 ? "+" : "") + std::to_string(delta) + ")\n";
  return out;
}

std::string report_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "metrics.csv", std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "no metrics.csv in " + dir.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto rows = csv_rows(ss.str());
  if (rows.empty()) throw Error(ErrorCode::Io, "metrics.csv in " + dir.string() + " has no windows");

  struct Agg {
    std::uint64_t calls = 0, ops = 0;
    double thr = 0;
    std::size_t n = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Agg> agg;
  for (const auto& r : rows) {
    if (r.size() < 6) throw Error(ErrorCode::Io, "malformed metrics row");
    if (!agg.contains(r[1])) order.push_back(r[1]);
    auto& a = agg[r[1]];
    a.calls += std::stoull(r[2]);
    a.ops += std::stoull(r[3]);
    if (!r[4].empty()) {
      a.thr += std::stod(r[4]);
      ++a.n;
    }
  }
  auto ops_per_call = [](const Agg& a) {
    return a.calls ? static_cast<double>(a.ops) / static_cast<double>(a.calls) : 0.0;
  };
  const std::string& base = agg.contains("generic") ? std::string("generic") : order.front();
  double base_ops = ops_per_call(agg.at(base));

  std::size_t width = 6;
  for (const auto& c : order) width = std::max(width, c.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("config", width) + "  " + pad("ops/call", 16) + "  " + pad("throughput", 16) + "  benefit%\n";
  for (const auto& c : order) {
    const auto& a = agg.at(c);
    double opc = ops_per_call(a);
    std::string thr = a.n ? fmt(a.thr / double(a.n)) : std::string("n/a");
    std::string benefit = opc > 0 ? fmt((base_ops / opc - 1.0) * 100.0) : std::string("n/a");
    out += pad(c, width) + "  " + pad(fmt(opc), 16) + "  " + pad(thr, 16) + "  " + benefit + "\n";
  }
  return out;
}

}  // namespace rtspec
