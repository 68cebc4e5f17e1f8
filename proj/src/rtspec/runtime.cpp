#include "rtspec/runtime.hpp"

#include <algorithm>
#include <set>

#include "rtspec/error.hpp"

namespace rtspec {

std::string exploration_csv_header() { return "event,window_id,config_id,action,throughput"; }

std::string exploration_csv_row(const TraceEvent& e) {
  return e.event + "," + std::to_string(e.window_id) + "," + e.config_id + "," + e.action + "," +
         (e.throughput ? format_decimal(*e.throughput) : std::string());
}

namespace {

std::string pin_key(const PinSet& pins, const std::set<std::string>& unguarded, int unroll_cap) {
  std::string k = pins.function + "|";
  for (const auto& [var, v] : pins.values)
    k += var + ":" + std::string(ir::to_string(ir::type_of(v))) + "=" + ir::format_scalar(v) +
         (unguarded.contains(var) ? "!" : "") + ";";
  return k + "|u" + std::to_string(unroll_cap);
}

std::string variant_label(const Variant& v) {
  if (const auto* p = v.pins()) return p->label();
  if (const auto* h = v.hot_map()) return "hot" + std::to_string(h->entries.size());
  return "generic";
}

}  // namespace

Runtime::Runtime(std::string_view program_text, RuntimeConfig cfg)
    : Runtime(ir::parse_program(program_text), std::move(cfg)) {}

Runtime::Runtime(ir::Program program, RuntimeConfig cfg) : program_(std::move(program)), cfg_(std::move(cfg)) {
  if (cfg_.calls_per_window == 0) throw Error(ErrorCode::Config, "calls_per_window must be >= 1");
  if (cfg_.unroll_cap < 1) throw Error(ErrorCode::Config, "unroll_cap must be >= 1");
  std::map<SpecPointId, PointState> pts;
  for (const auto& d : program_.points) {
    SpecPoint sp = SpecPoint::from_decl(d);
    pts.emplace(sp.id, PointState{sp, std::nullopt, PointProfile(sp.id, cfg_.histogram_capacity)});
  }
  for (const auto& pc : cfg_.points) {
    auto it = pts.find(pc.id);
    if (it == pts.end()) throw Error(ErrorCode::UnknownPoint, "point " + pc.id.str() + " is not declared");
    auto& sp = it->second.sp;
    if (pc.kind && *pc.kind != sp.kind)
      throw Error(ErrorCode::Config, "point " + pc.id.str() + " is declared as " +
                                         std::string(ir::to_string(sp.kind)));
    if (pc.candidates) sp.candidate_values = pc.candidates;
    if (pc.guard) sp.guard_enabled = *pc.guard;
    if (pc.collection) sp.collection_enabled = *pc.collection;
    if (pc.driver_coupled) sp.driver_coupled = *pc.driver_coupled;
    if (pc.default_value) {
      auto t = program_.functions.at(pc.id.function).scalar_type_of(pc.id.variable);
      if (t && ir::type_of(*pc.default_value) != *t)
        throw Error(ErrorCode::PinType, "default for " + pc.id.str() + " must be " + std::string(ir::to_string(*t)));
      sp.default_value = pc.default_value;
    }
  }
  for (auto& [id, st] : pts) st.profile.set_collection(st.sp.collection_enabled);
  points_ = std::move(pts);
  engine_ = std::make_unique<Engine>(program_);
  engine_->set_result_cache(cfg_.exec_cache);
  log("runtime_init", "", std::to_string(program_.functions.size()) + " functions, " +
                              std::to_string(points_.size()) + " points");
}

Runtime::~Runtime() = default;

Runtime::PointState& Runtime::state(const SpecPointId& p) {
  auto it = points_.find(p);
  if (it == points_.end()) throw Error(ErrorCode::UnknownPoint, "unknown point " + p.str());
  return it->second;
}

const Runtime::PointState& Runtime::state(const SpecPointId& p) const {
  auto it = points_.find(p);
  if (it == points_.end()) throw Error(ErrorCode::UnknownPoint, "unknown point " + p.str());
  return it->second;
}

void Runtime::log(std::string hook, std::string target, std::string detail) {
  hooks_.push_back({std::move(hook), std::move(target), std::move(detail)});
}

// --- hooks -----------------------------------------------------------------

void Runtime::point_specialize(const SpecPointId& p, const Scalar& value) {
  auto& st = state(p);
  auto t = program_.functions.at(p.function).scalar_type_of(p.variable);
  if (!t) throw Error(ErrorCode::NotScalar, p.str() + " is not a scalar");
  if (ir::type_of(value) != *t)
    throw Error(ErrorCode::PinType, p.str() + " is " + std::string(ir::to_string(*t)) + ", got " +
                                        std::string(ir::to_string(ir::type_of(value))));
  if (!program_.functions.at(p.function).find_param(p.variable) && st.sp.guard_enabled)
    throw Error(ErrorCode::GuardOnLocal, p.str() + " is a local; disable its check before pinning");
  st.pinned = value;
  log("point_specialize", p.str(), ir::format_scalar(value));
  request_rebuild(p.function);
}

void Runtime::point_disable_spec(const SpecPointId& p) {
  auto& st = state(p);
  log("point_disable_spec", p.str());
  if (!st.pinned) return;
  st.pinned.reset();
  request_rebuild(p.function);
}

void Runtime::point_disable_spec_check(const SpecPointId& p) {
  auto& st = state(p);
  log("point_disable_spec_check", p.str());
  if (!st.sp.guard_enabled) return;
  st.sp.guard_enabled = false;
  if (st.pinned) request_rebuild(p.function);
}

void Runtime::point_enable_collection(const SpecPointId& p) {
  auto& st = state(p);
  st.sp.collection_enabled = true;
  st.profile.set_collection(true);
  log("point_enable_collection", p.str());
}

void Runtime::point_disable_collection(const SpecPointId& p) {
  auto& st = state(p);
  st.sp.collection_enabled = false;
  st.profile.set_collection(false);
  log("point_disable_collection", p.str());
}

void Runtime::update_runtime() {
  log("update_runtime", "");
  rebuild_all_ = true;
  if (!engine_->in_call()) apply_pending();
}

const Variant& Runtime::get_specialized_function(const std::string& fn) const {
  return engine_->active_variant(fn);
}

void Runtime::start_exploration(ExplorationRequest req) {
  if (exploring()) throw Error(ErrorCode::AlreadyExploring, "exploration already running");
  if (!program_.find(req.function)) throw Error(ErrorCode::UnknownFunction, "unknown function '" + req.function + "'");
  if (req.variables.empty())
    for (const auto& d : program_.points)
      if (d.function == req.function) req.variables.push_back(d.variable);
  for (const auto& v : req.variables) {
    const auto& st = state({req.function, v});
    if (!req.candidates.contains(v) && st.sp.candidate_values) req.candidates[v] = *st.sp.candidate_values;
    auto c = req.candidates.find(v);
    if (c != req.candidates.end() && c->second.empty())
      throw Error(ErrorCode::EmptyCandidates, "no candidates for " + req.function + ":" + v);
  }
  for (const auto& [v, c] : req.candidates)
    if (std::find(req.variables.begin(), req.variables.end(), v) == req.variables.end())
      throw Error(ErrorCode::UnknownPoint, "candidates given for unexplored point " + req.function + ":" + v);
  int monitor = req.monitor_windows.value_or(cfg_.monitor_windows);
  explore_req_ = std::move(req);
  explorer_ = std::make_unique<Explorer>([this] { return build_configs(); }, explore_req_.policy, cfg_.drift,
                                         monitor);
  log("start_exploration", explore_req_.function);
  handle(explorer_->begin(), nullptr);
}

void Runtime::start_hot_map(HotMapRequest req) {
  if (exploring()) throw Error(ErrorCode::AlreadyExploring, "exploration already running");
  if (!program_.find(req.function)) throw Error(ErrorCode::UnknownFunction, "unknown function '" + req.function + "'");
  state({req.function, req.key});
  if (req.top_k == 0) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  HotState h;
  h.target = req.monitor_windows.value_or(cfg_.monitor_windows);
  h.req = std::move(req);
  hot_ = std::move(h);
  log("start_exploration", hot_->req.function, "hot_map");
  if (hot_->target == 0) hot_map_step();
}

void Runtime::end_exploration() {
  log("end_exploration", explorer_ ? explore_req_.function : hot_ ? hot_->req.function : std::string());
  if (explorer_) {
    if (explorer_->phase() == ExplorerPhase::Exploring) {
      auto best = explorer_->best_so_far();
      std::size_t c = best.value_or(0);
      if (!install_config(c)) install_config(0);
      std::optional<double> thr;
      if (best) thr = explorer_->scoreboard().at(c);
      trace_.push_back({"settle", next_window_, explorer_->configs()[c].label(), "end_exploration", thr});
    } else if (explorer_->phase() == ExplorerPhase::Monitoring && !explorer_->configs().empty()) {
      install_config(0);
    }
    explorer_.reset();
  }
  hot_.reset();
}

void Runtime::start_configured_policy() {
  const auto& pol = cfg_.policy;
  if (pol.name == PolicyName::None) return;
  if (pol.name == PolicyName::HotMap) {
    start_hot_map({pol.function, pol.key, cfg_.top_k, std::nullopt});
    return;
  }
  ExplorationRequest req;
  if (!cfg_.points.empty()) {
    req.function = cfg_.points.front().id.function;
    for (const auto& p : cfg_.points)
      if (p.id.function == req.function) req.variables.push_back(p.id.variable);
  } else if (!program_.points.empty()) {
    req.function = program_.points.front().function;
  } else {
    throw Error(ErrorCode::Config, "policy needs at least one specialization point");
  }
  std::uint64_t seed = pol.seed.value_or(cfg_.seed);
  if (pol.name == PolicyName::Exhaustive)
    req.policy = ExhaustiveSweep{pol.windows_per_config};
  else
    req.policy = EpsilonGreedy{pol.epsilon, pol.windows_per_pull, seed, pol.pulls};
  start_exploration(std::move(req));
}

// --- rebuilds --------------------------------------------------------------

void Runtime::request_rebuild(const std::string& fn) {
  pending_.push_back(fn);
  if (!engine_->in_call()) apply_pending();
}

void Runtime::apply_pending() {
  std::vector<std::string> fns;
  if (rebuild_all_) {
    cache_.clear();
    for (auto& [fn, v] : hot_variants_) {
      try {
        v = build_hot_map(fn);
      } catch (const Error& e) {
        log("install_failed", fn, e.what());
      }
    }
    for (const auto& [name, f] : program_.functions) fns.push_back(name);
    rebuild_all_ = false;
  } else {
    fns = pending_;
  }
  pending_.clear();
  std::sort(fns.begin(), fns.end());
  fns.erase(std::unique(fns.begin(), fns.end()), fns.end());
  std::optional<Error> first;
  for (const auto& fn : fns) {
    try {
      rebuild(fn);
    } catch (const Error& e) {
      if (!first) first = e;
    }
  }
  if (first) throw *first;
}

std::shared_ptr<const Variant> Runtime::build_pinned(const std::string& fn, const PinSet& pins) {
  SpecializeOptions opts;
  opts.unroll_cap = cfg_.unroll_cap;
  for (const auto& [var, v] : pins.values)
    if (!state({fn, var}).sp.guard_enabled) opts.unguarded.insert(var);
  auto key = pin_key(pins, opts.unguarded, opts.unroll_cap);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  auto v = std::make_shared<const Variant>(pin_and_specialize(program_, pins, opts));
  cache_.emplace(key, v);
  return v;
}

std::shared_ptr<const Variant> Runtime::build_hot_map(const std::string& fn) {
  const auto& f = program_.functions.at(fn);
  std::string key = hot_ && hot_->req.function == fn ? hot_->req.key : std::string();
  std::size_t k = hot_ && hot_->req.function == fn ? hot_->req.top_k : cfg_.top_k;
  if (key.empty()) {
    auto old = hot_variants_.find(fn);
    if (old == hot_variants_.end()) throw Error(ErrorCode::InvalidArgument, fn + ": no hot map configured");
    key = old->second->hot_map()->key;
    k = old->second->hot_map()->entries.size();
  }
  if (f.params.size() != 1 || f.params[0].name != key)
    throw Error(ErrorCode::InvalidArgument, fn + ": hot map needs '" + key + "' as the only parameter");
  HotMapSpec spec{fn, key, {}, engine_->table_version(fn)};
  Engine oracle(program_);
  for (const auto& [value, count] : state({fn, key}).profile.top_k(k)) {
    std::vector<Value> args{to_value(value)};
    spec.entries.emplace_back(value, oracle.call(fn, args).value);
  }
  return std::make_shared<const Variant>(apply_hot_map(program_, spec));
}

void Runtime::rebuild(const std::string& fn) {
  PinSet pins{fn, {}};
  for (const auto& [id, st] : points_)
    if (id.function == fn && st.pinned) pins.values.emplace(id.variable, *st.pinned);
  try {
    if (!pins.empty()) {
      engine_->set_active_variant(fn, build_pinned(fn, pins));
    } else if (auto h = hot_variants_.find(fn); h != hot_variants_.end()) {
      engine_->set_active_variant(fn, h->second);
    } else {
      engine_->reset_to_generic(fn);
    }
  } catch (const Error& e) {
    for (auto& [id, st] : points_)
      if (id.function == fn) st.pinned.reset();
    engine_->reset_to_generic(fn);
    log("install_failed", fn, e.what());
    throw;
  }
}

void Runtime::replace_function(ir::FunctionDef f) {
  if (!program_.find(f.name)) throw Error(ErrorCode::UnknownFunction, "unknown function '" + f.name + "'");
  auto diags = ir::validate_function(program_, f);
  if (!diags.empty()) throw ValidationError(f.name, ir::to_string(diags.front()));
  ir::annotate_function(program_, f);
  std::string fn = f.name;
  program_.functions[fn] = f;
  engine_->replace_function(std::move(f));
  std::erase_if(cache_, [&](const auto& e) { return e.first.starts_with(fn + "|"); });
  log("replace_function", fn, "version " + std::to_string(engine_->table_version(fn)));
  bool pinned = false;
  for (const auto& [id, st] : points_) pinned = pinned || (id.function == fn && st.pinned);
  if (pinned) request_rebuild(fn);
}

// --- calls and windows -----------------------------------------------------

void Runtime::register_cleanup(const std::string& fn, CleanupFn cb) {
  engine_->register_cleanup(fn, std::move(cb));
  log("register_cleanup", fn);
}

ExecResult Runtime::call(const std::string& fn, std::vector<Value>& args) {
  const auto* f = program_.find(fn);
  if (!f) throw Error(ErrorCode::UnknownFunction, "unknown function '" + fn + "'");
  for (auto& [id, st] : points_) {
    if (id.function != fn || !st.profile.collecting()) continue;
    for (std::size_t i = 0; i < f->params.size() && i < args.size(); ++i)
      if (f->params[i].name == id.variable) {
        if (auto s = as_scalar(args[i])) st.profile.observe(*s);
      }
  }
  auto active = engine_->active_variant(fn).id;
  std::vector<std::string> blamed;
  if (const auto* p = engine_->active_variant(fn).pins())
    for (const auto& [var, v] : p->values) blamed.push_back(var);
  if (const auto* h = engine_->active_variant(fn).hot_map()) blamed.push_back(h->key);

  auto t0 = std::chrono::steady_clock::now();
  ExecResult r;
  try {
    r = engine_->call(fn, args);
  } catch (...) {
    try {
      apply_pending();
    } catch (const Error&) {
    }
    throw;
  }
  if (cfg_.wallclock)
    acc_.add_wall_ms(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  if (r.guard_failed) {
    ++total_guard_failures_;
    for (const auto& var : blamed)
      if (auto it = points_.find({fn, var}); it != points_.end()) it->second.profile.add_guard_failures(1);
  }
  acc_.add(r.ops, r.guard_failed);
  ++total_calls_;
  try {
    apply_pending();
  } catch (const Error&) {
    // recorded in the hook log; the generic variant stays active
  }
  if (acc_.calls() >= cfg_.calls_per_window) close_window();
  return r;
}

std::string Runtime::config_label() const {
  std::vector<std::pair<std::string, std::string>> parts;
  for (const auto& [name, f] : program_.functions) {
    const auto& v = engine_->active_variant(name);
    if (!v.is_generic()) parts.emplace_back(name, variant_label(v));
  }
  if (parts.empty()) return "generic";
  if (parts.size() == 1) return parts.front().second;
  std::string out;
  for (const auto& [fn, l] : parts) out += (out.empty() ? "" : ";") + fn + ":" + l;
  return out;
}

void Runtime::close_window() {
  MetricWindow w = acc_.close(cfg_.budget_ops, next_window_++, config_label());
  windows_.push_back(w);
  if (explorer_)
    handle(explorer_->step(w), &windows_.back());
  else if (hot_) {
    try {
      hot_map_step();
    } catch (const Error&) {
      // logged; the function keeps its current variant
    }
  }
}

void Runtime::flush_window() {
  if (acc_.calls() == 0) return;
  windows_.push_back(acc_.close(cfg_.budget_ops, next_window_++, config_label()));
}

// --- explorer wiring -------------------------------------------------------

std::vector<Config> Runtime::build_configs() {
  const auto& fn = explore_req_.function;
  ConfigSpace space{fn, {}, {}, explore_req_.cap.value_or(cfg_.cap)};
  std::map<std::string, FilterInput> inputs;
  for (const auto& var : explore_req_.variables) {
    const auto& st = state({fn, var});
    std::vector<Scalar> cands;
    if (auto c = explore_req_.candidates.find(var); c != explore_req_.candidates.end()) {
      cands = c->second;
    } else {
      for (const auto& [v, n] : st.profile.top_k(cfg_.top_k)) cands.push_back(v);
    }
    if (cands.empty()) {
      excluded_.push_back(st.sp.id.str());
      log("exclude_point", st.sp.id.str(), "no observed values");
      continue;
    }
    space.variables.push_back(var);
    space.candidates[var] = std::move(cands);
    inputs[var] = {&st.sp, &st.profile};
  }
  for (const auto& var : guard_feasibility_filter(space, inputs, cfg_.feasibility_floor)) {
    excluded_.push_back(fn + ":" + var);
    log("exclude_point", fn + ":" + var, "below feasibility floor");
  }
  return enumerate_configs(space);
}

bool Runtime::install_config(std::size_t c) {
  const Config& conf = explorer_->configs().at(c);
  const auto& fn = explore_req_.function;
  for (const auto& var : explore_req_.variables) state({fn, var}).pinned.reset();
  if (conf.pins)
    for (const auto& [var, v] : conf.pins->values) state({fn, var}).pinned = v;
  try {
    rebuild(fn);
  } catch (const Error&) {
    return false;
  }
  return true;
}

void Runtime::handle(Action a, const MetricWindow* w) {
  for (;;) {
    switch (a.kind) {
      case Action::Kind::Continue:
        return;
      case Action::Kind::Install: {
        if (!install_config(a.config)) {
          a = explorer_->infeasible(a.config);
          continue;
        }
        const auto& conf = explorer_->configs()[a.config];
        trace_.push_back({"install", next_window_, conf.label(), conf.pins ? "specialize" : "disable_spec",
                          std::nullopt});
        return;
      }
      case Action::Kind::Settle: {
        install_config(a.config);
        const auto& conf = explorer_->configs()[a.config];
        std::optional<double> thr;
        if (auto s = explorer_->settled(); s && explorer_->scoreboard().contains(s->first)) thr = s->second;
        trace_.push_back({"settle", next_window_, conf.label(), conf.pins ? "specialize" : "disable_spec", thr});
        log("settle", explore_req_.function, conf.label());
        return;
      }
      case Action::Kind::Restart: {
        const auto& fn = explore_req_.function;
        for (const auto& var : explore_req_.variables) {
          auto& st = state({fn, var});
          st.pinned.reset();
          st.profile.reset();
        }
        rebuild(fn);
        trace_.push_back({"restart", next_window_, "generic", "disable_spec",
                          w ? w->throughput : std::nullopt});
        log("restart", fn);
        return;
      }
    }
  }
}

void Runtime::hot_map_step() {
  if (!hot_ || hot_->installed) return;
  if (hot_->target > 0 && ++hot_->monitored < hot_->target) return;
  const auto& fn = hot_->req.function;
  try {
    hot_variants_[fn] = build_hot_map(fn);
  } catch (const Error& e) {
    hot_variants_.erase(fn);
    log("install_failed", fn, e.what());
    hot_->installed = true;
    throw;
  }
  hot_->installed = true;
  rebuild(fn);
  auto label = variant_label(*hot_variants_[fn]);
  trace_.push_back({"install", next_window_, label, "specialize", std::nullopt});
  trace_.push_back({"settle", next_window_, label, "specialize", std::nullopt});
  log("settle", fn, label);
}

// --- inspection ------------------------------------------------------------

const SpecPoint& Runtime::point(const SpecPointId& p) const { return state(p).sp; }

std::vector<SpecPointId> Runtime::points() const {
  std::vector<SpecPointId> out;
  for (const auto& d : program_.points) out.push_back({d.function, d.variable});
  return out;
}

std::optional<Scalar> Runtime::pinned(const SpecPointId& p) const { return state(p).pinned; }

std::optional<Scalar> Runtime::current_value(const SpecPointId& p) const {
  const auto& st = state(p);
  return st.pinned ? st.pinned : st.sp.default_value;
}

const PointProfile& Runtime::profile(const SpecPointId& p) const { return state(p).profile; }

}  // namespace rtspec
