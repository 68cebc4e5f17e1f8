#include "rtspec/explorer.hpp"

#include <algorithm>
#include <cmath>

#include "rtspec/error.hpp"
#include "rtspec/workloads.hpp"

namespace rtspec {

std::string_view to_string(ExplorerPhase p) {
  switch (p) {
    case ExplorerPhase::Monitoring: return "monitoring";
    case ExplorerPhase::Exploring: return "exploring";
    case ExplorerPhase::Exploiting: return "exploiting";
  }
  return "unknown";
}

std::vector<Config> enumerate_configs(const ConfigSpace& space) {
  std::vector<std::vector<Scalar>> lists;
  for (const auto& var : space.variables) {
    auto it = space.candidates.find(var);
    if (it == space.candidates.end() || it->second.empty())
      throw Error(ErrorCode::EmptyCandidates, "no candidates for " + space.function + ":" + var);
    std::vector<Scalar> c = it->second;
    std::sort(c.begin(), c.end(), ir::ScalarLess{});
    c.erase(std::unique(c.begin(), c.end(), [](const Scalar& a, const Scalar& b) { return ir::same_value(a, b); }),
            c.end());
    lists.push_back(std::move(c));
  }
  std::vector<Config> out;
  out.push_back(Config{});
  if (lists.empty()) return out;
  std::vector<std::size_t> odometer(lists.size(), 0);
  while (out.size() < space.cap + 1) {
    PinSet p{space.function, {}};
    for (std::size_t i = 0; i < lists.size(); ++i) p.values.emplace(space.variables[i], lists[i][odometer[i]]);
    out.push_back(Config{std::move(p)});
    std::size_t d = lists.size();
    while (d > 0) {
      --d;
      if (++odometer[d] < lists[d].size()) break;
      odometer[d] = 0;
      if (d == 0) return out;
    }
  }
  return out;
}

std::vector<std::string> guard_feasibility_filter(ConfigSpace& space,
                                                  const std::map<std::string, FilterInput>& inputs,
                                                  double floor) {
  std::vector<std::string> excluded;
  std::vector<std::string> kept;
  for (const auto& var : space.variables) {
    auto in = inputs.find(var);
    const SpecPoint* sp = in == inputs.end() ? nullptr : in->second.point;
    if (!sp || sp->kind != ir::PointKind::Workload || sp->driver_coupled) {
      kept.push_back(var);
      continue;
    }
    const PointProfile* prof = in->second.profile;
    if (!prof || prof->total_observations() == 0) {
      kept.push_back(var);
      continue;
    }
    auto& cands = space.candidates[var];
    std::vector<Scalar> survivors;
    {
      for (const auto& v : cands) {
        auto h = prof->histogram().find(v);
        double freq = h == prof->histogram().end()
                          ? 0.0
                          : static_cast<double>(h->second) / static_cast<double>(prof->total_observations());
        if (freq >= floor) survivors.push_back(v);
      }
    }
    cands = std::move(survivors);
    if (cands.empty()) {
      excluded.push_back(var);
      space.candidates.erase(var);
    } else {
      kept.push_back(var);
    }
  }
  space.variables = std::move(kept);
  return excluded;
}

Explorer::Explorer(ConfigBuilder builder, ExplorationPolicy policy, DriftRule drift, int monitor_windows)
    : builder_(std::move(builder)), policy_(policy), drift_(drift), monitor_windows_(monitor_windows) {
  if (drift_.delta <= 0 || drift_.delta >= 1) throw Error(ErrorCode::Config, "drift delta must be in (0, 1)");
  if (drift_.windows < 1) throw Error(ErrorCode::Config, "drift windows must be >= 1");
  if (monitor_windows_ < 0) throw Error(ErrorCode::Config, "monitor_windows must be >= 0");
  if (const auto* s = std::get_if<ExhaustiveSweep>(&policy_)) {
    if (s->windows_per_config < 1) throw Error(ErrorCode::Config, "windows_per_config must be >= 1");
  } else {
    const auto& e = std::get<EpsilonGreedy>(policy_);
    if (e.epsilon < 0 || e.epsilon > 1) throw Error(ErrorCode::Config, "epsilon must be in [0, 1]");
    if (e.windows_per_pull < 1) throw Error(ErrorCode::Config, "windows_per_pull must be >= 1");
    if (e.pulls < 0) throw Error(ErrorCode::Config, "pulls must be >= 0");
    rng_.seed(e.seed);
  }
}

Action Explorer::begin() {
  monitored_ = 0;
  monitor_target_ = monitor_windows_;
  if (monitor_target_ > 0) {
    phase_ = ExplorerPhase::Monitoring;
    return {Action::Kind::Continue, 0};
  }
  return start_exploring();
}

Action Explorer::start_exploring() {
  configs_ = builder_();
  if (configs_.empty()) configs_.push_back(Config{});
  scores_.clear();
  infeasible_.clear();
  settled_.reset();
  pulls_done_ = 0;
  phase_ = ExplorerPhase::Exploring;
  return install(0);
}

Action Explorer::install(std::size_t c) {
  current_ = c;
  windows_on_current_ = 0;
  return {Action::Kind::Install, c};
}

bool Explorer::better(std::size_t a, double ta, std::size_t b, double tb) const {
  if (ta != tb) return ta > tb;
  if (configs_[a].pin_count() != configs_[b].pin_count())
    return configs_[a].pin_count() < configs_[b].pin_count();
  return a < b;
}

std::optional<std::size_t> Explorer::best_so_far() const {
  std::optional<std::size_t> best;
  for (const auto& [c, t] : scores_)
    if (!best || better(c, t, *best, scores_.at(*best))) best = c;
  return best;
}

Action Explorer::settle() {
  auto best = best_so_far();
  std::size_t c = best.value_or(0);
  settled_ = {c, best ? scores_.at(c) : 0.0};
  current_ = c;
  drift_count_ = 0;
  phase_ = ExplorerPhase::Exploiting;
  return {Action::Kind::Settle, c};
}

std::size_t Explorer::pick_epsilon() {
  const auto& e = std::get<EpsilonGreedy>(policy_);
  std::vector<std::size_t> feasible;
  for (std::size_t i = 0; i < configs_.size(); ++i)
    if (!infeasible_.contains(i)) feasible.push_back(i);
  double u = workloads::uniform01(rng_);
  auto best = best_so_far();
  if (u < e.epsilon || !best) {
    auto i = static_cast<std::size_t>(workloads::uniform01(rng_) * static_cast<double>(feasible.size()));
    return feasible[std::min(i, feasible.size() - 1)];
  }
  return *best;
}

Action Explorer::advance() {
  if (std::holds_alternative<ExhaustiveSweep>(policy_)) {
    for (std::size_t next = current_ + 1; next < configs_.size(); ++next)
      if (!infeasible_.contains(next)) return install(next);
    return settle();
  }
  const auto& e = std::get<EpsilonGreedy>(policy_);
  int budget = e.pulls > 0 ? e.pulls : static_cast<int>(2 * configs_.size());
  if (pulls_done_ >= budget) return settle();
  return install(pick_epsilon());
}

Action Explorer::step(const MetricWindow& w) {
  switch (phase_) {
    case ExplorerPhase::Monitoring:
      if (++monitored_ >= monitor_target_) return start_exploring();
      return {Action::Kind::Continue, 0};

    case ExplorerPhase::Exploring: {
      if (w.throughput) {
        auto [it, fresh] = scores_.emplace(current_, *w.throughput);
        if (!fresh) it->second = std::max(it->second, *w.throughput);
      }
      ++windows_on_current_;
      int needed = std::holds_alternative<ExhaustiveSweep>(policy_)
                       ? std::get<ExhaustiveSweep>(policy_).windows_per_config
                       : std::get<EpsilonGreedy>(policy_).windows_per_pull;
      if (windows_on_current_ < needed) return {Action::Kind::Continue, current_};
      ++pulls_done_;
      return advance();
    }

    case ExplorerPhase::Exploiting: {
      if (!w.throughput || !settled_ || settled_->second <= 0) return {Action::Kind::Continue, current_};
      double ratio = *w.throughput / settled_->second;
      bool off = drift_.mode == DriftMode::Change ? std::abs(ratio - 1.0) > drift_.delta
                                                  : ratio < 1.0 - drift_.delta;
      drift_count_ = off ? drift_count_ + 1 : 0;
      if (drift_count_ < drift_.windows) return {Action::Kind::Continue, current_};
      scores_.clear();
      settled_.reset();
      drift_count_ = 0;
      phase_ = ExplorerPhase::Monitoring;
      monitored_ = 0;
      monitor_target_ = std::max(1, monitor_windows_);
      current_ = 0;
      return {Action::Kind::Restart, 0};
    }
  }
  return {Action::Kind::Continue, current_};
}

Action Explorer::infeasible(std::size_t config) {
  infeasible_.insert(config);
  scores_.erase(config);
  if (phase_ != ExplorerPhase::Exploring) {
    current_ = 0;
    return install(0);
  }
  current_ = config;
  if (std::holds_alternative<ExhaustiveSweep>(policy_)) return advance();
  return install(pick_epsilon());
}

}  // namespace rtspec
