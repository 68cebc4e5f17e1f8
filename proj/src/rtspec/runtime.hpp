#pragma once

// The handle fixed code talks to: owns the engine, the point registry,
// profiles, variant cache and the explorer, and closes measurement windows.

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtspec/config.hpp"
#include "rtspec/engine.hpp"
#include "rtspec/explorer.hpp"
#include "rtspec/telemetry.hpp"

namespace rtspec {

struct TraceEvent {
  std::string event;  // install | settle | restart
  std::uint64_t window_id = 0;
  std::string config_id;
  std::string action;
  std::optional<double> throughput;
};

std::string exploration_csv_header();
std::string exploration_csv_row(const TraceEvent& e);

struct HookRecord {
  std::string hook;
  std::string target;
  std::string detail;
};

struct ExplorationRequest {
  std::string function;
  std::vector<std::string> variables;  // empty: every point of the function
  std::map<std::string, std::vector<Scalar>> candidates;  // missing: top_k from profiles
  ExplorationPolicy policy = ExhaustiveSweep{};
  std::optional<std::size_t> cap;
  std::optional<int> monitor_windows;
};

struct HotMapRequest {
  std::string function;
  std::string key;
  std::size_t top_k = 8;
  std::optional<int> monitor_windows;
};

class Runtime {
 public:
  /// runtime_init
  Runtime(std::string_view program_text, RuntimeConfig cfg);
  Runtime(ir::Program program, RuntimeConfig cfg);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  // --- hooks -----------------------------------------------------------------
  void point_specialize(const SpecPointId& p, const Scalar& value);
  void point_disable_spec(const SpecPointId& p);
  void point_disable_spec_check(const SpecPointId& p);
  void point_enable_collection(const SpecPointId& p);
  void point_disable_collection(const SpecPointId& p);
  void update_runtime();
  const Variant& get_specialized_function(const std::string& fn) const;
  void start_exploration(ExplorationRequest req);
  void start_hot_map(HotMapRequest req);
  void end_exploration();

  /// Starts whatever the configured policy asks for (no-op for "none").
  void start_configured_policy();

  // --- calls -----------------------------------------------------------------
  ExecResult call(const std::string& fn, std::vector<Value>& args);
  void register_cleanup(const std::string& fn, CleanupFn cb);

  /// Replaces a function body (e.g. a routing-table update); bumps its
  /// table version so version-checked variants fall back.
  void replace_function(ir::FunctionDef f);

  /// Closes a trailing partial window without consulting the explorer.
  void flush_window();

  // --- inspection ------------------------------------------------------------
  const ir::Program& program() const { return program_; }
  const RuntimeConfig& config() const { return cfg_; }
  const SpecPoint& point(const SpecPointId& p) const;
  std::vector<SpecPointId> points() const;
  std::optional<Scalar> pinned(const SpecPointId& p) const;
  /// Pinned value, else the configured default.
  std::optional<Scalar> current_value(const SpecPointId& p) const;
  const PointProfile& profile(const SpecPointId& p) const;
  std::string config_label() const;

  const std::vector<MetricWindow>& windows() const { return windows_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  const std::vector<HookRecord>& hook_log() const { return hooks_; }
  const std::vector<std::string>& excluded_points() const { return excluded_; }
  std::size_t variant_cache_size() const { return cache_.size(); }
  bool exploring() const { return explorer_ != nullptr || hot_.has_value(); }
  const Explorer* explorer() const { return explorer_.get(); }
  std::uint64_t total_calls() const { return total_calls_; }
  std::uint64_t total_guard_failures() const { return total_guard_failures_; }
  Engine& engine() { return *engine_; }
  const Engine& engine() const { return *engine_; }

 private:
  struct PointState {
    SpecPoint sp;
    std::optional<Scalar> pinned;
    PointProfile profile;
  };
  struct HotState {
    HotMapRequest req;
    int monitored = 0;
    int target = 0;
    bool installed = false;
  };

  PointState& state(const SpecPointId& p);
  const PointState& state(const SpecPointId& p) const;
  void log(std::string hook, std::string target, std::string detail = {});
  void request_rebuild(const std::string& fn);
  void apply_pending();
  void rebuild(const std::string& fn);
  std::shared_ptr<const Variant> build_pinned(const std::string& fn, const PinSet& pins);
  std::shared_ptr<const Variant> build_hot_map(const std::string& fn);
  void close_window();
  void handle(Action a, const MetricWindow* w);
  bool install_config(std::size_t c);
  std::vector<Config> build_configs();
  void hot_map_step();

  ir::Program program_;
  RuntimeConfig cfg_;
  std::unique_ptr<Engine> engine_;
  std::map<SpecPointId, PointState> points_;
  std::map<std::string, std::shared_ptr<const Variant>> cache_;
  std::map<std::string, std::shared_ptr<const Variant>> hot_variants_;
  std::vector<std::string> pending_;
  bool rebuild_all_ = false;

  std::unique_ptr<Explorer> explorer_;
  ExplorationRequest explore_req_;
  std::optional<HotState> hot_;

  WindowAccumulator acc_;
  std::uint64_t next_window_ = 0;
  std::vector<MetricWindow> windows_;
  std::vector<TraceEvent> trace_;
  std::vector<HookRecord> hooks_;
  std::vector<std::string> excluded_;
  std::uint64_t total_calls_ = 0;
  std::uint64_t total_guard_failures_ = 0;
};

}  // namespace rtspec
