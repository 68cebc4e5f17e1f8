#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rtspec/specializer.hpp"
#include "rtspec/telemetry.hpp"

namespace rtspec {

/// One point in the search space; no pins means the generic function.
struct Config {
  std::optional<PinSet> pins;

  std::string label() const { return pins ? pins->label() : "generic"; }
  std::size_t pin_count() const { return pins ? pins->values.size() : 0; }
};

struct ConfigSpace {
  std::string function;
  std::vector<std::string> variables;  // first varies slowest
  std::map<std::string, std::vector<Scalar>> candidates;
  std::size_t cap = 256;
};

/// Generic first, then the Cartesian product of the sorted, de-duplicated
/// candidate lists, truncated after `cap` entries.
std::vector<Config> enumerate_configs(const ConfigSpace& space);

struct FilterInput {
  const SpecPoint* point = nullptr;
  const PointProfile* profile = nullptr;
};

/// Drops workload-point candidates seen in less than `floor` of the
/// observations. Points with no observations are left alone. Points left without candidates are removed from the space;
/// their names are returned.
std::vector<std::string> guard_feasibility_filter(ConfigSpace& space,
                                                  const std::map<std::string, FilterInput>& inputs,
                                                  double floor = 0.5);

struct ExhaustiveSweep {
  int windows_per_config = 1;
};

struct EpsilonGreedy {
  double epsilon = 0.1;
  int windows_per_pull = 1;
  std::uint64_t seed = 0;
  int pulls = 0;  // 0: twice the number of configurations
};

using ExplorationPolicy = std::variant<ExhaustiveSweep, EpsilonGreedy>;

enum class DriftMode { Change, Drop };

struct DriftRule {
  double delta = 0.15;
  int windows = 3;
  DriftMode mode = DriftMode::Change;
};

enum class ExplorerPhase { Monitoring, Exploring, Exploiting };

std::string_view to_string(ExplorerPhase p);

struct Action {
  enum class Kind { Install, Settle, Restart, Continue };
  Kind kind = Kind::Continue;
  std::size_t config = 0;
};

class Explorer {
 public:
  using ConfigBuilder = std::function<std::vector<Config>()>;

  Explorer(ConfigBuilder builder, ExplorationPolicy policy, DriftRule drift, int monitor_windows);

  /// First action after attaching.
  Action begin();
  /// Consumes the window measured under the current configuration.
  Action step(const MetricWindow& w);
  /// The configuration could not be built; returns what to do instead.
  Action infeasible(std::size_t config);

  std::optional<std::size_t> best_so_far() const;

  ExplorerPhase phase() const { return phase_; }
  const std::vector<Config>& configs() const { return configs_; }
  std::size_t current() const { return current_; }
  const std::map<std::size_t, double>& scoreboard() const { return scores_; }
  std::optional<std::pair<std::size_t, double>> settled() const { return settled_; }
  const std::set<std::size_t>& infeasible_configs() const { return infeasible_; }

 private:
  Action start_exploring();
  Action advance();
  Action settle();
  Action install(std::size_t c);
  std::size_t pick_epsilon();
  bool better(std::size_t a, double ta, std::size_t b, double tb) const;

  ConfigBuilder builder_;
  ExplorationPolicy policy_;
  DriftRule drift_;
  int monitor_windows_;

  ExplorerPhase phase_ = ExplorerPhase::Monitoring;
  std::vector<Config> configs_;
  std::size_t current_ = 0;
  int windows_on_current_ = 0;
  int pulls_done_ = 0;
  int monitored_ = 0;
  int monitor_target_ = 0;
  int drift_count_ = 0;
  std::map<std::size_t, double> scores_;
  std::set<std::size_t> infeasible_;
  std::optional<std::pair<std::size_t, double>> settled_;
  std::mt19937_64 rng_;
};

}  // namespace rtspec
