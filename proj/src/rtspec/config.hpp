#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtspec/explorer.hpp"
#include "rtspec/specializer.hpp"
#include "rtspec/workloads.hpp"

namespace rtspec {

struct PointConfig {
  SpecPointId id;
  std::optional<ir::PointKind> kind;  // must agree with the declaration when given
  std::optional<std::vector<Scalar>> candidates;
  std::optional<bool> guard;
  std::optional<bool> collection;
  std::optional<bool> driver_coupled;
  std::optional<Scalar> default_value;
};

enum class PolicyName { None, Exhaustive, EpsilonGreedy, HotMap };

struct PolicyConfig {
  PolicyName name = PolicyName::None;
  int windows_per_config = 1;
  double epsilon = 0.1;
  int windows_per_pull = 1;
  int pulls = 0;
  std::optional<std::uint64_t> seed;
  // hot map
  std::string function;
  std::string key;
};

struct RuntimeConfig {
  std::vector<PointConfig> points;
  PolicyConfig policy;
  std::uint64_t calls_per_window = 100;
  std::uint64_t budget_ops = 1'000'000;
  int monitor_windows = 0;
  DriftRule drift;
  int unroll_cap = 16;
  std::size_t cap = 256;
  std::size_t top_k = 8;
  double feasibility_floor = 0.5;
  std::size_t histogram_capacity = 256;
  bool exec_cache = false;
  bool wallclock = false;
  std::uint64_t seed = 0;
};

struct WorkloadConfig {
  std::string generator;  // mmul | lpm | pipeline
  workloads::RequestStream stream;
  // generator parameters
  std::uint64_t input_seed = 1;
  std::size_t rules = 1000;
  std::size_t addresses = 1000;
  std::size_t items = 36;
};

struct RunConfig {
  RuntimeConfig runtime;
  WorkloadConfig workload;
};

/// Strict reader: unknown keys and wrong types raise ErrorCode::Config with
/// the dotted key path in the message.
RuntimeConfig parse_runtime_config(std::string_view json_text);
RunConfig parse_run_config(std::string_view json_text);

}  // namespace rtspec
