#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtspec/specializer.hpp"

namespace rtspec {

/// Value statistics for one specialization point. Bounded: once `capacity`
/// distinct values are tracked, a new value replaces the entry with the
/// lowest count and inherits that count plus one.
class PointProfile {
 public:
  explicit PointProfile(SpecPointId id = {}, std::size_t capacity = 256);

  void observe(const Scalar& v);
  std::vector<std::pair<Scalar, std::uint64_t>> top_k(std::size_t k) const;

  void set_collection(bool on) { collecting_ = on; }
  bool collecting() const { return collecting_; }

  void add_guard_failures(std::uint64_t n) { guard_failures_ += n; }
  void reset();

  const SpecPointId& id() const { return id_; }
  const std::map<Scalar, std::uint64_t, ir::ScalarLess>& histogram() const { return hist_; }
  std::uint64_t total_observations() const { return total_; }
  std::uint64_t guard_failures() const { return guard_failures_; }
  std::size_t capacity() const { return capacity_; }

 private:
  SpecPointId id_;
  std::size_t capacity_;
  bool collecting_ = true;
  std::map<Scalar, std::uint64_t, ir::ScalarLess> hist_;
  std::uint64_t total_ = 0;
  std::uint64_t guard_failures_ = 0;
};

struct MetricWindow {
  std::uint64_t window_id = 0;
  std::string config_id;
  std::uint64_t calls = 0;
  std::uint64_t total_ops = 0;
  std::optional<double> throughput;
  std::uint64_t guard_failures = 0;
  std::optional<double> wall_ms;
};

class WindowAccumulator {
 public:
  void add(std::uint64_t ops, bool guard_failed);
  void add_wall_ms(double ms) { wall_ms_ += ms; }
  std::uint64_t calls() const { return calls_; }

  /// throughput = budget_ops * calls / total_ops; absent when no calls ran.
  MetricWindow close(std::uint64_t budget_ops, std::uint64_t window_id, std::string config_id);

 private:
  std::uint64_t calls_ = 0;
  std::uint64_t ops_ = 0;
  std::uint64_t guard_failures_ = 0;
  double wall_ms_ = 0;
};

std::string metrics_csv_header(bool wallclock);
std::string metrics_csv_row(const MetricWindow& w, bool wallclock);

/// Fixed six-decimal rendering used in every CSV.
std::string format_decimal(double v);

}  // namespace rtspec
