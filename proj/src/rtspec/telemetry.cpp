#include "rtspec/telemetry.hpp"

#include <algorithm>
#include <cstdio>

namespace rtspec {

PointProfile::PointProfile(SpecPointId id, std::size_t capacity)
    : id_(std::move(id)), capacity_(std::max<std::size_t>(1, capacity)) {}

void PointProfile::observe(const Scalar& v) {
  if (!collecting_) return;
  ++total_;
  auto it = hist_.find(v);
  if (it != hist_.end()) {
    ++it->second;
    return;
  }
  if (hist_.size() < capacity_) {
    hist_.emplace(v, 1);
    return;
  }
  // map order is ascending value, so the first minimum found is the smallest value
  auto victim = hist_.begin();
  for (auto e = hist_.begin(); e != hist_.end(); ++e)
    if (e->second < victim->second) victim = e;
  std::uint64_t count = victim->second + 1;
  hist_.erase(victim);
  hist_.emplace(v, count);
}

std::vector<std::pair<Scalar, std::uint64_t>> PointProfile::top_k(std::size_t k) const {
  std::vector<std::pair<Scalar, std::uint64_t>> all(hist_.begin(), hist_.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (all.size() > k) all.resize(k);
  return all;
}

void PointProfile::reset() {
  hist_.clear();
  total_ = 0;
  guard_failures_ = 0;
}

void WindowAccumulator::add(std::uint64_t ops, bool guard_failed) {
  ++calls_;
  ops_ += ops;
  if (guard_failed) ++guard_failures_;
}

MetricWindow WindowAccumulator::close(std::uint64_t budget_ops, std::uint64_t window_id,
                                      std::string config_id) {
  MetricWindow w;
  w.window_id = window_id;
  w.config_id = std::move(config_id);
  w.calls = calls_;
  w.total_ops = ops_;
  w.guard_failures = guard_failures_;
  if (calls_ > 0 && ops_ > 0)
    w.throughput = static_cast<double>(budget_ops) * static_cast<double>(calls_) / static_cast<double>(ops_);
  w.wall_ms = wall_ms_;
  *this = WindowAccumulator{};
  return w;
}

std::string format_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string metrics_csv_header(bool wallclock) {
  std::string h = "window_id,config_id,calls,total_ops,throughput,guard_failures";
  if (wallclock) h += ",wall_ms";
  return h;
}

std::string metrics_csv_row(const MetricWindow& w, bool wallclock) {
  std::string r = std::to_string(w.window_id) + "," + w.config_id + "," + std::to_string(w.calls) + "," +
                  std::to_string(w.total_ops) + "," +
                  (w.throughput ? format_decimal(*w.throughput) : std::string()) + "," +
                  std::to_string(w.guard_failures);
  if (wallclock) r += "," + (w.wall_ms ? format_decimal(*w.wall_ms) : std::string());
  return r;
}

}  // namespace rtspec
