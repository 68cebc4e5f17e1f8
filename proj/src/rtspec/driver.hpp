#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "rtspec/config.hpp"

namespace rtspec {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  bool wallclock = false;
};

struct RunOutput {
  std::string metrics_csv;
  std::string exploration_csv;
  std::string summary;
};

/// Drives the configured workload through a runtime and returns the three
/// artifacts. Throws Error(Config) for bad configs and Trap for faults.
RunOutput run_workload(RunConfig cfg, const RunOptions& opts = {});

/// run_workload plus writing metrics.csv, exploration.csv and summary.txt.
RunOutput run_to_dir(const std::string& config_json, const std::filesystem::path& out,
                     const RunOptions& opts = {});

/// Summary text computed from the two CSVs alone.
std::string summarize(const std::string& metrics_csv, const std::string& exploration_csv);

struct SpecializeRequest {
  std::string program_text;
  std::string point;  // FN:VAR
  std::string value;
  bool no_guard = false;
  int unroll_cap = 16;
};

/// Generic IR, specialized IR, pass log and statement-count delta.
std::string specialize_report(const SpecializeRequest& req);

/// Per-config table from metrics.csv in `dir`. Throws Error(Io) when the
/// directory holds no metrics.
std::string report_dir(const std::filesystem::path& dir);

}  // namespace rtspec
