// Command-line front end over the C API.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "rtspec/rtspec.h"

namespace {

bool slurp(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

int fail(rtspec_status st) {
  std::cerr << "error (" << rtspec_status_name(st) << "): " << rtspec_last_error() << "\n";
  return st == RTSPEC_ERR_TRAP ? 2 : 1;
}

void emit(char* s) {
  std::fputs(s, stdout);
  rtspec_free_string(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rtspec: runtime specialization driver"};
  app.require_subcommand(1);

  std::string config, out_dir;
  std::uint64_t seed = 0;
  bool wallclock = false;
  auto* run = app.add_subcommand("run", "run a workload config and write CSV traces");
  run->add_option("--config", config, "JSON config")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the seed");
  run->add_flag("--wallclock", wallclock, "record wall_ms per window");

  std::string program, point, value;
  bool no_guard = false;
  int unroll_cap = 16;
  auto* spec = app.add_subcommand("specialize", "print a specialized variant");
  spec->add_option("--program", program, "IR program file")->required();
  spec->add_option("--point", point, "FN:VAR")->required();
  spec->add_option("--value", value, "pinned value")->required();
  spec->add_flag("--no-guard", no_guard, "omit the entry check");
  spec->add_option("--unroll-cap", unroll_cap, "max trip count to unroll")->check(CLI::PositiveNumber);

  std::string dir;
  auto* report = app.add_subcommand("report", "summarize metrics.csv per config");
  report->add_option("--dir", dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    std::string text;
    if (!slurp(config, text)) {
      std::cerr << "error: cannot read " << config << "\n";
      return 1;
    }
    char* summary = nullptr;
    auto st = rtspec_run_config(text.c_str(), out_dir.c_str(), seed_opt->count() > 0, seed, wallclock, &summary);
    if (st != RTSPEC_OK) return fail(st);
    emit(summary);
    return 0;
  }
  if (*spec) {
    std::string text;
    if (!slurp(program, text)) {
      std::cerr << "error: cannot read " << program << "\n";
      return 1;
    }
    char* out = nullptr;
    auto st = rtspec_specialize_text(text.c_str(), point.c_str(), value.c_str(), no_guard, unroll_cap, &out);
    if (st != RTSPEC_OK) return fail(st);
    emit(out);
    return 0;
  }
  char* table = nullptr;
  auto st = rtspec_report(dir.c_str(), &table);
  if (st != RTSPEC_OK) return fail(st);
  emit(table);
  return 0;
}
