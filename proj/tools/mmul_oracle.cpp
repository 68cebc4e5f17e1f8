// Brute-force ops/call table for the matmul block-size sweep. One call per
// configuration through the reference evaluator; the generic row runs with
// the default block size the driver passes while nothing is pinned.

#include <CLI11.hpp>

#include <iostream>

#include "rtspec/engine.hpp"
#include "rtspec/workloads.hpp"

using namespace rtspec;

int main(int argc, char** argv) {
  CLI::App app{"matmul oracle"};
  std::int64_t N = 256, fallback_s = 8;
  std::uint64_t seed = 1;
  std::vector<std::int64_t> sizes{2, 4, 8, 16, 32, 64};
  app.add_option("-N", N, "matrix size");
  app.add_option("--default-s", fallback_s, "block size used by the generic row");
  app.add_option("--input-seed", seed, "input matrix seed");
  app.add_option("--sizes", sizes, "block sizes");
  CLI11_PARSE(app, argc, argv);

  auto p = workloads::build_mmul(1);
  auto in = workloads::mmul_inputs(N, seed);
  auto want = workloads::naive_matmul(in.a, in.b, N);

  auto row = [&](const std::string& label, std::int64_t s, std::shared_ptr<const Variant> v) {
    Engine e(p);
    if (v) e.set_active_variant("matmul", v);
    auto args = workloads::mmul_args(in, s);
    auto r = e.call("matmul", args);
    bool ok = std::get<std::vector<std::int64_t>>(args[2]) == want;
    std::cout << label << " " << r.ops << (ok ? "" : " WRONG") << "\n";
  };
  row("generic", fallback_s, nullptr);
  for (auto s : sizes) {
    if (N % s) continue;
    auto v = std::make_shared<const Variant>(pin_and_specialize(p, PinSet{"matmul", {{"s", Scalar{s}}}}));
    row("s=" + std::to_string(s), s, v);
  }
  return 0;
}
