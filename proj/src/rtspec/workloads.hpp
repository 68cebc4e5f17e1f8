#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rtspec/engine.hpp"
#include "rtspec/ir.hpp"

namespace rtspec::workloads {

// --- blocked matrix multiply ----------------------------------------------

/// `matmul(a, b, c, N, s)`: c += a*b over N x N matrices tiled by s. `a` and
/// `c` are row-major; `b` is packed tile by tile (see pack_tiles).
std::string mmul_source();
ir::Program build_mmul(std::int64_t N);
/// Same kernel over f64 matrices as `matmul_f64`; excluded from op goldens.
std::string mmul_f64_source();

struct MmulInputs {
  std::int64_t N = 0;
  std::vector<std::int64_t> a, b;
};

MmulInputs mmul_inputs(std::int64_t N, std::uint64_t seed);
/// Reorders a row-major N x N matrix into s x s tiles, tiles in row-major
/// order and row-major inside each tile. Requires N % s == 0.
std::vector<std::int64_t> pack_tiles(const std::vector<std::int64_t>& m, std::int64_t N, std::int64_t s);
std::vector<Value> mmul_args(const MmulInputs& in, std::int64_t s);
std::vector<std::int64_t> naive_matmul(const std::vector<std::int64_t>& a,
                                       const std::vector<std::int64_t>& b, std::int64_t N);

// --- longest prefix match -------------------------------------------------

struct LpmRule {
  std::uint32_t prefix = 0;
  int length = 0;
  std::int64_t route = 0;
};

std::string lpm_source(const std::vector<LpmRule>& rules);
/// Throws InvalidPrefix on a bad length, host bits set, or a duplicate rule.
ir::Program build_lpm(const std::vector<LpmRule>& rules);
std::int64_t lpm_reference(const std::vector<LpmRule>& rules, std::int64_t addr);

std::vector<LpmRule> random_lpm_rules(std::size_t count, std::uint64_t seed);
/// Addresses that each fall inside some rule.
std::vector<std::int64_t> lpm_addresses(const std::vector<LpmRule>& rules, std::size_t count,
                                        std::uint64_t seed);

std::optional<std::uint32_t> parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t addr);

// --- three-stage batch pipeline --------------------------------------------

/// `pipeline(in, ring, out, n, b1, b2, b3)`: copies `in` through the ring to
/// `out` in three stages, each working in batches of its own size, and
/// returns the payload sum.
std::string pipeline_source();
ir::Program build_batch_pipeline();

constexpr std::int64_t kRingHeader = 8;

std::vector<Value> pipeline_args(const std::vector<std::int64_t>& payload, std::int64_t b1,
                                 std::int64_t b2, std::int64_t b3);

// --- request streams -------------------------------------------------------

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent);
  /// Rank in [0, n); rank 0 is the most frequent.
  std::size_t sample(double u) const;
  double mass(std::size_t rank) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

struct Distribution {
  enum class Kind { Constant, Choice, Zipf };
  Kind kind = Kind::Constant;
  std::vector<Scalar> values;  // Constant: one value; Choice/Zipf: the key set
  std::int64_t count = 0;      // Zipf without values draws ranks 0..count-1
  double exponent = 1.0;
};

struct Phase {
  std::uint64_t calls = 0;
  std::map<std::string, Distribution> params;
};

struct RequestStream {
  std::string generator;
  std::uint64_t seed = 0;
  std::vector<Phase> phases;

  std::uint64_t total_calls() const;
};

using Request = std::map<std::string, Scalar>;

class StreamGenerator {
 public:
  explicit StreamGenerator(RequestStream spec);

  /// Next request, or nullopt after the last phase.
  std::optional<Request> next();
  std::size_t phase() const { return phase_; }
  std::uint64_t position() const { return position_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  RequestStream spec_;
  std::mt19937_64 rng_;
  std::size_t phase_ = 0;
  std::uint64_t in_phase_ = 0;
  std::uint64_t position_ = 0;
  std::map<std::pair<std::size_t, std::string>, ZipfSampler> zipf_;
};

}  // namespace rtspec::workloads
