#include "rtspec/workloads.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "rtspec/error.hpp"

namespace rtspec::workloads {

// --- mmul -----------------------------------------------------------------------

std::string mmul_source() {
  return R"((func matmul ((a arr-i64) (b arr-i64) (c arr-i64) (N i64) (s i64))
  (locals (ra i64) (rc i64) (tb i64) (acc i64))
  (for i 0 N s
    (for j 0 N s
      (for k 0 N s
        (set tb (* (+ (* (/ k s) (/ N s)) (/ j s)) (* s s)))
        (for ii i (+ i s) 1
          (set ra (+ (* ii N) k))
          (set rc (+ (* ii N) j))
          (for jj 0 s 1
            (set acc (load c (+ rc jj)))
            (for kk 0 s 1
              (set acc (+ acc (* (load a (+ ra kk)) (load b (+ tb (+ (* kk s) jj)))))))
            (store c (+ rc jj) acc))))))
  (return 0))

(specpoint matmul s workload driver-coupled)
)";
}

ir::Program build_mmul(std::int64_t N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "matrix dimension must be >= 1");
  return ir::parse_program(mmul_source());
}

std::string mmul_f64_source() {
  auto src = mmul_source();
  auto swap = [&](const std::string& from, const std::string& to) {
    for (auto at = src.find(from); at != std::string::npos; at = src.find(from, at + to.size()))
      src.replace(at, from.size(), to);
  };
  swap("matmul", "matmul_f64");
  swap("arr-i64", "arr-f64");
  swap("(acc i64)", "(acc f64)");
  return src;
}

MmulInputs mmul_inputs(std::int64_t N, std::uint64_t seed) {
  MmulInputs in;
  in.N = N;
  std::mt19937_64 rng(seed);
  auto n = static_cast<std::size_t>(N * N);
  in.a.resize(n);
  in.b.resize(n);
  for (auto& x : in.a) x = static_cast<std::int64_t>(rng() % 17) - 8;
  for (auto& x : in.b) x = static_cast<std::int64_t>(rng() % 17) - 8;
  return in;
}

std::vector<std::int64_t> pack_tiles(const std::vector<std::int64_t>& m, std::int64_t N, std::int64_t s) {
  if (s < 1 || N % s != 0)
    throw Error(ErrorCode::InvalidArgument,
                "block size " + std::to_string(s) + " does not divide " + std::to_string(N));
  std::vector<std::int64_t> out(m.size());
  std::int64_t tiles = N / s;
  for (std::int64_t r = 0; r < N; ++r)
    for (std::int64_t c = 0; c < N; ++c)
      out[static_cast<std::size_t>(((r / s) * tiles + c / s) * s * s + (r % s) * s + c % s)] =
          m[static_cast<std::size_t>(r * N + c)];
  return out;
}

std::vector<Value> mmul_args(const MmulInputs& in, std::int64_t s) {
  return {in.a, pack_tiles(in.b, in.N, s), std::vector<std::int64_t>(in.a.size(), 0), in.N, s};
}

std::vector<std::int64_t> naive_matmul(const std::vector<std::int64_t>& a,
                                       const std::vector<std::int64_t>& b, std::int64_t N) {
  auto n = static_cast<std::size_t>(N);
  std::vector<std::int64_t> c(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::int64_t acc = 0;
      for (std::size_t k = 0; k < n; ++k) acc += a[i * n + k] * b[k * n + j];
      c[i * n + j] = acc;
    }
  return c;
}

// --- lpm ------------------------------------------------------------------------

namespace {

std::uint64_t host_span(int length) { return std::uint64_t{1} << (32 - length); }

std::vector<LpmRule> checked_order(const std::vector<LpmRule>& rules) {
  std::set<std::pair<std::uint32_t, int>> seen;
  for (const auto& r : rules) {
    if (r.length < 0 || r.length > 32)
      throw Error(ErrorCode::InvalidPrefix, "prefix length " + std::to_string(r.length) + " out of range");
    if (r.prefix % host_span(r.length) != 0)
      throw Error(ErrorCode::InvalidPrefix,
                  format_ipv4(r.prefix) + "/" + std::to_string(r.length) + " has host bits set");
    if (!seen.emplace(r.prefix, r.length).second)
      throw Error(ErrorCode::InvalidPrefix,
                  "duplicate rule " + format_ipv4(r.prefix) + "/" + std::to_string(r.length));
  }
  std::vector<LpmRule> sorted = rules;
  std::stable_sort(sorted.begin(), sorted.end(), [](const LpmRule& x, const LpmRule& y) {
    if (x.length != y.length) return x.length > y.length;
    return x.prefix < y.prefix;
  });
  return sorted;
}

}  // namespace

std::string lpm_source(const std::vector<LpmRule>& rules) {
  std::string out = "(func lpm ((addr i64))";
  for (const auto& r : checked_order(rules)) {
    auto span = host_span(r.length);
    out += "\n  (if (== (/ addr " + std::to_string(span) + ") " + std::to_string(r.prefix / span) +
           ") (then (return " + std::to_string(r.route) + ")) (else))";
  }
  out += "\n  (return 0))\n(specpoint lpm addr workload)\n";
  return out;
}

ir::Program build_lpm(const std::vector<LpmRule>& rules) { return ir::parse_program(lpm_source(rules)); }

std::int64_t lpm_reference(const std::vector<LpmRule>& rules, std::int64_t addr) {
  int best = -1;
  std::int64_t route = 0;
  for (const auto& r : rules) {
    if (addr < 0 || addr > 0xFFFFFFFFLL) continue;
    auto span = static_cast<std::int64_t>(host_span(r.length));
    if (addr / span == static_cast<std::int64_t>(r.prefix) / span && r.length > best) {
      best = r.length;
      route = r.route;
    }
  }
  return route;
}

std::vector<LpmRule> random_lpm_rules(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<std::pair<std::uint32_t, int>> seen;
  std::vector<LpmRule> out;
  while (out.size() < count) {
    int length = 8 + static_cast<int>(rng() % 25);
    auto span = host_span(length);
    auto prefix = static_cast<std::uint32_t>((rng() & 0xFFFFFFFFULL) / span * span);
    if (!seen.emplace(prefix, length).second) continue;
    out.push_back({prefix, length, static_cast<std::int64_t>(1 + out.size())});
  }
  return out;
}

std::vector<std::int64_t> lpm_addresses(const std::vector<LpmRule>& rules, std::size_t count,
                                        std::uint64_t seed) {
  if (rules.empty()) throw Error(ErrorCode::InvalidArgument, "no rules to draw addresses from");
  std::mt19937_64 rng(seed);
  std::set<std::int64_t> seen;
  std::vector<std::int64_t> out;
  while (out.size() < count) {
    const auto& r = rules[rng() % rules.size()];
    auto addr = static_cast<std::int64_t>(r.prefix + rng() % host_span(r.length));
    if (seen.insert(addr).second) out.push_back(addr);
  }
  return out;
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t out = 0;
  for (int part = 0; part < 4; ++part) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || v > 255) return std::nullopt;
    out = out << 8 | v;
    text.remove_prefix(static_cast<std::size_t>(p - text.data()));
    if (part < 3) {
      if (text.empty() || text.front() != '.') return std::nullopt;
      text.remove_prefix(1);
    }
  }
  if (!text.empty()) return std::nullopt;
  return out;
}

std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + "." + std::to_string(addr >> 16 & 255) + "." +
         std::to_string(addr >> 8 & 255) + "." + std::to_string(addr & 255);
}

// --- batch pipeline -----------------------------------------------------------

// Ring layout: [0] rx doorbell, [1] checksum snapshot, [2] tx doorbell,
// [3] tx batch counter, [4..7] tx descriptor, [8..] payload slots.
//
// Per-batch fixed cost grows from stage to stage (1, 2 and 6 header stores
// plus an emit in tx) while the per-item cost is the same, and batches past
// the end of the payload still pay the bounds test. For n = 36 the unique
// optimum is b1=4, b2=4, b3=8 (1772 ops/call against 3475 unspecialized).
std::string pipeline_source() {
  return R"((func pipeline ((in arr-i64) (ring arr-i64) (out arr-i64) (n i64) (b1 i64) (b2 i64) (b3 i64))
  (locals (sum i64) (idx i64))
  (set sum 0)
  (for base1 0 n b1
    (store ring 0 base1)
    (for k1 0 b1 1
      (set idx (+ base1 k1))
      (if (< idx n)
        (then (store ring (+ 8 idx) (load in idx)))
        (else))))
  (for base2 0 n b2
    (store ring 1 sum)
    (store ring 0 base2)
    (for k2 0 b2 1
      (set idx (+ base2 k2))
      (if (< idx n)
        (then (set sum (+ sum (load ring (+ 8 idx)))))
        (else))))
  (for base3 0 n b3
    (emit "tx" base3)
    (store ring 2 base3)
    (store ring 3 (+ (load ring 3) 1))
    (store ring 4 base3)
    (store ring 5 b3)
    (store ring 6 sum)
    (store ring 7 n)
    (for k3 0 b3 1
      (set idx (+ base3 k3))
      (if (< idx n)
        (then (store out idx (load ring (+ 8 idx))))
        (else))))
  (return sum))

(specpoint pipeline b1 config)
(specpoint pipeline b2 config)
(specpoint pipeline b3 config)
)";
}

ir::Program build_batch_pipeline() { return ir::parse_program(pipeline_source()); }

std::vector<Value> pipeline_args(const std::vector<std::int64_t>& payload, std::int64_t b1,
                                 std::int64_t b2, std::int64_t b3) {
  auto n = static_cast<std::int64_t>(payload.size());
  return {payload, std::vector<std::int64_t>(payload.size() + kRingHeader, 0),
          std::vector<std::int64_t>(payload.size(), 0), n, b1, b2, b3};
}

// --- streams ----------------------------------------------------------------------

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ZipfSampler::ZipfSampler(std::size_t n, double exponent) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "zipf over an empty key set");
  cdf_.resize(n);
  double total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    total += std::pow(static_cast<double>(k + 1), -exponent);
    cdf_[k] = total;
  }
  for (auto& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

std::size_t ZipfSampler::sample(double u) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<std::size_t>(it - cdf_.begin());
}

double ZipfSampler::mass(std::size_t rank) const {
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

std::uint64_t RequestStream::total_calls() const {
  std::uint64_t n = 0;
  for (const auto& p : phases) n += p.calls;
  return n;
}

StreamGenerator::StreamGenerator(RequestStream spec) : spec_(std::move(spec)), rng_(spec_.seed) {
  for (std::size_t i = 0; i < spec_.phases.size(); ++i)
    for (const auto& [name, d] : spec_.phases[i].params) {
      if (d.kind == Distribution::Kind::Constant && d.values.size() != 1)
        throw Error(ErrorCode::Config, "constant parameter '" + name + "' needs exactly one value");
      if (d.kind == Distribution::Kind::Choice && d.values.empty())
        throw Error(ErrorCode::Config, "choice parameter '" + name + "' has no values");
      if (d.kind == Distribution::Kind::Zipf) {
        std::size_t n = d.values.empty() ? static_cast<std::size_t>(std::max<std::int64_t>(d.count, 0))
                                         : d.values.size();
        zipf_.emplace(std::make_pair(i, name), ZipfSampler(n, d.exponent));
      }
    }
}

std::optional<Request> StreamGenerator::next() {
  while (phase_ < spec_.phases.size() && in_phase_ >= spec_.phases[phase_].calls) {
    ++phase_;
    in_phase_ = 0;
  }
  if (phase_ >= spec_.phases.size()) return std::nullopt;
  Request r;
  for (const auto& [name, d] : spec_.phases[phase_].params) {
    switch (d.kind) {
      case Distribution::Kind::Constant:
        r[name] = d.values[0];
        break;
      case Distribution::Kind::Choice:
        r[name] = d.values[static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(d.values.size()))];
        break;
      case Distribution::Kind::Zipf: {
        auto rank = zipf_.at({phase_, name}).sample(uniform01(rng_));
        r[name] = d.values.empty() ? Scalar{static_cast<std::int64_t>(rank)} : d.values[rank];
        break;
      }
    }
  }
  ++in_phase_;
  ++position_;
  return r;
}

}  // namespace rtspec::workloads
