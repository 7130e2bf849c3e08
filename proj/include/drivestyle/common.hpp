#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace drivestyle {

// Sampling period of the synthetic sensor suite, seconds.
inline constexpr double kSampleDt = 0.05;

// Maximum range of the obstacle distance sensor, meters. Readings beyond
// this are missing and later imputed to exactly this value.
inline constexpr double kObstacleSensorRange = 10.5;

// Class labels used throughout the toolkit.
inline constexpr int kCautious = 0;
inline constexpr int kNormal = 1;
inline constexpr int kAggressive = 2;

// ---------------------------------------------------------------------------
// Error taxonomy. std::invalid_argument covers precondition violations;
// the types below distinguish data, format and numeric failures so the CLI
// can map them to distinct exit codes.
// ---------------------------------------------------------------------------

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotFoundError : std::runtime_error {
  explicit NotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric infeasibility: brute-force explainers beyond the feature budget,
// zero-cover nodes, non-finite intermediate values.
struct FeasibilityError : std::runtime_error {
  explicit FeasibilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Deterministic random numbers. All stochastic code in the library draws
// through these helpers so that results are reproducible bit-for-bit for a
// given seed, independent of the standard library's distribution internals
// (std::uniform_*_distribution is not pinned across implementations).
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up so that small seeds do not produce correlated first draws.
    next_u64();
    next_u64();
  }

  // splitmix64 step.
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller, truncated at +/- 4 sigma so noise terms
  // carry a hard bound.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    if (z > 4.0) z = 4.0;
    if (z < -4.0) z = -4.0;
    return z;
  }

 private:
  std::uint64_t state_;
};

// Stable seed derivation: mixes a base seed with one or more stream tags so
// that independent components (roads, traces, trees) get decorrelated
// deterministic streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base ^ (0x9E3779B97F4A7C15ULL + (tag << 1) + (base >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag1,
                                 std::uint64_t tag2) {
  return derive_seed(derive_seed(base, tag1), tag2);
}

}  // namespace drivestyle
