#pragma once

#include <cstdint>
#include <random>

namespace ivlab::stats {

struct RngSeed {
  std::uint64_t value = 1;
};

// One deterministic random stream. The engine is std::mt19937_64 (fully
// specified by the standard) and every distribution transform in this
// library is implemented explicitly, so identical seeds give bit-identical
// draws on any conforming platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1), never returns an exact 0 or 1.
  double uniform_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// Derives independent sub-streams from one root seed. Streams for distinct
// (domain, index) pairs never share engine state; consumers fix the
// interleaving by consuming each stream in round order.
class StreamFamily {
 public:
  explicit StreamFamily(RngSeed seed) : root_(seed.value) {}

  RngStream make(std::uint64_t domain, std::uint64_t index = 0) const;

  std::uint64_t root() const { return root_; }

 private:
  std::uint64_t root_;
};

// Stream domain tags shared across the library so layouts stay stable.
namespace stream_domain {
inline constexpr std::uint64_t kAgents = 1;
inline constexpr std::uint64_t kExplore = 2;
inline constexpr std::uint64_t kRealize = 3;
inline constexpr std::uint64_t kXiMonteCarlo = 4;
inline constexpr std::uint64_t kThetaDraw = 5;
inline constexpr std::uint64_t kBayes = 6;
inline constexpr std::uint64_t kGapMonteCarlo = 7;
}  // namespace stream_domain

}  // namespace ivlab::stats
