#include "ivlab/rng.hpp"

namespace ivlab::stats {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  // Rejection against the largest multiple of n, so the result is unbiased.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

RngStream StreamFamily::make(std::uint64_t domain, std::uint64_t index) const {
  std::uint64_t state = root_;
  (void)splitmix64(state);
  state ^= 0x632be59bd9b4e019ULL * (domain + 1);
  (void)splitmix64(state);
  state ^= 0x9e6c63d0876a9a47ULL * (index + 1);
  const std::uint64_t derived = splitmix64(state);
  return RngStream(derived);
}

}  // namespace ivlab::stats
