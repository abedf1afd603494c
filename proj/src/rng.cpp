#include "fedzero/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedzero {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamRole role, std::uint64_t t,
                     std::uint64_t agent) {
  // Fold the stream identity into a single key, then expand it into the
  // xoshiro state. The chained SplitMix64 steps keep nearby ids apart.
  std::uint64_t key = seed;
  std::uint64_t tmp = key;
  key = splitmix64(tmp) ^ (static_cast<std::uint64_t>(role) * 0xD6E8FEB86659FD93ULL);
  tmp = key;
  key = splitmix64(tmp) ^ (t * 0xA3B195354A39B70DULL);
  tmp = key;
  key = splitmix64(tmp) ^ (agent * 0x1B03738712FAD5C9ULL);
  std::uint64_t s = key;
  for (auto& word : state_) {
    word = splitmix64(s);
  }
  // All-zero state is unreachable for xoshiro; SplitMix64 output of four
  // consecutive steps is never all zero for any key, but guard anyway.
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
    state_[0] = 0x9E3779B97F4A7C15ULL;
  }
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++ step.
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0,1] so the log is finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) {
    throw std::invalid_argument("uniform_below: n must be positive");
  }
  // Rejection sampling over the largest multiple of n below 2^64.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t x = next_u64();
  while (x >= limit) {
    x = next_u64();
  }
  return x % n;
}

}  // namespace fedzero
