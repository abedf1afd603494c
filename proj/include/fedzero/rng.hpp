#pragma once

#include <cstdint>

namespace fedzero {

// Role tags keying the independent random streams of a run. Every stream is
// fully identified by (seed, role, t, agent), so streams can be created in
// any order, on any worker, and still produce the same sequences.
enum class StreamRole : std::uint64_t {
  Init = 1,         // policy parameter initialization
  Partition = 2,    // coordinate shuffling for partitions
  Perturb = 3,      // perturbation sampling, per (t, agent)
  Oracle = 4,       // rollouts + panelist coins inside an oracle call, per (t, agent)
  ServerPanel = 5,  // server-side acceptance panel, per t
  Eval = 6,         // policy evaluation episodes, per t
  Check = 7,        // verification suites
  Test = 8,         // unit tests
};

// Counter-derived xoshiro256++ stream. The state is seeded through a
// SplitMix64 chain over (seed, role, t, agent); identical keys give
// bit-identical sequences and distinct keys give statistically independent
// streams. Generator identity string is recorded in every trace header.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamRole role, std::uint64_t t = 0,
            std::uint64_t agent = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  // Standard normal via Box-Muller (second variate cached).
  double normal();

  // Unbiased integer on [0, n), n >= 1.
  std::uint64_t uniform_below(std::uint64_t n);

  static constexpr const char* kGeneratorId = "splitmix64-keyed-xoshiro256++/v1";

 private:
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fedzero
