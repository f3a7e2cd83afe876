#pragma once

#include <cstdint>
#include <random>

namespace unidecon {

// Identifies one independent random stream: the generator for a given
// (master_seed, stream_index) pair is a pure function of the pair.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based derivation of the per-stream generator seed.
std::uint64_t derive_stream_seed(const SeedSpec& seed);

// Uniform(0,1) draws from a 64-bit engine. Open on both ends so that
// inverse-CDF sampling never hits quantile(0) or quantile(1).
class StreamRng {
 public:
  explicit StreamRng(const SeedSpec& seed) : engine_(derive_stream_seed(seed)) {}

  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace unidecon
