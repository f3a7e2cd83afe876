#include "unidecon/rng.hpp"

namespace unidecon {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(const SeedSpec& seed) {
  return splitmix64(splitmix64(seed.master_seed) ^ splitmix64(~seed.stream_index));
}

}  // namespace unidecon
