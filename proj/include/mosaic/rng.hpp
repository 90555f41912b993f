#ifndef MOSAIC_RNG_HPP
#define MOSAIC_RNG_HPP

#include <cstdint>
#include <random>

namespace mosaic {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent per-job stream: hash of (master seed, job id).
inline Rng make_rng(std::uint64_t master_seed, std::uint64_t stream_id = 0) {
  return Rng(splitmix64(splitmix64(master_seed) ^ stream_id * 0x9e3779b97f4a7c15ULL));
}

}  // namespace mosaic

#endif
