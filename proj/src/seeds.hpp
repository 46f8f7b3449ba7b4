#pragma once

#include <cstdint>

namespace catpaw::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Child seed for stream `k` of a parent seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  return splitmix64(seed ^ splitmix64(k + 0x632be59bd9b4e019ull));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k,
                                 std::uint64_t j) {
  return derive_seed(derive_seed(seed, k), j);
}

}  // namespace catpaw::detail
