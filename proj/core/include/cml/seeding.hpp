#pragma once

#include <cstdint>

namespace cml {

inline constexpr std::uint64_t default_seed = 0x243F6A8885A308D3ull;

// splitmix64: the i-th output of a seeded instance fills the i-th lattice node,
// so a single 64-bit seed expands deterministically to any grid size.
struct splitmix64 {
  std::uint64_t state;

  explicit splitmix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t v = (state += 0x9E3779B97F4A7C15ull);
    v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ull;
    v = (v ^ (v >> 27)) * 0x94D049BB133111EBull;
    return v ^ (v >> 31);
  }
};

// Uniform double in [0,1) from the 53 high bits of v.
inline double u01(std::uint64_t v) {
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

}  // namespace cml
