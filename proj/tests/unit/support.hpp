#pragma once

#include <cstdint>
#include <vector>

#include <cml/seeding.hpp>

// Shared helpers for the unit suite: a tiny deterministic value source built
// on the library's own splitmix64 expansion, so property tests are
// reproducible without pulling in <random>.
namespace ts {

class rng {
 public:
  explicit rng(std::uint64_t seed) : sm_(seed) {}

  std::uint64_t u64() { return sm_.next(); }

  // Uniform double in (0,1), clamped away from the endpoints.
  double open01() {
    double x = cml::u01(sm_.next());
    if (x < 1e-12) x = 1e-12;
    if (x > 1.0 - 1e-12) x = 1.0 - 1e-12;
    return x;
  }

  double in(double lo, double hi) { return lo + (hi - lo) * cml::u01(sm_.next()); }

  std::uint64_t below(std::uint64_t n) { return sm_.next() % n; }

  std::vector<std::uint8_t> bits(std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(sm_.next() & 1);
    return out;
  }

 private:
  cml::splitmix64 sm_;
};

// 100 binary expansion digits of pi's fractional part, the standard worked
// example input for the frequency and runs tests.
inline const char* pi100 =
    "1100100100001111110110101010001000100001011010001100001000110100110001001100011001"
    "100010100010111000";

}  // namespace ts
