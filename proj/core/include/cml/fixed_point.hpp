#pragma once

#include <cstdint>
#include <vector>

namespace cml {

// Q0.z binary fraction: value = raw / 2^z in [0,1), raw < 2^z, 1 <= z <= 64.
struct fixed_value {
  std::uint64_t raw = 0;
  int z = 64;
};

// floor(x * 2^z). Exact: scaling a double by a power of two loses no bits.
fixed_value quantize(double x, int z);

// Fractional bits w_1..w_z, most significant first.
std::vector<std::uint8_t> bits_of(const fixed_value& v);

double to_double(const fixed_value& v);

namespace fxp {

inline std::uint64_t mask(int z) {
  return z == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << z) - 1);
}

// floor(a*b / 2^z) for raw Q0.z operands.
inline std::uint64_t mul(std::uint64_t a, std::uint64_t b, int z) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) >> z);
}

// Raw value of 1 - x for x >= 1 ulp (2^z - x, wrapping correctly at z = 64).
inline std::uint64_t one_minus(std::uint64_t x, int z) {
  return z == 64 ? (std::uint64_t{0} - x) : ((std::uint64_t{1} << z) - x);
}

}  // namespace fxp

}  // namespace cml
