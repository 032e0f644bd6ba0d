#include "cml/fixed_point.hpp"

#include <cmath>

#include "cml/errors.hpp"

namespace cml {

fixed_value quantize(double x, int z) {
  if (z < 1 || z > 64) throw domain_error("quantize: z must be in [1,64]");
  if (!(x >= 0.0 && x < 1.0)) throw domain_error("quantize: x must be in [0,1)");
  return {static_cast<std::uint64_t>(std::ldexp(x, z)), z};
}

std::vector<std::uint8_t> bits_of(const fixed_value& v) {
  if (v.z < 1 || v.z > 64) throw domain_error("bits_of: z must be in [1,64]");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(v.z));
  for (int i = 0; i < v.z; ++i)
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v.raw >> (v.z - 1 - i)) & 1u);
  return out;
}

double to_double(const fixed_value& v) {
  return std::ldexp(static_cast<double>(v.raw), -v.z);
}

}  // namespace cml
