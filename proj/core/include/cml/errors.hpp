#pragma once

#include <stdexcept>

namespace cml {

// Parameter or input-range violation.
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Orbit collapsed onto an attracting fixed point; no meaningful exponent.
class degenerate_orbit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Independence gate exhausted its retry budget: the two instances are
// pathologically correlated.
class independence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cml
