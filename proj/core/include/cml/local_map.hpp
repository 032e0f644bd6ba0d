#pragma once

#include <cstdint>

namespace cml {

enum class map_kind { logistic, tent, plm };

// Local chaotic map F and its parameters. `segments` participates only for plm.
//
//   logistic: F(x) = mu*x*(1-x),                     mu in (0,4]
//   tent:     F(x) = mu*x on (0,0.5), mu*(1-x) on [0.5,1),  mu in (0,2]
//   plm:      N parabolic segments; s = ceil(x*N); bump = mu*N^2*(x-(s-1)/N)*(s/N-x);
//             odd s -> bump, even s -> 1-bump,      mu in (0,4], N >= 2
struct local_map {
  map_kind kind = map_kind::logistic;
  double mu = 4.0;
  int segments = 64;

  void validate() const;  // throws domain_error on bad parameters
};

// F(x) for x in (0,1); result in [0,1]. Segment-boundary inputs of plm are
// nudged one ulp up before branch selection so eval stays total.
double eval(const local_map& map, double x);

// F'(x); throws domain_error at non-differentiable points
// (tent: x == 0.5; plm: segment boundaries x = i/N).
double derivative(const local_map& map, double x);

// Numeric Lyapunov exponent of the bare map: (1/n_iter) * sum ln|F'(x_m)| after
// discarding n_discard transient points. Non-differentiable and zero-derivative
// points are skipped with an LSB perturbation of the orbit value. Throws
// degenerate_orbit_error when the orbit collapses onto an attractor with
// |F'| constant below 1.
double local_le(const local_map& map, double x0, std::uint64_t n_iter = 1000000,
                std::uint64_t n_discard = 1000);

namespace detail {
// Clamp bounds used by the absorbing-state rule in Float64 arithmetic.
inline constexpr double float_min_state = 0x1p-52;
inline constexpr double float_max_state = 1.0 - 0x1p-52;
}  // namespace detail

}  // namespace cml
