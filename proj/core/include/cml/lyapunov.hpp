#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cml/lattice.hpp"
#include "cml/seeding.hpp"

namespace cml {

struct le_entry {
  std::size_t r = 0, l = 0;
  double lambda_modulus = 0.0;
  double le = 0.0;  // le_f + ln(lambda_modulus); -inf sentinel for divergent modes
};

struct le_spectrum_result {
  std::vector<le_entry> entries;  // all R*L modes, sorted descending by le
  double le_f = 0.0;
};

// Modes with coupling-eigenvalue modulus below this are flagged divergent
// (le = -infinity) instead of raising.
inline constexpr double divergent_modulus_cutoff = 1e-12;

// Eigenvalues of the coupling matrix, indexed r*L + l:
//   lambda_{r,l} = 1-eps + (eps/4)(w_r + w_r^{R-1}) + (eps/4)(m_l + m_l^{L-1}),
// w_r = exp(i*2*pi*r/R), m_l = exp(i*2*pi*l/L). Imaginary parts cancel
// analytically; |Im| <= 1e-12 is asserted before returning.
std::vector<std::complex<double>> eigenvalues(double epsilon, std::size_t R, std::size_t L);

// Dense (R*L)x(R*L) coupling matrix K, row-major. Verification oracle only;
// guarded to R*L <= 4096.
std::vector<double> coupling_matrix(double epsilon, std::size_t R, std::size_t L);

// Full analytic exponent spectrum: le_{r,l} = le_f + ln|1 - eps*(1 - (cos(2*pi*r/R)
// + cos(2*pi*l/L))/2)|. The r=l=0 inner term is exactly 1, so the maximum entry
// equals le_f bit-for-bit.
le_spectrum_result le_spectrum(double le_f, double epsilon, std::size_t R, std::size_t L);

// Numeric estimates of the top n_exponents exponents: tangent-space iteration
// with Jacobians J_n = F'(x_n) * K along an orbit of the local map, Gram-Schmidt
// re-orthonormalization every 10 steps, log-accumulated diagonal magnitudes.
// Returned descending.
std::vector<double> wolf_le(const lattice_config& config, std::uint64_t n_iter,
                            std::uint64_t n_discard, std::size_t n_exponents,
                            std::uint64_t seed = default_seed);

}  // namespace cml
