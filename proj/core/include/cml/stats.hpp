#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cml/bitstream.hpp"
#include "cml/lattice.hpp"

namespace cml {

struct test_report {
  std::string name;
  double statistic = 0.0;
  double p_value = 0.0;
  bool pass = false;  // p_value >= alpha
  double alpha = 0.01;
};

struct two_level_report {
  std::vector<test_report> per_sequence;
  double pass_rate = 0.0;
  double pass_rate_threshold = 0.0;  // (1-alpha) - 3*sqrt(alpha*(1-alpha)/n)
  double p_value_t = 0.0;
  bool uniform = false;  // p_value_t >= 0.0001
};

// |#zeros - #ones| / length.
double bit_bias(const bit_stream& bits);

// The four internal sub-tests. Structural minimums are checked here; the NIST
// length recommendation (n >= 100) is enforced by battery()/callers.
test_report monobit_test(const bit_stream& bits, double alpha);
test_report block_frequency_test(const bit_stream& bits, std::size_t block_len, double alpha);
test_report runs_test(const bit_stream& bits, double alpha);
// Serial test for pattern length m >= 2: both P-values (del-psi^2, del^2-psi^2).
std::pair<test_report, test_report> serial_test(const bit_stream& bits, int m, double alpha);
test_report serial2_test(const bit_stream& bits, double alpha);  // m = 2, first P-value

// Smallest power of two above 0.01*n, floored at 128.
std::size_t default_block_len(std::uint64_t n_bits);
// monobit, block frequency (default block length), runs, serial (m=2).
std::vector<test_report> battery(const bit_stream& bits, double alpha);

// Chi-square goodness of fit of P-values against uniform [0,1]: `bins`
// equal-width bins (half-open except the last), bins-1 degrees of freedom.
// Requires >= 50 values.
double chi_square_uniformity(const std::vector<double>& p_values, std::size_t bins = 10);

// Second-level evaluation of one sub-test across n_sequences sequences.
two_level_report two_level_evaluate(const std::vector<test_report>& reports, double alpha,
                                    std::size_t n_sequences);

// For each of mu_steps values spanning [mu_lo, mu_hi], run a fresh seeded
// lattice and emit (mu, node value) for points_per_mu post-discard points.
std::vector<std::pair<double, double>> bifurcation_scan(const lattice_config& config_template,
                                                        std::uint64_t seed, double mu_lo,
                                                        double mu_hi, std::size_t mu_steps,
                                                        node_index node,
                                                        std::size_t points_per_mu,
                                                        std::size_t discard);

// Equal-width bins over [0,1]; counts sum to the orbit length.
std::vector<std::uint64_t> orbit_histogram(const std::vector<double>& orbit, std::size_t bins);

}  // namespace cml
