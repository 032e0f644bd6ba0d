#include "cml/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "cml/errors.hpp"
#include "cml/math_special.hpp"

namespace cml {

namespace {

std::uint64_t count_ones(const bit_stream& bits) {
  std::uint64_t ones = 0;
  const auto& bytes = bits.bytes();
  // All bytes but the last are fully populated (MSB-first packing).
  for (std::size_t i = 0; i + 1 < bytes.size(); ++i)
    ones += static_cast<std::uint64_t>(std::popcount(bytes[i]));
  if (!bytes.empty()) {
    const std::size_t tail = bits.size() - 8 * (bytes.size() - 1);
    const std::uint8_t last = static_cast<std::uint8_t>(bytes.back() >> (8 - tail) << (8 - tail));
    ones += static_cast<std::uint64_t>(std::popcount(last));
  }
  return ones;
}

test_report make_report(std::string name, double statistic, double p, double alpha) {
  test_report r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.p_value = p;
  r.alpha = alpha;
  r.pass = p >= alpha;
  return r;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw domain_error("alpha must be in (0,1)");
}

// psi^2_m over cyclic m-bit patterns; psi^2_0 := 0.
double psi_squared(const bit_stream& bits, int m) {
  if (m <= 0) return 0.0;
  const std::uint64_t n = bits.size();
  std::vector<std::uint64_t> counts(std::size_t{1} << m, 0);
  const std::uint64_t mask = (std::uint64_t{1} << m) - 1;
  std::uint64_t w = 0;
  // Prime the window with the first m-1 bits, then slide cyclically.
  for (int i = 0; i < m - 1; ++i) w = (w << 1) | bits.bit(i % n);
  for (std::uint64_t i = 0; i < n; ++i) {
    w = ((w << 1) | bits.bit((i + m - 1) % n)) & mask;
    ++counts[w];
  }
  double sum = 0.0;
  for (std::uint64_t c : counts) sum += static_cast<double>(c) * static_cast<double>(c);
  return std::ldexp(sum, m) / static_cast<double>(n) - static_cast<double>(n);
}

}  // namespace

double bit_bias(const bit_stream& bits) {
  if (bits.size() == 0) throw domain_error("bit_bias: empty stream");
  const std::uint64_t ones = count_ones(bits);
  const std::uint64_t zeros = bits.size() - ones;
  const std::uint64_t diff = ones > zeros ? ones - zeros : zeros - ones;
  return static_cast<double>(diff) / static_cast<double>(bits.size());
}

test_report monobit_test(const bit_stream& bits, double alpha) {
  check_alpha(alpha);
  const std::uint64_t n = bits.size();
  if (n == 0) throw domain_error("monobit_test: empty stream");
  const std::uint64_t ones = count_ones(bits);
  // S_n = sum of +-1; s_obs = |S_n| / sqrt(n).
  const double sn = 2.0 * static_cast<double>(ones) - static_cast<double>(n);
  const double s_obs = std::fabs(sn) / std::sqrt(static_cast<double>(n));
  const double p = std::erfc(s_obs / std::numbers::sqrt2);
  return make_report("monobit", s_obs, p, alpha);
}

test_report block_frequency_test(const bit_stream& bits, std::size_t block_len, double alpha) {
  check_alpha(alpha);
  if (block_len < 1) throw domain_error("block_frequency_test: block_len must be >= 1");
  const std::uint64_t n = bits.size();
  const std::uint64_t n_blocks = n / block_len;
  if (n_blocks < 1) throw domain_error("block_frequency_test: stream shorter than one block");
  double chi2 = 0.0;
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    std::uint64_t ones = 0;
    for (std::size_t i = 0; i < block_len; ++i) ones += bits.bit(b * block_len + i);
    const double pi = static_cast<double>(ones) / static_cast<double>(block_len);
    chi2 += (pi - 0.5) * (pi - 0.5);
  }
  chi2 *= 4.0 * static_cast<double>(block_len);
  const double p = igamc(static_cast<double>(n_blocks) / 2.0, chi2 / 2.0);
  return make_report("block_frequency", chi2, p, alpha);
}

test_report runs_test(const bit_stream& bits, double alpha) {
  check_alpha(alpha);
  const std::uint64_t n = bits.size();
  if (n < 2) throw domain_error("runs_test: need at least 2 bits");
  const std::uint64_t ones = count_ones(bits);
  const double pi = static_cast<double>(ones) / static_cast<double>(n);
  const double tau = 2.0 / std::sqrt(static_cast<double>(n));
  if (std::fabs(pi - 0.5) >= tau) {
    // Frequency prerequisite failed: the runs statistic is meaningless.
    return make_report("runs", 0.0, 0.0, alpha);
  }
  std::uint64_t v = 1;
  for (std::uint64_t i = 1; i < n; ++i) v += bits.bit(i) != bits.bit(i - 1);
  const double vn = static_cast<double>(v);
  const double nn = static_cast<double>(n);
  const double num = std::fabs(vn - 2.0 * nn * pi * (1.0 - pi));
  const double den = 2.0 * std::sqrt(2.0 * nn) * pi * (1.0 - pi);
  const double p = std::erfc(num / den);
  return make_report("runs", vn, p, alpha);
}

std::pair<test_report, test_report> serial_test(const bit_stream& bits, int m, double alpha) {
  check_alpha(alpha);
  if (m < 2 || m > 24) throw domain_error("serial_test: m must be in [2,24]");
  const std::uint64_t n = bits.size();
  if (n < static_cast<std::uint64_t>(m)) throw domain_error("serial_test: stream shorter than m");
  const double psi_m = psi_squared(bits, m);
  const double psi_m1 = psi_squared(bits, m - 1);
  const double psi_m2 = psi_squared(bits, m - 2);
  const double del1 = psi_m - psi_m1;             // del-psi^2
  const double del2 = psi_m - 2.0 * psi_m1 + psi_m2;  // del^2-psi^2
  const double p1 = igamc(std::ldexp(1.0, m - 2), del1 / 2.0);
  const double p2 = igamc(std::ldexp(1.0, m - 3), del2 / 2.0);
  return {make_report("serial_p1", del1, p1, alpha), make_report("serial_p2", del2, p2, alpha)};
}

test_report serial2_test(const bit_stream& bits, double alpha) {
  test_report r = serial_test(bits, 2, alpha).first;
  r.name = "serial2";
  return r;
}

std::size_t default_block_len(std::uint64_t n_bits) {
  std::size_t m = 128;
  while (static_cast<double>(m) <= 0.01 * static_cast<double>(n_bits)) m <<= 1;
  return m;
}

std::vector<test_report> battery(const bit_stream& bits, double alpha) {
  if (bits.size() < 100) throw domain_error("battery: need at least 100 bits");
  std::vector<test_report> out;
  out.push_back(monobit_test(bits, alpha));
  out.push_back(block_frequency_test(bits, default_block_len(bits.size()), alpha));
  out.push_back(runs_test(bits, alpha));
  out.push_back(serial2_test(bits, alpha));
  return out;
}

double chi_square_uniformity(const std::vector<double>& p_values, std::size_t bins) {
  if (bins < 2) throw domain_error("chi_square_uniformity: need at least 2 bins");
  if (p_values.size() < 50) throw domain_error("chi_square_uniformity: need at least 50 values");
  std::vector<std::uint64_t> counts(bins, 0);
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0))
      throw domain_error("chi_square_uniformity: P-values must lie in [0,1]");
    auto idx = static_cast<std::size_t>(p * static_cast<double>(bins));
    if (idx >= bins) idx = bins - 1;  // p == 1.0 goes to the top bin
    ++counts[idx];
  }
  const double expected = static_cast<double>(p_values.size()) / static_cast<double>(bins);
  double chi2 = 0.0;
  for (std::uint64_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  return igamc(static_cast<double>(bins - 1) / 2.0, chi2 / 2.0);
}

two_level_report two_level_evaluate(const std::vector<test_report>& reports, double alpha,
                                    std::size_t n_sequences) {
  check_alpha(alpha);
  if (reports.size() != n_sequences)
    throw domain_error("two_level_evaluate: report count != n_sequences");
  if (n_sequences < static_cast<std::size_t>(std::ceil(1.0 / alpha)))
    throw domain_error("two_level_evaluate: need at least 1/alpha sequences");
  two_level_report out;
  out.per_sequence = reports;
  std::size_t passed = 0;
  std::vector<double> ps;
  ps.reserve(reports.size());
  for (const test_report& r : reports) {
    passed += r.pass;
    ps.push_back(r.p_value);
  }
  const double n = static_cast<double>(n_sequences);
  out.pass_rate = static_cast<double>(passed) / n;
  out.pass_rate_threshold = (1.0 - alpha) - 3.0 * std::sqrt(alpha * (1.0 - alpha) / n);
  out.p_value_t = chi_square_uniformity(ps);
  out.uniform = out.p_value_t >= 0.0001;
  return out;
}

std::vector<std::pair<double, double>> bifurcation_scan(const lattice_config& config_template,
                                                        std::uint64_t seed, double mu_lo,
                                                        double mu_hi, std::size_t mu_steps,
                                                        node_index node,
                                                        std::size_t points_per_mu,
                                                        std::size_t discard) {
  if (mu_steps < 2) throw domain_error("bifurcation_scan: need at least 2 mu steps");
  if (!(mu_lo < mu_hi)) throw domain_error("bifurcation_scan: mu_lo must be < mu_hi");
  if (points_per_mu < 1) throw domain_error("bifurcation_scan: points_per_mu must be >= 1");
  std::vector<std::pair<double, double>> out;
  out.reserve(mu_steps * points_per_mu);
  for (std::size_t i = 0; i < mu_steps; ++i) {
    lattice_config cfg = config_template;
    cfg.map.mu = mu_lo + (mu_hi - mu_lo) * static_cast<double>(i) /
                             static_cast<double>(mu_steps - 1);
    lattice lat(cfg, seed);  // identical initial grid for every mu
    const std::vector<double> pts = lat.orbit(node.u, node.v, points_per_mu, discard);
    for (double v : pts) out.emplace_back(cfg.map.mu, v);
  }
  return out;
}

std::vector<std::uint64_t> orbit_histogram(const std::vector<double>& orbit, std::size_t bins) {
  if (bins < 2) throw domain_error("orbit_histogram: need at least 2 bins");
  if (orbit.empty()) throw domain_error("orbit_histogram: empty orbit");
  std::vector<std::uint64_t> counts(bins, 0);
  for (double v : orbit) {
    if (!(v >= 0.0 && v <= 1.0)) throw domain_error("orbit_histogram: values must lie in [0,1]");
    auto idx = static_cast<std::size_t>(v * static_cast<double>(bins));
    if (idx >= bins) idx = bins - 1;  // v == 1.0 closes the last bin
    ++counts[idx];
  }
  return counts;
}

}  // namespace cml
