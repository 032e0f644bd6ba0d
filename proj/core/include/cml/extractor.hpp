#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cml/bitstream.hpp"
#include "cml/lattice.hpp"

namespace cml {

// Reverse the low z bits of v (bit 0 <-> bit z-1).
std::uint64_t bit_reverse(std::uint64_t v, int z);

// ModAdd: w_i = x_i XOR y_{z+1-i}. Pairs the most-biased bits of one word with
// the least-biased bits of the other, so every output bit carries O(2^-z) bias.
std::vector<std::uint8_t> mod_add(const std::vector<std::uint8_t>& x,
                                  const std::vector<std::uint8_t>& y);
// Same on packed z-bit words (w_1 = bit z-1).
std::uint64_t mod_add_raw(std::uint64_t x, std::uint64_t y, int z);

// Parity of c independent bits; the output bias is the exact product of the
// input biases.
int xor_combine(const std::vector<std::uint8_t>& bits);

// Sample Pearson correlation of two equal-length sequences (K >= 4, nonzero
// variance). Result clamped to [-1,1].
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct fisher_result {
  double d = 0.0;  // Fisher statistic; +-inf when |k_xy| = 1
  bool pass = false;
};

// D = (sqrt(K-3)/2) * ln|(1+k)/(1-k)|; pass iff D lies strictly inside
// (Phi^-1(alpha/2), -Phi^-1(alpha/2)). |k_xy| = 1 fails without raising.
fisher_result fisher_test(double k_xy, std::uint64_t k_count, double alpha);

struct pair_options {
  int z = 64;                              // extraction precision bits
  std::uint64_t k_window = 1000;           // independence-test window K
  double alpha = 0.05;
  std::uint64_t max_windows = 16;          // gate retry budget
  std::uint64_t retest_interval_bits = 0;  // 0: gate once per stream
  node_index tap_a{}, tap_b{};
  bool round_robin_taps = false;  // all-nodes mode; excluded from the bias guarantee
};

struct pair_config {
  lattice_config a{};
  lattice_config b{};
  std::uint64_t seed_a = default_seed;
  std::uint64_t seed_b = default_seed + 1;
  // Set: instance B starts from A's seeded grid shifted by +delta (mod 1) per
  // node (seed_b ignored). Unset: B gets an independent fill from seed_b.
  std::optional<double> perturb_delta{};
  pair_options opts{};
};

// Two lattice instances plus the settings of the extraction algorithm. Emission
// is gated by the Pearson/Fisher independence test over k_window-step orbit
// windows of the tap nodes; those window iterations double as the transition
// discard. Construction verifies both maps are chaotic (le_f > 0).
class instance_pair {
 public:
  explicit instance_pair(const pair_config& config);

  // Emit n_bits. May be called repeatedly; the stream continues. Throws
  // independence_error when the gate fails max_windows times in a row.
  bit_stream extract(std::uint64_t n_bits);

  const lattice& a() const { return a_; }
  const lattice& b() const { return b_; }
  const pair_config& config() const { return config_; }
  std::uint64_t windows_used() const { return windows_used_; }
  double last_k_xy() const { return last_k_; }

 private:
  void run_gate();

  pair_config config_;
  lattice a_, b_;
  bool gated_ = false;
  std::uint64_t windows_used_ = 0;
  std::uint64_t bits_since_gate_ = 0;
  double last_k_ = 0.0;
};

// Free-function spelling of instance_pair::extract.
bit_stream extract_stream(instance_pair& pair, std::uint64_t n_bits);

}  // namespace cml
