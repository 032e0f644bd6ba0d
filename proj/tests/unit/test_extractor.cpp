#include <algorithm>
#include <cmath>
#include <string>
#include <vector>
#include <doctest.h>

#include <cml/errors.hpp>
#include <cml/extractor.hpp>
#include <cml/stats.hpp>

#include "support.hpp"

using namespace cml;

namespace {

lattice_config fixed_lattice(int z = 64) {
  lattice_config c;
  c.rows = 8;
  c.cols = 8;
  c.epsilon = 0.1;
  c.map = {map_kind::logistic, 4.0};
  c.arithmetic = arithmetic_kind::fixed;
  c.z = z;
  return c;
}

pair_config independent_pair(int z = 64) {
  pair_config pc;
  pc.a = pc.b = fixed_lattice(z);
  pc.opts.z = z;
  return pc;
}

std::vector<std::uint8_t> word_bits(std::uint64_t w, int z) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(z));
  for (int i = 0; i < z; ++i) v[static_cast<std::size_t>(i)] = (w >> (z - 1 - i)) & 1u;
  return v;
}

std::string origin_get(const stream_origin& o, const std::string& key) {
  for (const auto& [k, v] : o.fields)
    if (k == key) return v;
  return "<missing:" + key + ">";
}

// Exact output bias (|2 P(parity=1) - 1|) of XORing independent bits with the
// given per-bit probabilities of being 1, by full enumeration.
double enumerated_xor_bias(const std::vector<double>& p1) {
  const std::size_t c = p1.size();
  double odd = 0.0;
  for (std::size_t m = 0; m < (std::size_t{1} << c); ++m) {
    double w = 1.0;
    std::vector<std::uint8_t> bits(c);
    for (std::size_t i = 0; i < c; ++i) {
      bits[i] = static_cast<std::uint8_t>((m >> i) & 1);
      w *= bits[i] ? p1[i] : 1.0 - p1[i];
    }
    if (xor_combine(bits)) odd += w;
  }
  return std::fabs(2.0 * odd - 1.0);
}

}  // namespace

TEST_CASE("bit_reverse: pinned values and involution") {
  CHECK(bit_reverse(0b1, 1) == 0b1);
  CHECK(bit_reverse(0b01, 2) == 0b10);
  CHECK(bit_reverse(0b1101, 4) == 0b1011);
  CHECK(bit_reverse(1, 64) == 0x8000000000000000ull);
  CHECK(bit_reverse(0, 17) == 0);
  ts::rng r(0x1357246813572468ull);
  for (int trial = 0; trial < 200; ++trial) {
    const int z = 1 + static_cast<int>(r.below(64));
    const std::uint64_t v = r.u64() & fxp::mask(z);
    CHECK(bit_reverse(bit_reverse(v, z), z) == v);
  }
  CHECK_THROWS_AS((void)bit_reverse(1, 0), domain_error);
  CHECK_THROWS_AS((void)bit_reverse(1, 65), domain_error);
}

TEST_CASE("mod_add: pinned vectors") {
  using bits = std::vector<std::uint8_t>;
  CHECK(mod_add(bits{1, 0, 1}, bits{0, 0, 0}) == bits{1, 0, 1});
  CHECK(mod_add(bits{1, 0, 1}, bits{1, 0, 1}) == bits{0, 0, 0});
  CHECK(mod_add(bits{1, 0, 1}, bits{1, 1, 0}) == bits{1, 1, 0});
  CHECK(mod_add(bits{1}, bits{1}) == bits{0});
  CHECK_THROWS_AS((void)mod_add(bits{1, 0}, bits{1}), domain_error);
  CHECK_THROWS_AS((void)mod_add(bits{}, bits{}), domain_error);
  CHECK_THROWS_AS((void)mod_add(bits{2, 0}, bits{0, 0}), domain_error);
}

TEST_CASE("mod_add: applying the same y twice is the identity") {
  ts::rng r(0x9292929292929292ull);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t z = 1 + r.below(24);
    std::vector<std::uint8_t> x(z), y(z);
    for (auto& b : x) b = static_cast<std::uint8_t>(r.u64() & 1);
    for (auto& b : y) b = static_cast<std::uint8_t>(r.u64() & 1);
    CHECK(mod_add(mod_add(x, y), y) == x);
  }
}

TEST_CASE("mod_add_raw agrees with the bit-vector form") {
  ts::rng r(0x6464646464646464ull);
  for (int trial = 0; trial < 300; ++trial) {
    const int z = 1 + static_cast<int>(r.below(64));
    const std::uint64_t x = r.u64() & fxp::mask(z);
    const std::uint64_t y = r.u64() & fxp::mask(z);
    CHECK(word_bits(mod_add_raw(x, y, z), z) == mod_add(word_bits(x, z), word_bits(y, z)));
  }
}

TEST_CASE("xor_combine: parity and exact bias product") {
  CHECK(xor_combine({1}) == 1);
  CHECK(xor_combine({0}) == 0);
  CHECK(xor_combine({1, 1, 0}) == 0);
  CHECK(xor_combine({1, 1, 1}) == 1);
  CHECK_THROWS_AS((void)xor_combine({}), domain_error);
  CHECK_THROWS_AS((void)xor_combine({0, 2}), domain_error);

  // Piling-up identity: output bias = product of per-bit biases |2p-1|.
  CHECK(std::fabs(enumerated_xor_bias({0.6, 0.7}) - 0.2 * 0.4) <= 1e-15);
  CHECK(std::fabs(enumerated_xor_bias({0.75, 0.75, 0.75}) - 0.125) <= 1e-15);
  ts::rng r(0x7070707070707070ull);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p = {r.open01(), r.open01(), r.open01()};
    double want = 1.0;
    for (double v : p) want *= std::fabs(2.0 * v - 1.0);
    CHECK(std::fabs(enumerated_xor_bias(p) - want) <= 1e-12);
  }
}

TEST_CASE("pearson: pinned value, clamps, and domain") {
  const std::vector<double> xs = {1, 2, 3, 4}, ys = {1, 2, 3, 5};
  CHECK(pearson(xs, ys) == doctest::Approx(0.982707629823991).epsilon(1e-12));
  CHECK(pearson(xs, xs) == 1.0);
  const std::vector<double> neg = {5, 4, 3, 2};
  CHECK(pearson(xs, neg) == -1.0);
  CHECK_THROWS_AS((void)pearson({1, 2, 3}, {1, 2, 3}), domain_error);
  CHECK_THROWS_AS((void)pearson(xs, {1, 2, 3}), domain_error);
  CHECK_THROWS_AS((void)pearson({2, 2, 2, 2}, xs), domain_error);
}

TEST_CASE("fisher_test: pinned statistics and decisions") {
  auto zero = fisher_test(0.0, 103, 0.05);
  CHECK(zero.d == 0.0);
  CHECK(zero.pass);
  auto hot = fisher_test(0.2, 103, 0.05);  // D = 5*ln(1.5)
  CHECK(hot.d == doctest::Approx(2.0273255405408219).epsilon(1e-12));
  CHECK(!hot.pass);
  auto cold = fisher_test(0.01, 103, 0.05);
  CHECK(cold.d == doctest::Approx(0.10000333353334763).epsilon(1e-12));
  CHECK(cold.pass);
  auto negd = fisher_test(-0.2, 103, 0.05);
  CHECK(negd.d == doctest::Approx(-2.0273255405408219).epsilon(1e-12));
  CHECK(!negd.pass);
  // Wider alpha widens the acceptance band.
  CHECK(fisher_test(0.2, 103, 0.001).pass);
  // Perfect correlation fails without raising.
  auto one = fisher_test(1.0, 100, 0.05);
  CHECK(std::isinf(one.d));
  CHECK(one.d > 0);
  CHECK(!one.pass);
  CHECK(fisher_test(-1.0, 100, 0.05).d < 0);
  CHECK_THROWS_AS((void)fisher_test(0.1, 3, 0.05), domain_error);
  CHECK_THROWS_AS((void)fisher_test(0.1, 100, 0.0), domain_error);
  CHECK_THROWS_AS((void)fisher_test(0.1, 100, 1.0), domain_error);
}

TEST_CASE("instance_pair: constructor validation") {
  auto pc = independent_pair();
  pc.opts.alpha = 0.0;
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);
  pc = independent_pair();
  pc.opts.k_window = 3;
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);
  pc = independent_pair();
  pc.opts.max_windows = 0;
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);
  pc = independent_pair();
  pc.opts.tap_a = {9, 1};
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);
  pc = independent_pair();
  pc.opts.tap_b = {1, 9};
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);

  pc = independent_pair();  // z beyond the lattice's fixed precision
  pc.a.z = pc.b.z = 32;
  pc.opts.z = 33;
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);

  pc = independent_pair();  // z beyond Float64 precision
  pc.a.arithmetic = pc.b.arithmetic = arithmetic_kind::float64;
  pc.opts.z = 53;
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);

  pc = independent_pair();  // perturbed companion must share geometry
  pc.perturb_delta = 1e-3;
  pc.b.rows = 4;
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);

  pc = independent_pair();  // non-chaotic maps are rejected up front
  pc.a.map.mu = 2.0;
  pc.b.map.mu = 2.0;
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);
  pc = independent_pair();
  pc.a.map = pc.b.map = {map_kind::tent, 1.0};  // le_f = 0 exactly
  CHECK_THROWS_AS(instance_pair{pc}, domain_error);
}

TEST_CASE("instance_pair: identical instances never pass the gate") {
  auto pc = independent_pair(16);
  pc.seed_b = pc.seed_a;  // same seed, same config: k_xy = 1 in every window
  pc.opts.k_window = 50;
  pc.opts.max_windows = 3;
  instance_pair pair(pc);
  CHECK_THROWS_AS((void)pair.extract(8), independence_error);
  CHECK(pair.windows_used() == 3);
  CHECK(pair.last_k_xy() >= 1.0 - 1e-12);
}

TEST_CASE("instance_pair: independent seeds gate and extract") {
  auto pc = independent_pair();
  instance_pair pair(pc);
  auto bs = pair.extract(4096);
  CHECK(bs.size() == 4096);
  CHECK(pair.windows_used() >= 1);
  CHECK(std::fabs(pair.last_k_xy()) < 1.0);
  CHECK(bit_bias(bs) < 0.1);
  // Determinism: a second pair with the same config emits the same stream.
  instance_pair again(pc);
  CHECK(again.extract(4096).to_ascii() == bs.to_ascii());
}

TEST_CASE("instance_pair: extraction matches a manual replication of the algorithm") {
  pair_config pc = independent_pair(16);
  pc.a.z = pc.b.z = 16;
  pc.seed_a = 1234;
  pc.seed_b = 5678;
  pc.opts.k_window = 50;
  pc.opts.tap_a = {2, 3};
  pc.opts.tap_b = {5, 1};

  // Replay the gate + emission by hand on two bare lattices.
  lattice la(pc.a, pc.seed_a), lb(pc.b, pc.seed_b);
  bool gated = false;
  std::uint64_t windows = 0;
  std::vector<double> xs, ys;
  while (!gated) {
    REQUIRE(windows < pc.opts.max_windows);
    xs.clear();
    ys.clear();
    for (std::uint64_t i = 0; i < pc.opts.k_window; ++i) {
      la.step();
      lb.step();
      xs.push_back(la.value_at(2, 3));
      ys.push_back(lb.value_at(5, 1));
    }
    ++windows;
    gated = fisher_test(pearson(xs, ys), pc.opts.k_window, pc.opts.alpha).pass;
  }
  bit_stream want;
  std::uint64_t remaining = 333;
  while (remaining > 0) {
    la.step();
    lb.step();
    const std::uint64_t w =
        mod_add_raw(la.quantized_at(2, 3, 16).raw, lb.quantized_at(5, 1, 16).raw, 16);
    const std::uint64_t take = std::min<std::uint64_t>(16, remaining);
    want.append_block(w, 16, take);
    remaining -= take;
  }

  instance_pair pair(pc);
  auto got = pair.extract(333);
  CHECK(got.to_ascii() == want.to_ascii());
  CHECK(pair.windows_used() == windows);

  CHECK(origin_get(got.origin, "map_a") == "logistic");
  CHECK(origin_get(got.origin, "mu_a") == "4");
  CHECK(origin_get(got.origin, "rows") == "8");
  CHECK(origin_get(got.origin, "cols") == "8");
  CHECK(origin_get(got.origin, "arithmetic_a") == "fixed");
  CHECK(origin_get(got.origin, "z_lattice_a") == "16");
  CHECK(origin_get(got.origin, "seed_a") == "1234");
  CHECK(origin_get(got.origin, "seed_b") == "5678");
  CHECK(origin_get(got.origin, "tap_a") == "2,3");
  CHECK(origin_get(got.origin, "tap_b") == "5,1");
  CHECK(origin_get(got.origin, "z") == "16");
  CHECK(origin_get(got.origin, "k_window") == "50");
  CHECK(origin_get(got.origin, "windows_used") == std::to_string(windows));
  CHECK(origin_get(got.origin, "discard_steps") == std::to_string(windows * 50));
  CHECK(origin_get(got.origin, "n_bits") == "333");
}

TEST_CASE("instance_pair: stream continues across extract calls") {
  auto pc = independent_pair(20);
  pc.a.z = pc.b.z = 20;
  instance_pair whole(pc), split(pc);
  const std::string all = whole.extract(200).to_ascii();
  const std::string first = split.extract(100).to_ascii();
  const std::string second = split.extract(100).to_ascii();
  CHECK(all == first + second);  // 100 is z-aligned, so the halves concatenate
  CHECK(first != second);
}

TEST_CASE("instance_pair: retest interval re-runs the gate") {
  auto pc = independent_pair(16);
  pc.a.z = pc.b.z = 16;
  instance_pair once(pc);
  (void)once.extract(200);
  const std::uint64_t base = once.windows_used();

  pc.opts.retest_interval_bits = 64;
  instance_pair retest(pc);
  (void)retest.extract(200);
  CHECK(retest.windows_used() >= base + 3);  // extra gates at 64, 128, 192 bits
}

TEST_CASE("instance_pair: perturbed companion, stream quality") {
  auto pc = independent_pair();
  pc.perturb_delta = 1e-3;
  instance_pair pair(pc);
  auto bs = pair.extract(1000000);
  CHECK(bs.size() == 1000000);
  CHECK(origin_get(bs.origin, "perturb_delta") == "0.001");
  CHECK(origin_get(bs.origin, "seed_b") == "<missing:seed_b>");
  CHECK(bit_bias(bs) < 0.003);
  for (const auto& rep : battery(bs, 0.01)) {
    CAPTURE(rep.name);
    CHECK(rep.pass);
  }
}

TEST_CASE("instance_pair: round-robin taps") {
  auto pc = independent_pair(32);
  pc.a.rows = pc.a.cols = pc.b.rows = pc.b.cols = 2;
  pc.opts.z = 8;  // 32 bits per sweep: 100 bits span four grid sweeps
  pc.opts.round_robin_taps = true;
  instance_pair pair(pc);
  auto bs = pair.extract(100);
  CHECK(bs.size() == 100);
  CHECK(origin_get(bs.origin, "taps") == "round_robin");
  CHECK(origin_get(bs.origin, "tap_a") == "<missing:tap_a>");
  instance_pair again(pc);
  CHECK(again.extract(100).to_ascii() == bs.to_ascii());
}

TEST_CASE("extract_stream free function forwards to the member") {
  auto pc = independent_pair(16);
  pc.a.z = pc.b.z = 16;
  instance_pair p1(pc), p2(pc);
  CHECK(extract_stream(p1, 160).to_ascii() == p2.extract(160).to_ascii());
}
