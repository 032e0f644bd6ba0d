#include "cml/extractor.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "cml/errors.hpp"
#include "cml/local_map.hpp"
#include "cml/math_special.hpp"
#include "cml/version.hpp"

namespace cml {

std::uint64_t bit_reverse(std::uint64_t v, int z) {
  if (z < 1 || z > 64) throw domain_error("bit_reverse: z must be in [1,64]");
  v = ((v >> 1) & 0x5555555555555555ull) | ((v & 0x5555555555555555ull) << 1);
  v = ((v >> 2) & 0x3333333333333333ull) | ((v & 0x3333333333333333ull) << 2);
  v = ((v >> 4) & 0x0F0F0F0F0F0F0F0Full) | ((v & 0x0F0F0F0F0F0F0F0Full) << 4);
  v = ((v >> 8) & 0x00FF00FF00FF00FFull) | ((v & 0x00FF00FF00FF00FFull) << 8);
  v = ((v >> 16) & 0x0000FFFF0000FFFFull) | ((v & 0x0000FFFF0000FFFFull) << 16);
  v = (v >> 32) | (v << 32);
  return v >> (64 - z);
}

std::uint64_t mod_add_raw(std::uint64_t x, std::uint64_t y, int z) {
  return (x ^ bit_reverse(y, z)) & fxp::mask(z);
}

std::vector<std::uint8_t> mod_add(const std::vector<std::uint8_t>& x,
                                  const std::vector<std::uint8_t>& y) {
  if (x.size() != y.size()) throw domain_error("mod_add: length mismatch");
  if (x.empty()) throw domain_error("mod_add: empty input");
  const std::size_t z = x.size();
  std::vector<std::uint8_t> w(z);
  for (std::size_t i = 0; i < z; ++i) {
    if (x[i] > 1 || y[i] > 1) throw domain_error("mod_add: bits must be 0 or 1");
    w[i] = x[i] ^ y[z - 1 - i];  // w_i = x_i + y_{z+1-i} (mod 2)
  }
  return w;
}

int xor_combine(const std::vector<std::uint8_t>& bits) {
  if (bits.empty()) throw domain_error("xor_combine: empty input");
  int p = 0;
  for (std::uint8_t b : bits) {
    if (b > 1) throw domain_error("xor_combine: bits must be 0 or 1");
    p ^= b;
  }
  return p;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw domain_error("pearson: length mismatch");
  const std::size_t k = xs.size();
  if (k < 4) throw domain_error("pearson: need K >= 4");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw domain_error("pearson: zero-variance input");
  double r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return r;
}

fisher_result fisher_test(double k_xy, std::uint64_t k_count, double alpha) {
  if (k_count < 4) throw domain_error("fisher_test: need K >= 4");
  if (!(alpha > 0.0 && alpha < 1.0)) throw domain_error("fisher_test: alpha must be in (0,1)");
  if (std::fabs(k_xy) >= 1.0)
    return {k_xy >= 1.0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity(),
            false};
  const double d = std::sqrt(static_cast<double>(k_count - 3)) / 2.0 *
                   std::log((1.0 + k_xy) / (1.0 - k_xy));
  const double lo = norm_inv(alpha / 2.0);  // negative bound; upper bound is -lo
  return {d, d > lo && d < -lo};
}

namespace {

const char* map_name(map_kind k) {
  switch (k) {
    case map_kind::logistic: return "logistic";
    case map_kind::tent: return "tent";
    case map_kind::plm: return "plm";
  }
  return "?";
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_tap(const lattice_config& c, node_index tap, const char* which) {
  if (tap.u < 1 || tap.u > c.rows || tap.v < 1 || tap.v > c.cols)
    throw domain_error(std::string("instance_pair: tap node out of range for instance ") + which);
}

void check_precision(const lattice_config& c, int z, const char* which) {
  if (z < 1 || z > 64) throw domain_error("instance_pair: z must be in [1,64]");
  if (c.arithmetic == arithmetic_kind::fixed && z > c.z)
    throw domain_error(std::string("instance_pair: z exceeds instance ") + which +
                       "'s fixed-point precision");
  if (c.arithmetic == arithmetic_kind::float64 && z > 52)
    throw domain_error(std::string("instance_pair: z exceeds Float64 precision for instance ") +
                       which);
}

void check_chaotic(const local_map& map, const char* which) {
  double le = 0.0;
  try {
    le = local_le(map, 0.38742918951398721, 10000, 1000);
  } catch (const degenerate_orbit_error&) {
    throw domain_error(std::string("instance_pair: instance ") + which +
                       "'s map is not chaotic (orbit collapses)");
  }
  if (!(le > 0.0))
    throw domain_error(std::string("instance_pair: instance ") + which +
                       "'s map is not chaotic (le_f <= 0)");
}

}  // namespace

instance_pair::instance_pair(const pair_config& config)
    : config_(config),
      a_(config.a, config.seed_a),
      b_(config.perturb_delta ? lattice::perturbed(config.b, config.seed_a, *config.perturb_delta)
                              : lattice(config.b, config.seed_b)) {
  const pair_options& o = config_.opts;
  if (o.k_window < 4) throw domain_error("instance_pair: k_window must be >= 4");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw domain_error("instance_pair: alpha must be in (0,1)");
  if (o.max_windows < 1) throw domain_error("instance_pair: max_windows must be >= 1");
  check_tap(config_.a, o.tap_a, "a");
  check_tap(config_.b, o.tap_b, "b");
  check_precision(config_.a, o.z, "a");
  check_precision(config_.b, o.z, "b");
  if (config_.perturb_delta &&
      (config_.a.rows != config_.b.rows || config_.a.cols != config_.b.cols ||
       config_.a.arithmetic != config_.b.arithmetic || config_.a.z != config_.b.z))
    throw domain_error("instance_pair: perturbed instance must share A's geometry and arithmetic");
  check_chaotic(config_.a.map, "a");
  if (config_.b.map.kind != config_.a.map.kind || config_.b.map.mu != config_.a.map.mu ||
      (config_.b.map.kind == map_kind::plm && config_.b.map.segments != config_.a.map.segments))
    check_chaotic(config_.b.map, "b");
}

void instance_pair::run_gate() {
  const pair_options& o = config_.opts;
  std::vector<double> xs, ys;
  xs.reserve(o.k_window);
  ys.reserve(o.k_window);
  for (std::uint64_t w = 0; w < o.max_windows; ++w) {
    xs.clear();
    ys.clear();
    for (std::uint64_t i = 0; i < o.k_window; ++i) {
      a_.step();
      b_.step();
      xs.push_back(a_.value_at(o.tap_a.u, o.tap_a.v));
      ys.push_back(b_.value_at(o.tap_b.u, o.tap_b.v));
    }
    ++windows_used_;
    bool ok = false;
    try {
      last_k_ = pearson(xs, ys);
      ok = fisher_test(last_k_, o.k_window, o.alpha).pass;
    } catch (const domain_error&) {
      last_k_ = 1.0;  // zero-variance window: treat as maximally correlated
    }
    if (ok) {
      gated_ = true;
      bits_since_gate_ = 0;
      return;
    }
  }
  throw independence_error("extract: independence test failed in every window (" +
                           std::to_string(o.max_windows) + " tried)");
}

bit_stream instance_pair::extract(std::uint64_t n_bits) {
  const pair_options& o = config_.opts;
  bit_stream out;
  const std::uint64_t windows_before = windows_used_;
  std::uint64_t emitted = 0;
  while (emitted < n_bits) {
    if (!gated_ ||
        (o.retest_interval_bits > 0 && bits_since_gate_ >= o.retest_interval_bits)) {
      gated_ = false;
      run_gate();
    }
    a_.step();
    b_.step();
    if (o.round_robin_taps) {
      for (std::size_t u = 1; u <= config_.a.rows && emitted < n_bits; ++u) {
        for (std::size_t v = 1; v <= config_.a.cols && emitted < n_bits; ++v) {
          const std::uint64_t xa = a_.quantized_at(u, v, o.z).raw;
          const std::uint64_t yb = b_.quantized_at(u, v, o.z).raw;
          const std::uint64_t take =
              std::min<std::uint64_t>(static_cast<std::uint64_t>(o.z), n_bits - emitted);
          out.append_block(mod_add_raw(xa, yb, o.z), o.z, take);
          emitted += take;
          bits_since_gate_ += take;
        }
      }
    } else {
      const std::uint64_t xa = a_.quantized_at(o.tap_a.u, o.tap_a.v, o.z).raw;
      const std::uint64_t yb = b_.quantized_at(o.tap_b.u, o.tap_b.v, o.z).raw;
      const std::uint64_t take =
          std::min<std::uint64_t>(static_cast<std::uint64_t>(o.z), n_bits - emitted);
      out.append_block(mod_add_raw(xa, yb, o.z), o.z, take);
      emitted += take;
      bits_since_gate_ += take;
    }
  }

  stream_origin& og = out.origin;
  og.set("version", version);
  og.set("map_a", map_name(config_.a.map.kind));
  og.set("mu_a", fmt_double(config_.a.map.mu));
  if (config_.a.map.kind == map_kind::plm)
    og.set("segments_a", std::to_string(config_.a.map.segments));
  og.set("map_b", map_name(config_.b.map.kind));
  og.set("mu_b", fmt_double(config_.b.map.mu));
  if (config_.b.map.kind == map_kind::plm)
    og.set("segments_b", std::to_string(config_.b.map.segments));
  og.set("rows", std::to_string(config_.a.rows));
  og.set("cols", std::to_string(config_.a.cols));
  og.set("epsilon_a", fmt_double(config_.a.epsilon));
  og.set("epsilon_b", fmt_double(config_.b.epsilon));
  og.set("arithmetic_a", config_.a.arithmetic == arithmetic_kind::fixed ? "fixed" : "float64");
  og.set("arithmetic_b", config_.b.arithmetic == arithmetic_kind::fixed ? "fixed" : "float64");
  if (config_.a.arithmetic == arithmetic_kind::fixed)
    og.set("z_lattice_a", std::to_string(config_.a.z));
  if (config_.b.arithmetic == arithmetic_kind::fixed)
    og.set("z_lattice_b", std::to_string(config_.b.z));
  og.set("seed_a", std::to_string(config_.seed_a));
  if (config_.perturb_delta)
    og.set("perturb_delta", fmt_double(*config_.perturb_delta));
  else
    og.set("seed_b", std::to_string(config_.seed_b));
  if (o.round_robin_taps) {
    og.set("taps", "round_robin");
  } else {
    og.set("tap_a", std::to_string(o.tap_a.u) + "," + std::to_string(o.tap_a.v));
    og.set("tap_b", std::to_string(o.tap_b.u) + "," + std::to_string(o.tap_b.v));
  }
  og.set("z", std::to_string(o.z));
  og.set("k_window", std::to_string(o.k_window));
  og.set("alpha", fmt_double(o.alpha));
  og.set("windows_used", std::to_string(windows_used_ - windows_before));
  og.set("discard_steps", std::to_string((windows_used_ - windows_before) * o.k_window));
  og.set("n_bits", std::to_string(n_bits));
  return out;
}

bit_stream extract_stream(instance_pair& pair, std::uint64_t n_bits) {
  return pair.extract(n_bits);
}

}  // namespace cml
