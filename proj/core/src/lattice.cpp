#include "cml/lattice.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "cml/errors.hpp"
#include "map_detail.hpp"

namespace cml {

void lattice_config::validate() const {
  if (rows < 1 || cols < 1) throw domain_error("lattice: rows and cols must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("lattice: epsilon must be in (0,1)");
  map.validate();
  if (arithmetic == arithmetic_kind::fixed && (z < 1 || z > 64))
    throw domain_error("lattice: fixed-point z must be in [1,64]");
}

lattice::lattice(const lattice_config& config) : config_(config) {
  config_.validate();
  build_tables();
}

void lattice::build_tables() {
  const std::size_t R = config_.rows, L = config_.cols, n = R * L;
  nb_.resize(4 * n);
  for (std::size_t u = 0; u < R; ++u) {
    for (std::size_t v = 0; v < L; ++v) {
      const std::size_t p = u * L + v;
      nb_[4 * p + 0] = static_cast<std::uint32_t>(((u + R - 1) % R) * L + v);
      nb_[4 * p + 1] = static_cast<std::uint32_t>(((u + 1) % R) * L + v);
      nb_[4 * p + 2] = static_cast<std::uint32_t>(u * L + (v + L - 1) % L);
      nb_[4 * p + 3] = static_cast<std::uint32_t>(u * L + (v + 1) % L);
    }
  }
  if (config_.arithmetic == arithmetic_kind::float64) {
    cur_f_.resize(n);
    nxt_f_.resize(n);
    fv_f_.resize(n);
    return;
  }
  cur_q_.resize(n);
  nxt_q_.resize(n);
  fv_q_.resize(n);
  const int z = config_.z;
  maskz_ = fxp::mask(z);
  half_ = std::uint64_t{1} << (z - 1);
  w_self_ = quantize(1.0 - config_.epsilon, z).raw;
  w_nb_ = quantize(config_.epsilon / 4.0, z).raw;
  const double c = config_.map.kind == map_kind::tent ? config_.map.mu / 2.0 : config_.map.mu / 4.0;
  c_is_one_ = (c == 1.0);
  c_raw_ = c_is_one_ ? 0 : quantize(c, z).raw;
}

lattice::lattice(const lattice_config& config, const std::vector<double>& values)
    : lattice(config) {
  const std::size_t n = config_.rows * config_.cols;
  if (values.size() != n) throw domain_error("lattice: expected rows*cols initial values");
  for (double v : values)
    if (!(v > 0.0 && v < 1.0)) throw domain_error("lattice: initial values must be in (0,1)");
  if (config_.arithmetic == arithmetic_kind::float64) {
    cur_f_ = values;
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t raw = quantize(values[i], config_.z).raw;
    cur_q_[i] = raw == 0 ? 1 : raw;
  }
}

lattice::lattice(const lattice_config& config, std::uint64_t seed) : lattice(config) {
  const std::size_t n = config_.rows * config_.cols;
  splitmix64 sm(seed);
  if (config_.arithmetic == arithmetic_kind::float64) {
    for (std::size_t i = 0; i < n; ++i) {
      double x = u01(sm.next());
      if (x < detail::float_min_state) x = detail::float_min_state;
      if (x > detail::float_max_state) x = detail::float_max_state;
      cur_f_[i] = x;
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t raw = sm.next() >> (64 - config_.z);
    cur_q_[i] = raw == 0 ? 1 : raw;
  }
}

lattice lattice::perturbed(const lattice_config& config, std::uint64_t seed, double delta) {
  if (!std::isfinite(delta)) throw domain_error("lattice: perturbation delta must be finite");
  lattice lat(config, seed);
  const std::size_t n = config.rows * config.cols;
  double frac = delta - std::floor(delta);  // delta mod 1 in [0,1)
  if (lat.config_.arithmetic == arithmetic_kind::float64) {
    for (std::size_t i = 0; i < n; ++i) {
      double x = lat.cur_f_[i] + frac;
      if (x >= 1.0) x -= 1.0;
      if (x < detail::float_min_state) x = detail::float_min_state;
      if (x > detail::float_max_state) x = detail::float_max_state;
      lat.cur_f_[i] = x;
    }
    return lat;
  }
  const std::uint64_t dq = quantize(frac, config.z).raw;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t raw = (lat.cur_q_[i] + dq) & lat.maskz_;
    lat.cur_q_[i] = raw == 0 ? 1 : raw;
  }
  return lat;
}

namespace {

template <map_kind MK>
inline double eval_float(double mu, int n_seg, double x) {
  if constexpr (MK == map_kind::logistic) {
    return detail::eval_logistic(mu, x);
  } else if constexpr (MK == map_kind::tent) {
    return detail::eval_tent(mu, x);
  } else {
    return detail::eval_plm(mu, n_seg, x);
  }
}

// 4*t for t = x(1-x) in Q0.z: t <= 2^(z-2) with equality only at x = 1/2;
// saturate that exact-1.0 case to 1 - 2^-z.
inline std::uint64_t sat4(std::uint64_t t, int z, std::uint64_t maskz) {
  if (z >= 2 && t == (std::uint64_t{1} << (z - 2))) return maskz;
  return t << 2;
}

}  // namespace

template <map_kind MK>
std::uint64_t lattice::eval_fixed(std::uint64_t x) const {
  const int z = config_.z;
  if constexpr (MK == map_kind::logistic) {
    std::uint64_t t = fxp::mul(x, fxp::one_minus(x, z), z);
    std::uint64_t f = sat4(t, z, maskz_);
    return c_is_one_ ? f : fxp::mul(c_raw_, f, z);
  } else if constexpr (MK == map_kind::tent) {
    std::uint64_t g;
    if (x < half_) {
      g = x << 1;
    } else {
      std::uint64_t om = fxp::one_minus(x, z);  // <= 2^(z-1)
      g = om == half_ ? maskz_ : (om << 1);
    }
    return c_is_one_ ? g : fxp::mul(c_raw_, g, z);
  } else {
    const auto n_seg = static_cast<std::uint64_t>(config_.map.segments);
    auto q = static_cast<unsigned __int128>(x) * n_seg;
    auto i0 = static_cast<std::uint64_t>(q >> z);
    std::uint64_t fr = static_cast<std::uint64_t>(q) & maskz_;
    if (fr == 0) {  // boundary: nudge one ulp (2^-z) up, reselect
      q = static_cast<unsigned __int128>(x + 1) * n_seg;
      i0 = static_cast<std::uint64_t>(q >> z);
      fr = static_cast<std::uint64_t>(q) & maskz_;
    }
    std::uint64_t t = fxp::mul(fr, fxp::one_minus(fr, z), z);
    std::uint64_t f = sat4(t, z, maskz_);
    std::uint64_t bump = c_is_one_ ? f : fxp::mul(c_raw_, f, z);
    if ((i0 & 1) == 0) return bump;  // odd segment s = i0+1
    return bump == 0 ? maskz_ : fxp::one_minus(bump, z);
  }
}

template <map_kind MK>
void lattice::step_float_impl() {
  const double mu = config_.map.mu;
  const int n_seg = config_.map.segments;
  const double w0 = 1.0 - config_.epsilon, w1 = config_.epsilon * 0.25;
  const std::size_t n = cur_f_.size();
  for (std::size_t i = 0; i < n; ++i) fv_f_[i] = eval_float<MK>(mu, n_seg, cur_f_[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t* nb = &nb_[4 * i];
    // Pairwise neighbor sum: keeps a uniform grid's update exact (2F+2F = 4F).
    double x = w0 * fv_f_[i] +
               w1 * ((fv_f_[nb[0]] + fv_f_[nb[1]]) + (fv_f_[nb[2]] + fv_f_[nb[3]]));
    if (x <= 0.0)
      x = detail::float_min_state;
    else if (x >= 1.0)
      x = detail::float_max_state;
    nxt_f_[i] = x;
  }
  cur_f_.swap(nxt_f_);
}

template <map_kind MK>
void lattice::step_fixed_impl() {
  const int z = config_.z;
  const std::size_t n = cur_q_.size();
  for (std::size_t i = 0; i < n; ++i) fv_q_[i] = eval_fixed<MK>(cur_q_[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t* nb = &nb_[4 * i];
    // w_self + 4*w_nb <= 2^z and every F < 2^z, so acc < 2^(2z) fits 128 bits.
    unsigned __int128 acc = static_cast<unsigned __int128>(w_self_) * fv_q_[i] +
                            static_cast<unsigned __int128>(w_nb_) *
                                (static_cast<unsigned __int128>(fv_q_[nb[0]]) + fv_q_[nb[1]] +
                                 fv_q_[nb[2]] + fv_q_[nb[3]]);
    auto x = static_cast<std::uint64_t>(acc >> z);
    nxt_q_[i] = x == 0 ? 1 : x;
  }
  cur_q_.swap(nxt_q_);
}

void lattice::step() {
  if (config_.arithmetic == arithmetic_kind::float64) {
    switch (config_.map.kind) {
      case map_kind::logistic: step_float_impl<map_kind::logistic>(); break;
      case map_kind::tent: step_float_impl<map_kind::tent>(); break;
      case map_kind::plm: step_float_impl<map_kind::plm>(); break;
    }
  } else {
    switch (config_.map.kind) {
      case map_kind::logistic: step_fixed_impl<map_kind::logistic>(); break;
      case map_kind::tent: step_fixed_impl<map_kind::tent>(); break;
      case map_kind::plm: step_fixed_impl<map_kind::plm>(); break;
    }
  }
  ++time_;
}

std::size_t lattice::index_checked(std::size_t u, std::size_t v) const {
  if (u < 1 || u > config_.rows || v < 1 || v > config_.cols)
    throw domain_error("lattice: node index out of range");
  return (u - 1) * config_.cols + (v - 1);
}

std::vector<double> lattice::orbit(std::size_t u, std::size_t v, std::uint64_t n_points,
                                   std::uint64_t n_discard) {
  const std::size_t p = index_checked(u, v);
  for (std::uint64_t i = 0; i < n_discard; ++i) step();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_points));
  for (std::uint64_t i = 0; i < n_points; ++i) {
    step();
    out.push_back(config_.arithmetic == arithmetic_kind::float64
                      ? cur_f_[p]
                      : to_double({cur_q_[p], config_.z}));
  }
  return out;
}

double lattice::value_at(std::size_t u, std::size_t v) const {
  const std::size_t p = index_checked(u, v);
  return config_.arithmetic == arithmetic_kind::float64 ? cur_f_[p]
                                                        : to_double({cur_q_[p], config_.z});
}

fixed_value lattice::quantized_at(std::size_t u, std::size_t v, int z_out) const {
  const std::size_t p = index_checked(u, v);
  if (z_out < 1 || z_out > 64) throw domain_error("quantized_at: z must be in [1,64]");
  if (config_.arithmetic == arithmetic_kind::fixed) {
    if (z_out > config_.z)
      throw domain_error("quantized_at: z exceeds the lattice fixed-point precision");
    return {cur_q_[p] >> (config_.z - z_out), z_out};
  }
  if (z_out > 52) throw domain_error("quantized_at: z exceeds Float64 precision (52)");
  return quantize(cur_f_[p], z_out);
}

std::vector<double> lattice::grid() const {
  const std::size_t n = config_.rows * config_.cols;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = config_.arithmetic == arithmetic_kind::float64 ? cur_f_[i]
                                                            : to_double({cur_q_[i], config_.z});
  return out;
}

std::string to_csv(const lattice& lat) {
  std::ostringstream os;
  os.precision(17);
  os << "u,v,value\n";
  const auto g = lat.grid();
  const std::size_t L = lat.config().cols;
  for (std::size_t i = 0; i < g.size(); ++i)
    os << (i / L + 1) << ',' << (i % L + 1) << ',' << g[i] << '\n';
  return os.str();
}

}  // namespace cml
