#include "cml/local_map.hpp"

#include <cmath>
#include <string>

#include "cml/errors.hpp"
#include "map_detail.hpp"

namespace cml {

void local_map::validate() const {
  switch (kind) {
    case map_kind::logistic:
      if (!(mu > 0.0 && mu <= 4.0)) throw domain_error("logistic: mu must be in (0,4]");
      return;
    case map_kind::tent:
      if (!(mu > 0.0 && mu <= 2.0)) throw domain_error("tent: mu must be in (0,2]");
      return;
    case map_kind::plm:
      if (!(mu > 0.0 && mu <= 4.0)) throw domain_error("plm: mu must be in (0,4]");
      if (segments < 2) throw domain_error("plm: segments must be >= 2");
      return;
  }
  throw domain_error("unknown map kind");
}

namespace {

void check_x(double x) {
  if (!(x > 0.0 && x < 1.0))
    throw domain_error("map input x must be in (0,1), got " + std::to_string(x));
}

}  // namespace

double eval(const local_map& map, double x) {
  map.validate();
  check_x(x);
  switch (map.kind) {
    case map_kind::logistic:
      return detail::eval_logistic(map.mu, x);
    case map_kind::tent:
      return detail::eval_tent(map.mu, x);
    case map_kind::plm:
      return detail::eval_plm(map.mu, map.segments, x);
  }
  throw domain_error("unknown map kind");
}

double derivative(const local_map& map, double x) {
  map.validate();
  check_x(x);
  switch (map.kind) {
    case map_kind::logistic:
      return map.mu * (1.0 - 2.0 * x);
    case map_kind::tent:
      if (x == 0.5) throw domain_error("tent: derivative undefined at x = 0.5");
      return x < 0.5 ? map.mu : -map.mu;
    case map_kind::plm: {
      double xn = x * map.segments;
      if (xn == std::floor(xn))
        throw domain_error("plm: derivative undefined at a segment boundary");
      auto [s, xi] = detail::plm_locate(x, map.segments);
      double slope = map.mu * map.segments * (1.0 - 2.0 * xi);
      return (s % 2 == 1) ? slope : -slope;
    }
  }
  throw domain_error("unknown map kind");
}

double local_le(const local_map& map, double x0, std::uint64_t n_iter, std::uint64_t n_discard) {
  map.validate();
  check_x(x0);
  if (n_iter < 10000) throw domain_error("local_le: n_iter must be >= 10^4");

  auto advance = [&map](double v) {
    double y = eval(map, v);
    if (y <= 0.0) return detail::float_min_state;
    if (y >= 1.0) return detail::float_max_state;
    return y;
  };

  double x = x0;
  for (std::uint64_t i = 0; i < n_discard; ++i) x = advance(x);

  // Collapse detector: consecutive block means of |F'| that agree to 1e-12
  // while staying below 1 mean the orbit sits on an attracting fixed point.
  constexpr std::uint64_t block = 512;
  double sum_log = 0.0, block_sum = 0.0, prev_mean = -1.0;
  std::uint64_t in_block = 0;
  for (std::uint64_t i = 0; i < n_iter; ++i) {
    double d = detail::nudged_derivative(map, x);
    sum_log += std::log(std::fabs(d));
    block_sum += std::fabs(d);
    if (++in_block == block) {
      double mean = block_sum / static_cast<double>(block);
      if (prev_mean >= 0.0 && std::fabs(mean - prev_mean) < 1e-12 && mean < 1.0)
        throw degenerate_orbit_error("local_le: orbit collapsed onto an attracting fixed point");
      prev_mean = mean;
      block_sum = 0.0;
      in_block = 0;
    }
    x = advance(x);
  }
  return sum_log / static_cast<double>(n_iter);
}

}  // namespace cml
