#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cml/fixed_point.hpp"
#include "cml/local_map.hpp"
#include "cml/seeding.hpp"

namespace cml {

enum class arithmetic_kind { float64, fixed };

// 1-based lattice node coordinates.
struct node_index {
  std::size_t u = 1;
  std::size_t v = 1;
};

struct lattice_config {
  std::size_t rows = 8;
  std::size_t cols = 8;
  double epsilon = 0.1;
  local_map map{};
  arithmetic_kind arithmetic = arithmetic_kind::float64;
  int z = 64;  // fractional bits (fixed mode only)

  void validate() const;  // throws domain_error
};

// 2D coupled map lattice with toroidal boundaries:
//   x_{n+1}^{u,v} = (1-eps)*F(x_n^{u,v}) + (eps/4)*[F(up)+F(down)+F(left)+F(right)]
// updated synchronously (double-buffered), in either Float64 or Q0.z arithmetic.
// Node values stay inside (0,1): map outputs of exactly 0 or 1 are replaced by
// the smallest/largest representable state (absorbing-state rule).
class lattice {
 public:
  // Explicit row-major initial values, all in (0,1).
  lattice(const lattice_config& config, const std::vector<double>& values);
  // Deterministic seeded fill (splitmix64 expansion of the seed).
  lattice(const lattice_config& config, std::uint64_t seed);
  // Seeded like `lattice(config, seed)`, then every node shifted by +delta
  // (mod 1): the worst-case correlated companion instance.
  static lattice perturbed(const lattice_config& config, std::uint64_t seed, double delta);

  void step();

  // Advance n_discard + n_points steps; return node (u,v)'s value after each of
  // the last n_points steps. The lattice itself advances accordingly.
  std::vector<double> orbit(std::size_t u, std::size_t v, std::uint64_t n_points,
                            std::uint64_t n_discard);

  double value_at(std::size_t u, std::size_t v) const;  // 1-based indices
  // Top z_out fractional bits of the node value: floor(x * 2^z_out).
  // Fixed mode requires z_out <= z; Float64 requires z_out <= 52.
  fixed_value quantized_at(std::size_t u, std::size_t v, int z_out) const;

  std::vector<double> grid() const;  // row-major snapshot
  std::uint64_t time() const { return time_; }
  const lattice_config& config() const { return config_; }

 private:
  explicit lattice(const lattice_config& config);

  std::size_t index_checked(std::size_t u, std::size_t v) const;
  void build_tables();
  template <map_kind MK>
  void step_float_impl();
  template <map_kind MK>
  void step_fixed_impl();
  template <map_kind MK>
  std::uint64_t eval_fixed(std::uint64_t x) const;

  lattice_config config_;
  std::uint64_t time_ = 0;
  std::vector<std::uint32_t> nb_;  // 4 neighbor indices per node

  // Float64 state.
  std::vector<double> cur_f_, nxt_f_, fv_f_;

  // Fixed-point state and quantized constants.
  std::vector<std::uint64_t> cur_q_, nxt_q_, fv_q_;
  std::uint64_t maskz_ = 0, half_ = 0;
  std::uint64_t w_self_ = 0, w_nb_ = 0;
  std::uint64_t c_raw_ = 0;  // normalized map constant (mu/4 or mu/2) in Q0.z
  bool c_is_one_ = false;
};

// Grid snapshot as CSV, row-major, header "u,v,value".
std::string to_csv(const lattice& lat);

}  // namespace cml
