#include "cml/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cml/errors.hpp"
#include "map_detail.hpp"

namespace cml {

std::vector<std::complex<double>> eigenvalues(double epsilon, std::size_t R, std::size_t L) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("eigenvalues: epsilon must be in (0,1)");
  if (R < 1 || L < 1) throw domain_error("eigenvalues: R and L must be >= 1");
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::complex<double>> out;
  out.reserve(R * L);
  for (std::size_t r = 0; r < R; ++r) {
    const double ar = two_pi * static_cast<double>(r) / static_cast<double>(R);
    const std::complex<double> wr = std::polar(1.0, ar);
    const std::complex<double> wr_back = std::polar(1.0, ar * static_cast<double>(R - 1));
    for (std::size_t l = 0; l < L; ++l) {
      const double al = two_pi * static_cast<double>(l) / static_cast<double>(L);
      const std::complex<double> ml = std::polar(1.0, al);
      const std::complex<double> ml_back = std::polar(1.0, al * static_cast<double>(L - 1));
      std::complex<double> lam =
          (1.0 - epsilon) + (epsilon / 4.0) * (wr + wr_back) + (epsilon / 4.0) * (ml + ml_back);
      if (std::fabs(lam.imag()) > 1e-12)
        throw std::logic_error("eigenvalues: imaginary parts failed to cancel");
      out.push_back(lam);
    }
  }
  return out;
}

std::vector<double> coupling_matrix(double epsilon, std::size_t R, std::size_t L) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw domain_error("coupling_matrix: epsilon must be in (0,1)");
  if (R < 1 || L < 1) throw domain_error("coupling_matrix: R and L must be >= 1");
  const std::size_t n = R * L;
  if (n > 4096) throw domain_error("coupling_matrix: R*L must be <= 4096 (oracle use only)");
  std::vector<double> k(n * n, 0.0);
  for (std::size_t u = 0; u < R; ++u) {
    for (std::size_t v = 0; v < L; ++v) {
      const std::size_t p = u * L + v;
      k[p * n + p] += 1.0 - epsilon;
      const std::size_t nbs[4] = {((u + R - 1) % R) * L + v, ((u + 1) % R) * L + v,
                                  u * L + (v + L - 1) % L, u * L + (v + 1) % L};
      for (std::size_t q : nbs) k[p * n + q] += epsilon / 4.0;
    }
  }
  return k;
}

le_spectrum_result le_spectrum(double le_f, double epsilon, std::size_t R, std::size_t L) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("le_spectrum: epsilon must be in (0,1)");
  if (R < 1 || L < 1) throw domain_error("le_spectrum: R and L must be >= 1");
  const double two_pi = 2.0 * std::numbers::pi;
  le_spectrum_result res;
  res.le_f = le_f;
  res.entries.reserve(R * L);
  for (std::size_t r = 0; r < R; ++r) {
    const double cr = std::cos(two_pi * static_cast<double>(r) / static_cast<double>(R));
    for (std::size_t l = 0; l < L; ++l) {
      const double cl = std::cos(two_pi * static_cast<double>(l) / static_cast<double>(L));
      // 1 - eps*(1 - (cr+cl)/2) == 1-eps+(eps/2)(cr+cl), arranged so the r=l=0
      // term is exactly 1.0 and the maximum exponent exactly le_f.
      const double inner = 1.0 - epsilon * (1.0 - 0.5 * (cr + cl));
      const double mod = std::fabs(inner);
      le_entry e;
      e.r = r;
      e.l = l;
      e.lambda_modulus = mod;
      e.le = mod < divergent_modulus_cutoff ? -std::numeric_limits<double>::infinity()
                                            : le_f + std::log(mod);
      res.entries.push_back(e);
    }
  }
  std::sort(res.entries.begin(), res.entries.end(), [](const le_entry& a, const le_entry& b) {
    if (a.le != b.le) return a.le > b.le;
    if (a.r != b.r) return a.r < b.r;
    return a.l < b.l;
  });
  return res;
}

namespace {

// Modified Gram-Schmidt (two passes) on n x m column-major Q; adds ln of each
// column norm into acc when provided.
void gram_schmidt(std::vector<double>& q, std::size_t n, std::size_t m, double* acc,
                  splitmix64& refill) {
  for (std::size_t j = 0; j < m; ++j) {
    double* col = q.data() + j * n;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double* prev = q.data() + i * n;
        double dot = 0.0;
        for (std::size_t t = 0; t < n; ++t) dot += prev[t] * col[t];
        for (std::size_t t = 0; t < n; ++t) col[t] -= dot * prev[t];
      }
    }
    double nrm2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) nrm2 += col[t] * col[t];
    double nrm = std::sqrt(nrm2);
    if (nrm < std::numeric_limits<double>::min()) {
      // Divergent mode annihilated the column; log a floor and restart the
      // direction so the remaining columns stay well-conditioned.
      if (acc) acc[j] += std::log(std::numeric_limits<double>::min());
      for (std::size_t t = 0; t < n; ++t) col[t] = u01(refill.next()) - 0.5;
      for (std::size_t i = 0; i < j; ++i) {
        const double* prev = q.data() + i * n;
        double dot = 0.0;
        for (std::size_t t = 0; t < n; ++t) dot += prev[t] * col[t];
        for (std::size_t t = 0; t < n; ++t) col[t] -= dot * prev[t];
      }
      nrm2 = 0.0;
      for (std::size_t t = 0; t < n; ++t) nrm2 += col[t] * col[t];
      nrm = std::sqrt(nrm2);
    } else if (acc) {
      acc[j] += std::log(nrm);
    }
    const double inv = 1.0 / nrm;
    for (std::size_t t = 0; t < n; ++t) col[t] *= inv;
  }
}

}  // namespace

std::vector<double> wolf_le(const lattice_config& config, std::uint64_t n_iter,
                            std::uint64_t n_discard, std::size_t n_exponents,
                            std::uint64_t seed) {
  config.validate();
  if (n_iter < 10000) throw domain_error("wolf_le: n_iter must be >= 10^4");
  const std::size_t n = config.rows * config.cols;
  if (n_exponents < 1 || n_exponents > n)
    throw domain_error("wolf_le: n_exponents must be in [1, R*L]");
  const std::size_t m = n_exponents;

  splitmix64 sm(seed);
  double x = u01(sm.next());
  if (x < detail::float_min_state) x = detail::float_min_state;
  if (x > detail::float_max_state) x = detail::float_max_state;

  auto advance = [&config](double v) {
    double y = eval(config.map, v);
    if (y <= 0.0) return detail::float_min_state;
    if (y >= 1.0) return detail::float_max_state;
    return y;
  };

  // Neighbor tables for applying K = (1-eps)I + (eps/4)*adjacency.
  const std::size_t R = config.rows, L = config.cols;
  std::vector<std::uint32_t> nb(4 * n);
  for (std::size_t u = 0; u < R; ++u) {
    for (std::size_t v = 0; v < L; ++v) {
      const std::size_t p = u * L + v;
      nb[4 * p + 0] = static_cast<std::uint32_t>(((u + R - 1) % R) * L + v);
      nb[4 * p + 1] = static_cast<std::uint32_t>(((u + 1) % R) * L + v);
      nb[4 * p + 2] = static_cast<std::uint32_t>(u * L + (v + L - 1) % L);
      nb[4 * p + 3] = static_cast<std::uint32_t>(u * L + (v + 1) % L);
    }
  }
  const double w0 = 1.0 - config.epsilon, w1 = config.epsilon * 0.25;

  std::vector<double> q(n * m), tmp(n);
  for (double& e : q) e = u01(sm.next()) - 0.5;
  gram_schmidt(q, n, m, nullptr, sm);

  auto apply_k = [&](double* col) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t* p = &nb[4 * i];
      tmp[i] = w0 * col[i] + w1 * ((col[p[0]] + col[p[1]]) + (col[p[2]] + col[p[3]]));
    }
    std::copy(tmp.begin(), tmp.end(), col);
  };

  // The scalar prefactor F'(x_n) commutes with K, so it is accumulated in log
  // space instead of scaling the columns; this cannot over/underflow between
  // re-orthonormalizations.
  std::vector<double> acc(m, 0.0);
  double log_c = 0.0;
  for (std::uint64_t it = 0; it < n_discard; ++it) {
    for (std::size_t j = 0; j < m; ++j) apply_k(q.data() + j * n);
    if ((it + 1) % 10 == 0) gram_schmidt(q, n, m, nullptr, sm);
    x = advance(x);
  }
  // Same collapse detector as local_le: an orbit stuck on an attracting fixed
  // point makes every exponent meaningless.
  constexpr std::uint64_t block = 512;
  double block_sum = 0.0, prev_mean = -1.0;
  std::uint64_t in_block = 0;
  for (std::uint64_t it = 0; it < n_iter; ++it) {
    const double c = detail::nudged_derivative(config.map, x);
    log_c += std::log(std::fabs(c));
    block_sum += std::fabs(c);
    if (++in_block == block) {
      const double mean = block_sum / static_cast<double>(block);
      if (prev_mean >= 0.0 && std::fabs(mean - prev_mean) < 1e-12 && mean < 1.0)
        throw degenerate_orbit_error("wolf_le: orbit collapsed onto an attracting fixed point");
      prev_mean = mean;
      block_sum = 0.0;
      in_block = 0;
    }
    for (std::size_t j = 0; j < m; ++j) apply_k(q.data() + j * n);
    if ((it + 1) % 10 == 0 || it + 1 == n_iter) gram_schmidt(q, n, m, acc.data(), sm);
    x = advance(x);
  }

  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j)
    out[j] = (acc[j] + log_c) / static_cast<double>(n_iter);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace cml
