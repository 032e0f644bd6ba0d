#pragma once

#include <cmath>

#include "cml/local_map.hpp"

namespace cml::detail {

struct plm_seg {
  int s;      // segment index, 1..N
  double xi;  // segment-local coordinate N*x - (s-1), in (0,1)
};

// Segment lookup with the boundary rule: x exactly at i/N is nudged one ulp up
// before branch selection.
inline plm_seg plm_locate(double x, int n_seg) {
  double xn = x * n_seg;
  double f = std::floor(xn);
  if (xn == f) {
    x = std::nextafter(x, 1.0);
    xn = x * n_seg;
    f = std::floor(xn);
  }
  int s = static_cast<int>(f) + 1;
  if (s > n_seg) s = n_seg;
  return {s, xn - (s - 1)};
}

inline double eval_logistic(double mu, double x) { return mu * x * (1.0 - x); }

inline double eval_tent(double mu, double x) {
  return x < 0.5 ? mu * x : mu * (1.0 - x);
}

inline double eval_plm(double mu, int n_seg, double x) {
  // mu*N^2*(x-(s-1)/N)*(s/N-x) == mu*xi*(1-xi) in the segment coordinate.
  auto [s, xi] = plm_locate(x, n_seg);
  double bump = mu * xi * (1.0 - xi);
  return (s % 2 == 1) ? bump : 1.0 - bump;
}

// F'(x), nudging x (persistently) off non-differentiable and zero-derivative
// points so callers can always take ln|F'|.
inline double nudged_derivative(const local_map& m, double& x) {
  for (;;) {
    double d = 0.0;
    bool defined = true;
    switch (m.kind) {
      case map_kind::logistic:
        d = m.mu * (1.0 - 2.0 * x);
        break;
      case map_kind::tent:
        if (x == 0.5) {
          defined = false;
        } else {
          d = x < 0.5 ? m.mu : -m.mu;
        }
        break;
      case map_kind::plm: {
        double xn = x * m.segments;
        if (xn == std::floor(xn)) {
          defined = false;
        } else {
          auto [s, xi] = plm_locate(x, m.segments);
          double slope = m.mu * m.segments * (1.0 - 2.0 * xi);
          d = (s % 2 == 1) ? slope : -slope;
        }
        break;
      }
    }
    if (defined && d != 0.0) return d;
    x = std::nextafter(x, 1.0);
  }
}

}  // namespace cml::detail
