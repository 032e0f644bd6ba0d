#pragma once

namespace cml {

// Regularized upper incomplete gamma Q(a,x), a > 0, x >= 0: series expansion for
// x < a+1, Lentz continued fraction otherwise. Relative error <= 1e-10 on the
// tested domain.
double igamc(double a, double x);

// Standard normal quantile Phi^-1(p), p in (0,1): rational approximation
// refined by one Halley step on erfc.
double norm_inv(double p);

}  // namespace cml
