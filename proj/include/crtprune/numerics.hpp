#pragma once

#include <cmath>
#include <limits>

#include "crtprune/errors.hpp"

namespace crtprune {

inline constexpr int kRootIterationCap = 500;

// Root of an increasing f on [lo, hi] with f(lo) <= 0 <= f(hi). Newton steps
// are taken when they stay inside the bracket, bisection otherwise. Stops when
// |f| < ftol or the bracket has shrunk to a few ulps.
template <class F, class DF>
double solve_increasing(F&& f, DF&& df, double lo, double hi, double ftol,
                        int max_iter = kRootIterationCap) {
  double flo = f(lo);
  if (flo >= 0.0) return lo;
  double fhi = f(hi);
  if (fhi <= 0.0) return hi;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    double fx = f(x);
    if (std::fabs(fx) < ftol) return x;
    if (fx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::fmax(1.0, std::fabs(x))) {
      return 0.5 * (lo + hi);
    }
    double d = df(x);
    double next = (d > 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  throw ConvergenceError("root finding did not converge");
}

// Plain bisection on an increasing f until the bracket is narrower than xtol.
template <class F>
double bisect_increasing(F&& f, double lo, double hi, double xtol,
                         int max_iter = kRootIterationCap) {
  for (int it = 0; it < max_iter; ++it) {
    if (hi - lo <= xtol) return 0.5 * (lo + hi);
    double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw ConvergenceError("bisection did not converge");
}

}  // namespace crtprune
