#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "grl/common.hpp"

namespace grl {

/// Van Wijngaarden-Dekker-Brent root finding on a bracketing interval.
/// Stops when |f(x)| <= tol or the bracket width falls below tol*(1+|x|).
template <typename F>
double brent_root(F&& f, double lo, double hi, double tol = 1e-12,
                  int max_iter = 200) {
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (std::abs(fa) <= tol) return a;
  if (std::abs(fb) <= tol) return b;
  if (fa * fb > 0.0)
    throw BracketError("brent_root: no sign change on [lo, hi]");

  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() *
                            std::abs(b) +
                        0.5 * tol * (1.0 + std::abs(b));
    const double xm = 0.5 * (c - b);
    if (std::abs(fb) <= tol || std::abs(xm) <= tol1) return b;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // inverse quadratic interpolation (secant when a == c)
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                             std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
  }
  throw ConvergenceError("brent_root: max_iter exceeded", fb);
}

}  // namespace grl
