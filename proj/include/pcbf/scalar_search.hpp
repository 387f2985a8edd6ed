#pragma once

#include <cmath>
#include <utility>

namespace pcbf {

struct ScalarPoint {
  double x = 0.0;
  double fx = 0.0;
};

/// Golden-section search for a maximum of f on [a, b], stopping once the
/// bracket is narrower than `tol`. Returns the best point evaluated, so the
/// result is never worse than the interior probes.
template <typename F>
ScalarPoint golden_section_maximize(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  ScalarPoint best = fc >= fd ? ScalarPoint{c, fc} : ScalarPoint{d, fd};
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      if (fc > best.fx) best = {c, fc};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      if (fd > best.fx) best = {d, fd};
    }
  }
  return best;
}

/// Bisection for a root of f on [a, b] given f(a) < 0 <= f(b). The bracket is
/// kept oriented so that f < 0 on its left end, which makes the returned
/// point an upcrossing. Iterates to machine precision.
template <typename F>
ScalarPoint bisect_upcrossing(F&& f, double a, double b, double fb) {
  ScalarPoint right{b, fb};
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + right.x);
    if (mid <= a || mid >= right.x) break;
    const double fm = f(mid);
    if (fm < 0.0) {
      a = mid;
    } else {
      right = {mid, fm};
      if (fm == 0.0) break;
    }
  }
  return right;
}

}  // namespace pcbf
