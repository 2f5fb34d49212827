#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "nwidth/error.hpp"

namespace nwidth {

// r, k and the Lebesgue exponents, with conjugates and the exponent of the
// gv quasi-norm.
struct ExponentSet {
  int r = 2;
  int k = 1;
  double p = 2;
  double q = 2;
  double p_dual = 2;
  double q_dual = 2;
  double kappa = 0.5;

  static ExponentSet make(int r, int k, double p, double q) {
    if (r < 2) throw Error(ErrorKind::invalid_argument, "r must be at least 2");
    if (k < 1 || k > r - 1)
      throw Error(ErrorKind::invalid_argument, "k must lie in [1, r-1]");
    if (!(p > 1) || !std::isfinite(p) || !(q > 1) || !std::isfinite(q))
      throw Error(ErrorKind::invalid_argument, "p and q must lie in (1, inf)");
    if (q > p) throw Error(ErrorKind::invalid_argument, "q must not exceed p");
    ExponentSet e;
    e.r = r;
    e.k = k;
    e.p = p;
    e.q = q;
    e.p_dual = p / (p - 1);
    e.q_dual = q / (q - 1);
    e.kappa = 1.0 / (r + 1.0 / q - 1.0 / p);
    return e;
  }

  bool is_hilbert() const { return p == 2.0 && q == 2.0; }
};

}  // namespace nwidth
