#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include <fmt/format.h>

#include "cornerimpact/event_simulator.hpp"

namespace cornerimpact::detail {

// Root of f on [lo, hi] given f(lo) and f(hi) of opposite sign (or f(hi) == 0),
// by Newton steps kept inside the bracket, falling back to bisection.
template <class F>
double safeguarded_newton(F&& f_and_df, double lo, double hi, double flo, double tol, const char* what) {
  if (flo == 0.0) return lo;
  double x = 0.5 * (lo + hi);
  double dx_old = hi - lo, dx = dx_old;
  auto [fx, dfx] = f_and_df(x);
  for (int it = 0; it < 100; ++it) {
    if (fx == 0.0) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double newton = dfx != 0.0 ? x - fx / dfx : lo - 1.0;
    const bool in_bracket = (newton > std::min(lo, hi)) && (newton < std::max(lo, hi));
    if (!in_bracket || std::abs(2.0 * fx) > std::abs(dx_old * dfx)) {
      dx_old = dx;
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    } else {
      dx_old = dx;
      dx = newton - x;
      x = newton;
    }
    std::tie(fx, dfx) = f_and_df(x);
    if (std::abs(dx) <= tol || std::abs(hi - lo) <= tol) {
      // One more Newton step from a converged iterate costs nothing and
      // takes the root to working precision.
      if (dfx != 0.0 && fx != 0.0) {
        const double polished = x - fx / dfx;
        if (polished >= std::min(lo, hi) && polished <= std::max(lo, hi)) x = polished;
      }
      return x;
    }
  }
  throw ImpactPolishError(fmt::format("{} did not converge in 100 iterations in [{}, {}]", what, lo, hi), lo, hi);
}

}  // namespace cornerimpact::detail
