#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "mcrd/error.hpp"

namespace mcrd {

struct RootOptions {
  double ftol = 1e-12;  // absolute residual
  double xtol = 1e-13;  // absolute bracket width (floored at a few ulps)
  int max_iter = 300;
};

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
};

/// Bracketed root of f on [a, b]: bisection guarded secant (Illinois variant).
/// Requires f(a) and f(b) of opposite sign (or one of them zero).
template <class F>
RootResult find_root(F&& f, double a, double b, const RootOptions& opt = {}) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return {a, fa, 0};
  if (fb == 0.0) return {b, fb, 0};
  if (!std::isfinite(fa) || !std::isfinite(fb))
    throw NumericalError("find_root: non-finite value at bracket end");
  if ((fa < 0.0) == (fb < 0.0))
    throw NumericalError("find_root: no sign change on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");

  int side = 0;
  RootResult best{std::abs(fa) < std::abs(fb) ? a : b,
                  std::abs(fa) < std::abs(fb) ? fa : fb, 0};
  for (int it = 1; it <= opt.max_iter; ++it) {
    const double width = std::abs(b - a);
    const double floor = 4.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(a), std::abs(b));
    if (width <= std::max(opt.xtol, floor)) break;

    double x = (a * fb - b * fa) / (fb - fa);
    // Fall back to bisection when the secant point hugs an end.
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double guard = 0.01 * width;
    if (!(x > lo + guard && x < hi - guard) || it % 4 == 0) x = 0.5 * (a + b);

    const double fx = f(x);
    if (!std::isfinite(fx)) throw NumericalError("find_root: non-finite value inside bracket");
    best = {x, fx, it};
    if (std::abs(fx) <= opt.ftol && width <= 1e3 * std::max(opt.xtol, floor)) break;
    if (fx == 0.0) break;
    if ((fx < 0.0) == (fb < 0.0)) {
      b = x;
      fb = fx;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = x;
      fa = fx;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return best;
}

struct MinResult {
  double x = 0.0;
  double fx = 0.0;
};

/// Golden-section search for a minimum of a unimodal f on [a, b].
template <class F>
MinResult golden_min(F&& f, double a, double b, double xtol = 1e-9, int max_iter = 200) {
  constexpr double r = 0.6180339887498949;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && std::abs(b - a) > xtol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? MinResult{c, fc} : MinResult{d, fd};
}

}  // namespace mcrd
