#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace mcrd {

using Complex = std::complex<double>;

namespace detail {

inline std::array<Complex, 3> companion_roots(double a2, double a1, double a0) {
  Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
  c(0, 0) = -a2;
  c(0, 1) = -a1;
  c(0, 2) = -a0;
  c(1, 0) = 1.0;
  c(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(c, false);
  const auto ev = es.eigenvalues();
  return {ev(0), ev(1), ev(2)};
}

inline std::array<Complex, 2> quadratic_roots(double b, double c) {
  // lambda^2 + b lambda + c
  const double disc = b * b - 4.0 * c;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(s, b));
    if (q == 0.0) return {Complex(0.0), Complex(0.0)};
    return {Complex(q), Complex(c / q)};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {Complex(-0.5 * b, im), Complex(-0.5 * b, -im)};
}

}  // namespace detail

/// Roots of lambda^3 + a2 lambda^2 + a1 lambda + a0, sorted by real part
/// (descending), conjugate pairs with the positive imaginary part first.
inline std::array<Complex, 3> solve_cubic(double a2, double a1, double a0) {
  std::array<Complex, 3> r;
  if (a0 == 0.0) {
    const auto q = detail::quadratic_roots(a2, a1);
    r = {Complex(0.0), q[0], q[1]};
  } else {
    const double shift = a2 / 3.0;
    const double p = a1 - a2 * a2 / 3.0;
    const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    const double hq = 0.5 * q;
    const double tp = p / 3.0;
    const double disc = hq * hq + tp * tp * tp;
    const double scale = std::max(hq * hq, std::abs(tp * tp * tp));
    if (scale == 0.0) {
      r = {Complex(-shift), Complex(-shift), Complex(-shift)};
    } else if (std::abs(disc) < 1e-12 * scale) {
      r = detail::companion_roots(a2, a1, a0);
    } else if (disc > 0.0) {
      const double u = std::cbrt(-hq - std::copysign(std::sqrt(disc), hq));
      const double v = (u == 0.0) ? 0.0 : -tp / u;
      const double re = -0.5 * (u + v) - shift;
      const double im = 0.5 * std::numbers::sqrt3 * std::abs(u - v);
      r = {Complex(u + v - shift), Complex(re, im), Complex(re, -im)};
    } else {
      const double m = 2.0 * std::sqrt(-tp);
      const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
      const double th = std::acos(arg) / 3.0;
      for (int k = 0; k < 3; ++k)
        r[k] = Complex(m * std::cos(th - 2.0 * std::numbers::pi * k / 3.0) - shift);
    }
  }
  std::sort(r.begin(), r.end(), [](const Complex& x, const Complex& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return r;
}

}  // namespace mcrd
