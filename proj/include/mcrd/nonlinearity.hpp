#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "mcrd/error.hpp"

namespace mcrd {

namespace detail {

/// log(1+u) - u, with a short series near the origin where the
/// difference is O(u^2) and the direct form cancels.
inline double log1p_minus_x(double u) {
  if (std::abs(u) < 1e-3) {
    const double u2 = u * u;
    return u2 * (-0.5 + u * (1.0 / 3.0 + u * (-0.25 + u * (0.2 - u / 6.0))));
  }
  return std::log1p(u) - u;
}

/// log(1+t)/t, equal to 1 at t = 0.
inline double log1p_over_x(double t) {
  if (std::abs(t) < 1e-4) return 1.0 + t * (-0.5 + t * (1.0 / 3.0 + t * (-0.25 + t * 0.2)));
  return std::log1p(t) / t;
}

}  // namespace detail

/// Reduced nonlinearity g(u; mu) = u [u (mu - d u) / (kappa^2 (u + 1)) - 1]
/// together with its antiderivative G (G(0) = 0).
class Nonlinearity {
 public:
  Nonlinearity(double mu, double d, double kappa) : mu_(mu), d_(d), kappa_(kappa) {
    if (!(d > 0.0) || !(kappa > 0.0) || !std::isfinite(mu))
      throw DomainError("Nonlinearity: need d > 0, kappa > 0, finite mu");
    const double k2 = kappa * kappa;
    c3_ = -d / (3.0 * k2);
    c2_ = (mu + d) / (2.0 * k2) - 0.5;
    cl_ = (mu + d) / k2;
  }

  double mu() const noexcept { return mu_; }
  double d() const noexcept { return d_; }
  double kappa() const noexcept { return kappa_; }

  double g(double u) const {
    const double k2 = kappa_ * kappa_;
    return u * (u * (mu_ - d_ * u) / (k2 * (u + 1.0)) - 1.0);
  }

  double g_u(double u) const {
    const double k2 = kappa_ * kappa_;
    const double num = mu_ * u * u + 2.0 * mu_ * u - 2.0 * d_ * u * u * u - 3.0 * d_ * u * u;
    return num / (k2 * (u + 1.0) * (u + 1.0)) - 1.0;
  }

  /// Closed form antiderivative; polynomial part plus cl*(log(1+u) - u).
  double G(double u) const {
    if (!(u > -1.0)) throw DomainError("G: argument must exceed -1");
    return u * u * (c3_ * u + c2_) + cl_ * detail::log1p_minus_x(u);
  }

  /// Partial derivative of G in mu.
  double G_mu(double u) const {
    if (!(u > -1.0)) throw DomainError("G_mu: argument must exceed -1");
    return (0.5 * u * u + detail::log1p_minus_x(u)) / (kappa_ * kappa_);
  }

  /// (G(z) - G(a)) / (z - a) without forming the difference of G values;
  /// equals g(a) at z == a.
  double G_slope(double a, double z) const {
    if (z == a) return g(a);
    const double t = (z - a) / (1.0 + a);
    return c3_ * (a * a + a * z + z * z) + c2_ * (a + z) +
           cl_ * (detail::log1p_over_x(t) / (1.0 + a) - 1.0);
  }

  double cubic_coeff() const noexcept { return c3_; }
  double quadratic_coeff() const noexcept { return c2_; }
  double log_coeff() const noexcept { return cl_; }

 private:
  double mu_, d_, kappa_;
  double c3_, c2_, cl_;
};

/// Taylor expansion of G about a critical point c of g (c = 0 or c = beta):
///   G(c + dir*y) - G(c) = -(1/2) y^2 P(y),
/// with P analytic for |y| < 1 + c and P(0) = -g_u(c) > 0 at the saddles.
class SaddleExpansion {
 public:
  static constexpr int kTerms = 48;

  SaddleExpansion() = default;
  SaddleExpansion(const Nonlinearity& nl, double c, int dir) : c_(c), dir_(dir) {
    const double b = 1.0 + c;
    const double c3 = nl.cubic_coeff(), c2 = nl.quadratic_coeff(), cl = nl.log_coeff();
    // coef_[k] multiplies y^k in P(y).
    coef_[0] = -2.0 * (3.0 * c * c3 + c2 - cl / (2.0 * b * b));
    coef_[1] = -2.0 * dir * (c3 + cl / (3.0 * b * b * b));
    double bk = b * b * b;
    double sgn = dir;
    for (int k = 4; k < kTerms + 2; ++k) {
      bk *= b;
      sgn *= dir;
      const double alt = (k % 2 == 0) ? -1.0 : 1.0;  // (-1)^(k+1)
      coef_[k - 2] = -2.0 * cl * alt * sgn / (k * bk);
    }
    radius_ = b;
  }

  double center() const noexcept { return c_; }
  int direction() const noexcept { return dir_; }
  double radius() const noexcept { return radius_; }
  double curvature() const noexcept { return coef_[0]; }

  /// P(y) for 0 <= y <= radius/4.
  double P(double y) const {
    double s = 0.0;
    for (int k = kTerms - 1; k >= 0; --k) s = s * y + coef_[k];
    return s;
  }

  /// (P(y) - P(delta)) / (y - delta); both arguments within radius/4.
  double P_slope(double delta, double y) const {
    // sum_k coef_[k] * (y^k - delta^k)/(y - delta), with
    // D_k = y D_{k-1} + delta^{k-1}, D_1 = 1.
    double D = 1.0;
    double dpow = 1.0;
    double s = coef_[1];
    for (int k = 2; k < kTerms; ++k) {
      dpow *= delta;
      D = y * D + dpow;
      const double term = coef_[k] * D;
      s += term;
      if (std::abs(term) < 1e-19 * std::abs(s) && k > 8) break;
    }
    return s;
  }

 private:
  double c_ = 0.0;
  int dir_ = 1;
  double radius_ = 1.0;
  std::array<double, kTerms> coef_{};
};

}  // namespace mcrd
