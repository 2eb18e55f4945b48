#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcrd/error.hpp"
#include "mcrd/nonlinearity.hpp"

namespace mcrd {

/// u'' on a vertex grid with even reflection across both ends (Neumann).
/// order 2: three-point stencil; order 4: (-1, 16, -30, 16, -1)/12.
inline std::vector<double> neumann_second_difference(const std::vector<double>& u, double dx, int order = 2) {
  const int n = static_cast<int>(u.size());
  if (n < 5) throw DomainError("neumann_second_difference: need at least 5 points");
  auto at = [&](int i) {
    if (i < 0) i = -i;
    if (i > n - 1) i = 2 * (n - 1) - i;
    return u[i];
  };
  std::vector<double> out(n);
  const double inv = 1.0 / (dx * dx);
  for (int i = 0; i < n; ++i) {
    if (order == 4)
      out[i] = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) * inv / 12.0;
    else out[i] = (at(i - 1) - 2.0 * at(i) + at(i + 1)) * inv;
  }
  return out;
}

/// max |d u'' + g(u; mu)| on a uniform grid.
inline double scalar_residual(const std::vector<double>& u, double dx, const Nonlinearity& nl, int order = 2) {
  const auto lap = neumann_second_difference(u, dx, order);
  double r = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) r = std::max(r, std::abs(nl.d() * lap[i] + nl.g(u[i])));
  return r;
}

struct SystemResidual {
  double u_eq = 0.0;  // d u'' + f
  double v_eq = 0.0;  // v'' - f
  double w_eq = 0.0;  // eps w'' + tau (u - w)
  double max() const { return std::max({u_eq, v_eq, w_eq}); }
};

/// Stationary residual of the (u, v, w) system with f = u^2 v / (kappa^2 (1 + w)) - u.
inline SystemResidual system_residual(const std::vector<double>& u, const std::vector<double>& v,
                                      const std::vector<double>& w, double dx, double d, double eps, double tau,
                                      double kappa, int order = 2) {
  const auto lu = neumann_second_difference(u, dx, order);
  const auto lv = neumann_second_difference(v, dx, order);
  const auto lw = neumann_second_difference(w, dx, order);
  const double k2 = kappa * kappa;
  SystemResidual r;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double f = u[i] * u[i] * v[i] / (k2 * (1.0 + w[i])) - u[i];
    r.u_eq = std::max(r.u_eq, std::abs(d * lu[i] + f));
    r.v_eq = std::max(r.v_eq, std::abs(lv[i] - f));
    r.w_eq = std::max(r.w_eq, std::abs(eps * lw[i] + tau * (u[i] - w[i])));
  }
  return r;
}

}  // namespace mcrd
