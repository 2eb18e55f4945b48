#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mcrd/cubic.hpp"
#include "mcrd/equilibria.hpp"
#include "mcrd/error.hpp"
#include "mcrd/params.hpp"
#include "mcrd/roots.hpp"

namespace mcrd {

using Matrix3 = std::array<std::array<double, 3>, 3>;

enum class EquilibriumBranch { zero, plus, minus };

/// Jacobian of (f, -f, tau (u - w)) with f = u^2 v / (kappa^2 (1 + w)) - u.
inline Matrix3 reaction_jacobian(double u, double v, double w, double kappa, double tau) {
  const double k2 = kappa * kappa;
  const double fu = 2.0 * u * v / (k2 * (1.0 + w)) - 1.0;
  const double fv = u * u / (k2 * (1.0 + w));
  const double fw = -u * u * v / (k2 * (1.0 + w) * (1.0 + w));
  return {{{fu, fv, fw}, {-fu, -fv, -fw}, {tau, 0.0, -tau}}};
}

inline ConstantState equilibrium_state(EquilibriumBranch which, double M, double kappa) {
  const auto eq = constant_equilibria(M, kappa);
  switch (which) {
    case EquilibriumBranch::zero: return eq.zero;
    case EquilibriumBranch::plus:
      if (!eq.plus || M <= critical_mass(kappa)) throw DomainError("u_+ equilibrium needs M > M_c");
      return *eq.plus;
    case EquilibriumBranch::minus:
      if (!eq.minus || M <= critical_mass(kappa)) throw DomainError("u_- equilibrium needs M > M_c");
      return *eq.minus;
  }
  return eq.zero;
}

inline Matrix3 jacobian_at_equilibrium(EquilibriumBranch which, const ReducedParams& p) {
  const ConstantState s = equilibrium_state(which, p.M, p.kappa);
  return reaction_jacobian(s.u, s.v, s.w, p.kappa, p.tau);
}

/// Eigenvalues of the mode matrix about (0, M, 0): its diagonal.
inline std::array<double, 3> eig_A(double sigma, const ReducedParams& p) {
  return {-p.d * sigma - 1.0, -sigma, -p.eps * sigma - p.tau};
}

struct LinearizationData {
  double alpha0 = 0.0;  // u/v at the equilibrium
  double beta0 = 0.0;   // u/(1+u)
  double tau = 0.0, d = 0.0, eps = 0.0, M = 0.0, kappa = 0.0;
  double u = 0.0, v = 0.0;
};

inline LinearizationData linearize(const ReducedParams& p,
                                   EquilibriumBranch which = EquilibriumBranch::plus) {
  if (which == EquilibriumBranch::zero) throw DomainError("linearize: zero state has no B matrices");
  const ConstantState s = equilibrium_state(which, p.M, p.kappa);
  LinearizationData lin;
  lin.alpha0 = s.u / s.v;
  lin.beta0 = s.u / (1.0 + s.u);
  lin.tau = p.tau;
  lin.d = p.d;
  lin.eps = p.eps;
  lin.M = p.M;
  lin.kappa = p.kappa;
  lin.u = s.u;
  lin.v = s.v;
  return lin;
}

/// Mode matrix about (u, v, u) for Laplacian eigenvalue sigma.
inline Matrix3 mode_matrix_B(double sigma, const LinearizationData& lin) {
  const double a = lin.alpha0, b = lin.beta0;
  return {{{-lin.d * sigma + 1.0, a, -b},
           {-1.0, -sigma - a, b},
           {lin.tau, 0.0, -lin.eps * sigma - lin.tau}}};
}

/// Monic characteristic polynomial lambda^3 + c[2] lambda^2 + c[1] lambda + c[0].
inline std::array<double, 3> char_poly_B(double sigma, const LinearizationData& lin) {
  const double d = lin.d, e = lin.eps, t = lin.tau, a = lin.alpha0, b = lin.beta0, s = sigma;
  const double c2 = (d + 1.0 + e) * s - 1.0 + a + t;
  const double c1 = (d + e * d + e) * s * s + (-1.0 + d * a + t * (d + 1.0) + e * (a - 1.0)) * s +
                    t * (a - 1.0 + b);
  const double c0 = (e * d * s * s + (t * d + e * (-1.0 + d * a)) * s + t * (-1.0 + d * a + b)) * s;
  return {c0, c1, c2};
}

inline std::array<Complex, 3> eig_B(double sigma, const LinearizationData& lin) {
  const auto c = char_poly_B(sigma, lin);
  return solve_cubic(c[2], c[1], c[0]);
}

/// r(M) = u_+/v_+ - 1 + tau; uniform stability of u_+ needs r > 0.
inline double r_of_M(double M, double kappa, double tau) {
  const ConstantState s = equilibrium_state(EquilibriumBranch::plus, M, kappa);
  return s.u / s.v - 1.0 + tau;
}

/// Limit of r at the saddle node, where u = kappa and v = kappa^2 + kappa.
inline double r_at_critical_mass(double kappa, double tau) { return tau - kappa / (kappa + 1.0); }

/// Mass where r changes sign, if r(M_c) < 0.
inline std::optional<double> M_star(double kappa, double tau) {
  if (r_at_critical_mass(kappa, tau) >= 0.0) return std::nullopt;
  const double mc = critical_mass(kappa);
  auto r = [&](double M) {
    return M == mc ? r_at_critical_mass(kappa, tau) : r_of_M(M, kappa, tau);
  };
  double hi = mc + 1.0;
  for (int i = 0; i < 200 && r(hi) <= 0.0; ++i) hi = mc + 2.0 * (hi - mc);
  RootOptions opt;
  opt.ftol = 1e-14;
  opt.xtol = 0.0;
  return find_root(r, mc, hi, opt).x;
}

enum class InstabilityKind { none, S, W, S_and_W };

inline std::string to_string(InstabilityKind k) {
  switch (k) {
    case InstabilityKind::none: return "none";
    case InstabilityKind::S: return "S";
    case InstabilityKind::W: return "W";
    case InstabilityKind::S_and_W: return "S-and-W";
  }
  return "none";
}

inline bool uniformly_stable(const LinearizationData& lin) {
  return lin.alpha0 - 1.0 + lin.beta0 > 0.0 && lin.alpha0 - 1.0 + lin.tau > 0.0;
}

struct SubsystemReport {
  InstabilityKind kind = InstabilityKind::none;
  double J2 = 0.0;        // u/v part, always negative
  double trace13 = 0.0;   // 1 - tau
  double det13 = 0.0;     // -tau/(1 + u)
};

/// Classification from the (N,I) / S splitting of the Jacobian at u_+.
inline SubsystemReport subsystem_classification(const LinearizationData& lin) {
  if (!uniformly_stable(lin))
    throw DomainError("subsystem_classification: equilibrium is not stable to uniform perturbations");
  SubsystemReport rep;
  rep.J2 = -lin.u / lin.v;
  rep.trace13 = 1.0 - lin.tau;
  rep.det13 = -lin.tau / (1.0 + lin.u);
  rep.kind = lin.tau >= 1.0 ? InstabilityKind::S : InstabilityKind::S_and_W;
  return rep;
}

struct DispersionPoint {
  double sigma = 0.0;
  std::array<Complex, 3> eigenvalues{};
  double max_real = 0.0;
  bool neumann_mode = false;
  int mode_index = -1;  // j for sigma = (j pi / ell)^2
};

struct DispersionReport {
  std::vector<DispersionPoint> points;
  bool uniform_stable = false;
  InstabilityKind kind = InstabilityKind::none;
  std::optional<double> crossing_sigma;
  std::optional<bool> crossing_oscillatory;
  double max_growth = 0.0;
  double argmax_sigma = 0.0;
  bool real_unstable = false;     // some unstable sigma has a real dominant root
  bool complex_unstable = false;  // some unstable sigma has a complex dominant root
};

inline constexpr double kImagTol = 1e-8;

inline bool is_oscillatory(const Complex& z) {
  return std::abs(z.imag()) > kImagTol * (1.0 + std::abs(z));
}

inline DispersionPoint dispersion_point(double sigma, const LinearizationData& lin) {
  DispersionPoint p;
  p.sigma = sigma;
  p.eigenvalues = eig_B(sigma, lin);
  p.max_real = p.eigenvalues[0].real();
  return p;
}

/// Growth-rate scan over a uniform sigma grid, plus the Neumann modes of an
/// interval of length ell when ell > 0.
inline DispersionReport dispersion_scan(const LinearizationData& lin, double sigma_max, int n_sigma,
                                        double ell = 0.0) {
  if (!(sigma_max > 0.0) || n_sigma < 2) throw DomainError("dispersion_scan: need sigma_max > 0, n >= 2");
  DispersionReport rep;
  rep.uniform_stable = uniformly_stable(lin);
  const double growth_tol = 1e-13;
  std::vector<DispersionPoint> grid;
  grid.reserve(n_sigma);
  for (int i = 0; i < n_sigma; ++i) grid.push_back(dispersion_point(sigma_max * i / (n_sigma - 1), lin));

  for (std::size_t i = 1; i < grid.size(); ++i) {
    const auto& p = grid[i];
    if (p.max_real > growth_tol) {
      if (is_oscillatory(p.eigenvalues[0])) rep.complex_unstable = true;
      else rep.real_unstable = true;
    }
  }
  // Lower edge of the first unstable band.
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i].max_real > growth_tol) {
      double lo = grid[i - 1].sigma, hi = grid[i].sigma;
      if (i - 1 == 0) {
        // The neutral mode sits at sigma = 0; look for the band edge only if
        // the growth rate just above zero is non-positive.
        const double probe = 1e-9 * sigma_max;
        if (dispersion_point(probe, lin).max_real > 0.0) {
          rep.crossing_sigma = 0.0;
          rep.crossing_oscillatory = is_oscillatory(dispersion_point(probe, lin).eigenvalues[0]);
          break;
        }
        lo = probe;
      }
      for (int it = 0; it < 100 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dispersion_point(mid, lin).max_real > 0.0) hi = mid;
        else lo = mid;
      }
      rep.crossing_sigma = hi;
      rep.crossing_oscillatory = is_oscillatory(dispersion_point(hi, lin).eigenvalues[0]);
      break;
    }
  }

  rep.points = std::move(grid);
  if (ell > 0.0) {
    const double k0 = std::numbers::pi / ell;
    for (int j = 0;; ++j) {
      const double s = (j * k0) * (j * k0);
      if (s > sigma_max) break;
      DispersionPoint p = dispersion_point(s, lin);
      p.neumann_mode = true;
      p.mode_index = j;
      rep.points.push_back(p);
    }
  }
  for (const auto& p : rep.points) {
    if (p.sigma > 0.0 && p.max_real > rep.max_growth) {
      rep.max_growth = p.max_real;
      rep.argmax_sigma = p.sigma;
    }
  }
  if (rep.real_unstable && rep.complex_unstable) rep.kind = InstabilityKind::S_and_W;
  else if (rep.real_unstable) rep.kind = InstabilityKind::S;
  else if (rep.complex_unstable) rep.kind = InstabilityKind::W;
  return rep;
}

struct DiffusionScanEntry {
  double d = 0.0;
  double eps = 0.0;
  bool unstable = false;
  InstabilityKind kind = InstabilityKind::none;
};

struct DiffusionScan {
  std::vector<DiffusionScanEntry> entries;
  std::optional<double> largest_unstable_d;    // over all eps on the grid
  std::optional<double> largest_unstable_eps;  // over all d on the grid
};

/// Log grid over (d, eps) in [lo, hi]^2 recording where a positive growth
/// rate survives at u_+; quantifies "max{d, eps} small enough".
inline DiffusionScan diffusion_instability_scan(ReducedParams p, double lo, double hi, int per_decade,
                                                double sigma_max = 400.0, int n_sigma = 2001) {
  DiffusionScan out;
  const int n = std::max(2, static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade)) + 1);
  std::vector<double> axis(n);
  for (int i = 0; i < n; ++i) axis[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  for (double d : axis) {
    for (double e : axis) {
      p.d = d;
      p.eps = e;
      const auto rep = dispersion_scan(linearize(p), sigma_max, n_sigma);
      DiffusionScanEntry en{d, e, rep.max_growth > 1e-13, rep.kind};
      if (en.unstable) {
        if (!out.largest_unstable_d || d > *out.largest_unstable_d) out.largest_unstable_d = d;
        if (!out.largest_unstable_eps || e > *out.largest_unstable_eps) out.largest_unstable_eps = e;
      }
      out.entries.push_back(en);
    }
  }
  return out;
}

}  // namespace mcrd
