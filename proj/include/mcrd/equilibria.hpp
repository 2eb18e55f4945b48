#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "mcrd/error.hpp"
#include "mcrd/nonlinearity.hpp"
#include "mcrd/roots.hpp"

namespace mcrd {

/// Saddle-node threshold in the total mass.
inline double critical_mass(double kappa) { return kappa * kappa + 2.0 * kappa; }

struct ConstantState {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
};

struct ConstantEquilibria {
  ConstantState zero;                 // (0, M, 0)
  std::optional<ConstantState> plus;  // u_+ branch, present iff M > M_c (or M == M_c)
  std::optional<ConstantState> minus;
  std::vector<ConstantState> all() const {
    std::vector<ConstantState> out{zero};
    if (plus) out.push_back(*plus);
    if (minus) out.push_back(*minus);
    return out;
  }
};

/// Uniform steady states of the (u, v, w) system with u + v = M.
inline ConstantEquilibria constant_equilibria(double M, double kappa) {
  if (!(M > 0.0) || !(kappa > 0.0)) throw DomainError("constant_equilibria: need M > 0, kappa > 0");
  ConstantEquilibria eq;
  eq.zero = {0.0, M, 0.0};
  const double k2 = kappa * kappa;
  const double mc = critical_mass(kappa);
  if (M < mc) return eq;
  // (M - k^2)^2 - 4 k^2 factored so that it vanishes exactly at M_c.
  const double disc = (M - mc) * (M - k2 + 2.0 * kappa);
  const double up = 0.5 * ((M - k2) + std::sqrt(disc));
  const double um = (M == mc) ? up : k2 / up;
  eq.plus = ConstantState{up, M - up, up};
  eq.minus = ConstantState{um, M - um, um};
  return eq;
}

/// Lower edge of mu for which g has positive roots.
inline double mu_threshold(double d, double kappa) {
  return kappa * kappa + 2.0 * std::sqrt(d) * kappa;
}

namespace detail {

// Roots of -d u^2 + (mu - k^2) u - k^2 = 0, allowing the double root.
inline std::pair<double, double> alpha_beta_unchecked(double mu, double d, double kappa) {
  const double k2 = kappa * kappa;
  const double sq = 2.0 * std::sqrt(d) * kappa;
  double disc = (mu - k2 - sq) * (mu - k2 + sq);
  if (disc < 0.0) disc = 0.0;
  const double beta = ((mu - k2) + std::sqrt(disc)) / (2.0 * d);
  const double alpha = k2 / (d * beta);
  return {alpha, beta};
}

inline std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

}  // namespace detail

/// The two positive zeros alpha < beta of g.
inline std::pair<double, double> roots_alpha_beta(double mu, double d, double kappa) {
  if (!(d > 0.0) || !(kappa > 0.0)) throw DomainError("roots_alpha_beta: need d > 0, kappa > 0");
  if (!(mu > mu_threshold(d, kappa)))
    throw DomainError("roots_alpha_beta: mu must exceed kappa^2 + 2 sqrt(d) kappa");
  return detail::alpha_beta_unchecked(mu, d, kappa);
}

inline std::pair<double, double> roots_alpha_beta(const Nonlinearity& nl) {
  return roots_alpha_beta(nl.mu(), nl.d(), nl.kappa());
}

/// Explicit mu at which G(beta) is known to be positive.
inline double mu_one(double d, double kappa) {
  const double k2 = kappa * kappa;
  return k2 + d + (2.0 / 3.0) * std::sqrt(3.0 * (4.0 * d * k2 + 3.0 * d * d));
}

/// G(beta(mu); mu); increasing in mu.
inline double potential_at_beta(double mu, double d, double kappa) {
  const auto [a, b] = detail::alpha_beta_unchecked(mu, d, kappa);
  (void)a;
  return Nonlinearity(mu, d, kappa).G(b);
}

/// Unique mu with G(beta(mu); mu) = 0. Memoized on the exact bits of (d, kappa).
inline double mu_bar(double d, double kappa) {
  if (!(d > 0.0 && d < 1.0) || !(kappa > 0.0)) throw DomainError("mu_bar: need 0 < d < 1, kappa > 0");
  static std::mutex mutex;
  static std::map<std::pair<std::uint64_t, std::uint64_t>, double> memo;
  const auto key = std::make_pair(detail::bits(d), detail::bits(kappa));
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
  }
  const double lo = mu_threshold(d, kappa);
  const double hi = mu_one(d, kappa);
  RootOptions opt;
  opt.ftol = 1e-15;
  opt.xtol = 0.0;
  const double r = find_root([&](double m) { return potential_at_beta(m, d, kappa); }, lo, hi, opt).x;
  std::lock_guard<std::mutex> lock(mutex);
  memo.emplace(key, r);
  return r;
}

/// Zero of G between alpha and beta; needs G(beta) > 0.
inline double gamma_root(const Nonlinearity& nl) {
  const auto [alpha, beta] = roots_alpha_beta(nl);
  const double gb = nl.G(beta);
  if (!(gb > 0.0)) throw DomainError("gamma_root: G(beta) <= 0, no zero of G in (alpha, beta)");
  RootOptions opt;
  opt.ftol = 1e-14 * std::max(1.0, gb);
  opt.xtol = 0.0;
  return find_root([&](double z) { return nl.G(z); }, alpha, beta, opt).x;
}

/// Lower turning value: the point in (0, alpha] at the same potential as xi.
/// Valid for mu > mu_bar and xi in [alpha, gamma).
inline double eta(double xi, const Nonlinearity& nl) {
  const auto [alpha, beta] = roots_alpha_beta(nl);
  (void)beta;
  const double gam = gamma_root(nl);
  if (!(xi >= alpha && xi < gam)) throw DomainError("eta: xi must lie in [alpha, gamma)");
  if (xi == alpha) return alpha;
  const double level = nl.G(xi);
  RootOptions opt;
  opt.ftol = 0.0;
  opt.xtol = 0.0;
  double z = find_root([&](double s) { return nl.G(s) - level; }, 0.0, alpha, opt).x;
  if (z < 1e-3) {
    // Near the origin G(z) = -z^2 P(z)/2 with P(0) = 1; iterate on that form.
    const SaddleExpansion ex(nl, 0.0, 1);
    for (int i = 0; i < 50; ++i) {
      const double next = std::sqrt(-2.0 * level / ex.P(z));
      if (std::abs(next - z) <= 1e-16 * next) {
        z = next;
        break;
      }
      z = next;
    }
  }
  return z;
}

/// Point in [0, alpha) with G = G(beta); zero at mu = mu_bar. Valid for
/// mu in (mu_c, mu_bar].
inline double omega_star(const Nonlinearity& nl) {
  const double mb = mu_bar(nl.d(), nl.kappa());
  if (nl.mu() == mb) return 0.0;
  if (!(nl.mu() < mb)) throw DomainError("omega_star: mu must not exceed mu_bar");
  const auto [alpha, beta] = roots_alpha_beta(nl);
  const double level = nl.G(beta);
  RootOptions opt;
  opt.ftol = 0.0;
  opt.xtol = 0.0;
  return find_root([&](double s) { return nl.G(s) - level; }, 0.0, alpha, opt).x;
}

/// Upper turning value in [alpha, beta] paired with omega; chi(omega_*) = beta.
inline double chi(double omega, const Nonlinearity& nl) {
  const auto [alpha, beta] = roots_alpha_beta(nl);
  const double ws = omega_star(nl);
  if (!(omega >= ws && omega <= alpha)) throw DomainError("chi: omega must lie in [omega_*, alpha]");
  if (omega == ws) return beta;
  if (omega == alpha) return alpha;
  const double level = nl.G(omega);
  RootOptions opt;
  opt.ftol = 0.0;
  opt.xtol = 0.0;
  return find_root([&](double s) { return nl.G(s) - level; }, alpha, beta, opt).x;
}

/// |g_u(beta(mu_bar); mu_bar)|, the decay rate squared of the front tail.
inline double h_constant(double d, double kappa) {
  const double mb = mu_bar(d, kappa);
  const auto [alpha, beta] = detail::alpha_beta_unchecked(mb, d, kappa);
  return d * beta * (beta - alpha) / (kappa * kappa * (beta + 1.0));
}

/// All thresholds and roots for one (mu, d, kappa).
struct Landscape {
  double mu_c = 0.0;
  double mu_bar = 0.0;
  double mu_one = 0.0;
  std::optional<double> alpha, beta, gamma, omega_star;
};

inline Landscape landscape(double mu, double d, double kappa) {
  Landscape s;
  s.mu_c = mu_threshold(d, kappa);
  s.mu_bar = mcrd::mu_bar(d, kappa);
  s.mu_one = mcrd::mu_one(d, kappa);
  if (mu > s.mu_c) {
    const Nonlinearity nl(mu, d, kappa);
    const auto [a, b] = roots_alpha_beta(nl);
    s.alpha = a;
    s.beta = b;
    if (mu > s.mu_bar) s.gamma = gamma_root(nl);
    else s.omega_star = mcrd::omega_star(nl);
  }
  return s;
}

}  // namespace mcrd
