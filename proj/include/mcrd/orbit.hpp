#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "mcrd/equilibria.hpp"
#include "mcrd/error.hpp"
#include "mcrd/nonlinearity.hpp"
#include "mcrd/quadrature.hpp"
#include "mcrd/roots.hpp"

namespace mcrd {

/// physical: lengths carry sqrt(d), so profiles solve d u'' + g(u) = 0.
/// literal: the unscaled quadrature, i.e. u'' + g(u) = 0.
enum class TimeMapScaling { physical, literal };

namespace detail {

/// log(gap) with gap^2 P(gap) = rhs, rhs given as its logarithm.
inline double solve_log_gap(const SaddleExpansion& ex, double log_rhs) {
  double lg = 0.5 * (log_rhs - std::log(ex.P(0.0)));
  for (int i = 0; i < 100; ++i) {
    const double next = 0.5 * (log_rhs - std::log(ex.P(std::exp(lg))));
    if (std::abs(next - lg) <= 1e-15 * std::max(1.0, std::abs(lg))) return next;
    lg = next;
  }
  return lg;
}

inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

}  // namespace detail

/// Phase portrait data of du'' + g(u; mu) = 0 shared by all orbits at one mu.
struct PhasePortrait {
  Nonlinearity nl;
  double alpha = 0.0, beta = 0.0;
  double G_beta = 0.0;  // forced to 0 on the front branch
  std::optional<double> gamma;
  SaddleExpansion at_zero;
  SaddleExpansion at_beta;
  double reach_zero = 0.0;  // series window around 0
  double reach_beta = 0.0;  // series window below beta
  double scale = 1.0;
  bool front = false;
  double log_abs_G_beta = -std::numeric_limits<double>::infinity();
  double mu_offset = 0.0;  // pinned portraits: mu - mu_bar, too small to add to mu_bar

  PhasePortrait(double mu, double d, double kappa, TimeMapScaling s = TimeMapScaling::physical,
                bool front_branch = false)
      : nl(mu, d, kappa) {
    const auto ab = roots_alpha_beta(nl);
    alpha = ab.first;
    beta = ab.second;
    front = front_branch;
    G_beta = front ? 0.0 : nl.G(beta);
    if (G_beta > 0.0) gamma = gamma_root(nl);
    at_zero = SaddleExpansion(nl, 0.0, 1);
    at_beta = SaddleExpansion(nl, beta, -1);
    reach_zero = std::min(0.2, 0.5 * alpha);
    reach_beta = std::min(0.2 * (1.0 + beta), 0.5 * (beta - alpha));
    scale = (s == TimeMapScaling::physical) ? std::sqrt(d) : 1.0;
    if (G_beta != 0.0) log_abs_G_beta = std::log(std::abs(G_beta));
  }

  /// Portrait at mu = mu_bar + side * exp(log_offset) for offsets below double
  /// resolution of mu: nonlinearity frozen at mu_bar, G(beta) taken to first
  /// order as offset * G_mu(beta).
  static PhasePortrait pinned(double d, double kappa, int side, double log_offset,
                              TimeMapScaling s = TimeMapScaling::physical) {
    if (side != 1 && side != -1) throw DomainError("pinned portrait: side must be +1 or -1");
    PhasePortrait pp(mu_bar(d, kappa), d, kappa, s, true);
    const double slope = pp.nl.G_mu(pp.beta);
    if (!(slope > 0.0)) throw NumericalError("pinned portrait: G_mu(beta) not positive");
    pp.log_abs_G_beta = log_offset + std::log(slope);
    pp.G_beta = side * std::exp(pp.log_abs_G_beta);
    pp.mu_offset = side * std::exp(log_offset);
    if (side > 0) {
      const double lg = detail::solve_log_gap(pp.at_beta, std::log(2.0) + pp.log_abs_G_beta);
      if (!(std::exp(lg) < 0.25 * pp.reach_beta))
        throw DomainError("pinned portrait: offset too large, use mu directly");
      pp.gamma = pp.beta - std::exp(lg);
    }
    return pp;
  }

  double mu() const { return nl.mu() + mu_offset; }
  bool pinned() const { return front && G_beta != 0.0; }
};

enum class PieceKind { sqrt_both, sqrt_one, regular, saddle_cosh, saddle_tail };

/// One smooth stretch of the quadrature dz / sqrt(2 (E - G(z))) written in a
/// parameter p where the integrand w(p) = (dz/dp) / sqrt(2 (E - G)) is bounded.
/// p_low maps to the smaller z end of the stretch.
struct Piece {
  PieceKind kind = PieceKind::regular;
  double p_low = 0.0, p_high = 0.0;
  double a = 0.0, b = 0.0;  // sqrt_both: [a, b]; sqrt_one: turning value a, far end b; regular: [a, b]
  double level = 0.0;
  double log_delta = 0.0;  // saddle kinds: log of the turning gap
  const SaddleExpansion* ex = nullptr;
  const Nonlinearity* nl = nullptr;

  double pmin() const { return std::min(p_low, p_high); }
  double pmax() const { return std::max(p_low, p_high); }

  double z(double p) const {
    switch (kind) {
      case PieceKind::sqrt_both: {
        if (p < 0.25 * std::numbers::pi) {
          const double s = std::sin(p);
          return a + (b - a) * s * s;
        }
        const double c = std::cos(p);
        return b - (b - a) * c * c;
      }
      case PieceKind::sqrt_one: return a + (b - a) * p * p;
      case PieceKind::regular: return p;
      case PieceKind::saddle_cosh: return ex->center() + ex->direction() * cosh_gap(p);
      case PieceKind::saddle_tail: return ex->center() + ex->direction() * std::exp(p);
    }
    return 0.0;
  }

  /// Distance from the saddle for the saddle kinds.
  double gap(double p) const {
    if (kind == PieceKind::saddle_cosh) return cosh_gap(p);
    if (kind == PieceKind::saddle_tail) return std::exp(p);
    return std::abs(z(p) - (ex ? ex->center() : 0.0));
  }

  double w(double p) const {
    switch (kind) {
      case PieceKind::sqrt_both: {
        if (p < 0.25 * std::numbers::pi) {
          const double s = std::sin(p);
          const double zz = a + (b - a) * s * s;
          return std::cos(p) * std::sqrt(2.0 * (b - a) / -nl->G_slope(a, zz));
        }
        const double c = std::cos(p);
        const double zz = b - (b - a) * c * c;
        return std::sin(p) * std::sqrt(2.0 * (b - a) / nl->G_slope(b, zz));
      }
      case PieceKind::sqrt_one: {
        const double zz = a + (b - a) * p * p;
        return std::sqrt(2.0 * std::abs(b - a) / std::abs(nl->G_slope(a, zz)));
      }
      case PieceKind::regular: return 1.0 / std::sqrt(2.0 * (level - nl->G(p)));
      case PieceKind::saddle_cosh: {
        const double y = cosh_gap(p);
        const double e = std::exp(-p);
        const double q = 2.0 * std::exp(log_delta - p) / ((1.0 + e) * (1.0 + e));
        const double delta = std::exp(log_delta);
        return 1.0 / std::sqrt(ex->P(y) + q * ex->P_slope(delta, y));
      }
      case PieceKind::saddle_tail: return 1.0 / std::sqrt(ex->P(std::exp(p)));
    }
    return 0.0;
  }

 private:
  double cosh_gap(double t) const {
    return 0.5 * std::exp(log_delta + t) * (1.0 + std::exp(-2.0 * t));
  }
};

/// Distance (as a log) of a turning value from the nearby saddle, or the
/// value itself when it is a plain turning point.
struct TurningEnd {
  bool near_saddle = false;
  double value = 0.0;
  double log_gap = 0.0;
};

/// Monotone stretch of a trajectory between two turning values lo < hi
/// sharing the energy level E = G(lo) = G(hi).
class Orbit {
 public:
  Orbit() = default;
  Orbit(const PhasePortrait* pp, double level, TurningEnd lo, TurningEnd hi)
      : pp_(pp), level_(level), lo_(lo), hi_(hi) {
    build();
  }
  /// Prebuilt pieces, ordered from the lower z end; used for the unbounded
  /// homoclinic and heteroclinic orbits (truncated tails).
  Orbit(const PhasePortrait* pp, double level, TurningEnd lo, TurningEnd hi, std::vector<Piece> pieces)
      : pp_(pp), level_(level), lo_(lo), hi_(hi), pieces_(std::move(pieces)) {}

  const PhasePortrait& portrait() const { return *pp_; }
  double level() const { return level_; }
  const TurningEnd& lo() const { return lo_; }
  const TurningEnd& hi() const { return hi_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  double scale() const { return pp_->scale; }

  /// scale * integral of dz / sqrt(2 (E - G)) over [lo, hi].
  double length(const QuadratureOptions& opt = {}) const {
    double s = 0.0;
    for (const auto& pc : pieces_)
      s += gauss_adaptive([&](double p) { return pc.w(p); }, pc.pmin(), pc.pmax(), opt).value;
    return pp_->scale * s;
  }

  /// scale * integral of z dz / sqrt(2 (E - G)); divided by length gives the mean.
  double moment(const QuadratureOptions& opt = {}) const {
    double s = 0.0;
    for (const auto& pc : pieces_)
      s += gauss_adaptive([&](double p) { return pc.z(p) * pc.w(p); }, pc.pmin(), pc.pmax(), opt).value;
    return pp_->scale * s;
  }

 private:
  static constexpr double kFlatSpan = 45.0;

  void add_saddle_end(const TurningEnd& e, bool lower_end) {
    const SaddleExpansion& ex = lower_end ? pp_->at_zero : pp_->at_beta;
    const double reach = lower_end ? pp_->reach_zero : pp_->reach_beta;
    const double ratio = std::exp(e.log_gap - std::log(reach));
    const double t0 = std::log(reach) - e.log_gap + std::log1p(std::sqrt(std::max(0.0, 1.0 - ratio * ratio)));
    std::vector<std::pair<double, double>> spans;
    if (t0 > kFlatSpan) spans = {{0.0, t0 - kFlatSpan}, {t0 - kFlatSpan, t0}};
    else spans = {{0.0, t0}};
    std::vector<Piece> out;
    for (auto [t_a, t_b] : spans) {
      Piece pc;
      pc.kind = PieceKind::saddle_cosh;
      pc.ex = &ex;
      pc.nl = &pp_->nl;
      pc.log_delta = e.log_gap;
      // z grows with t at 0 and shrinks with t at beta.
      if (lower_end) {
        pc.p_low = t_a;
        pc.p_high = t_b;
      } else {
        pc.p_low = t_b;
        pc.p_high = t_a;
      }
      out.push_back(pc);
    }
    if (lower_end) pieces_.insert(pieces_.end(), out.begin(), out.end());
    else pieces_.insert(pieces_.end(), out.rbegin(), out.rend());
  }

  void build() {
    const double zlo_join = pp_->reach_zero;
    const double zhi_join = pp_->beta - pp_->reach_beta;
    const Nonlinearity* nl = &pp_->nl;
    if (!lo_.near_saddle && !hi_.near_saddle) {
      Piece pc;
      pc.kind = PieceKind::sqrt_both;
      pc.nl = nl;
      pc.a = lo_.value;
      pc.b = hi_.value;
      pc.p_low = 0.0;
      pc.p_high = 0.5 * std::numbers::pi;
      pieces_.push_back(pc);
      return;
    }
    if (lo_.near_saddle) add_saddle_end(lo_, true);
    else {
      Piece pc;
      pc.kind = PieceKind::sqrt_one;
      pc.nl = nl;
      pc.a = lo_.value;
      pc.b = zhi_join;
      pc.p_low = 0.0;
      pc.p_high = 1.0;
      pieces_.push_back(pc);
    }
    if (lo_.near_saddle && hi_.near_saddle) {
      Piece pc;
      pc.kind = PieceKind::regular;
      pc.nl = nl;
      pc.level = level_;
      pc.a = zlo_join;
      pc.b = zhi_join;
      pc.p_low = zlo_join;
      pc.p_high = zhi_join;
      pieces_.push_back(pc);
    }
    if (hi_.near_saddle) add_saddle_end(hi_, false);
    else {
      Piece pc;
      pc.kind = PieceKind::sqrt_one;
      pc.nl = nl;
      pc.a = hi_.value;
      pc.b = zlo_join;
      pc.p_low = 1.0;
      pc.p_high = 0.0;
      pieces_.push_back(pc);
    }
  }

  const PhasePortrait* pp_ = nullptr;
  double level_ = 0.0;
  TurningEnd lo_, hi_;
  std::vector<Piece> pieces_;
};

namespace detail {

inline RootOptions tight_root_options() {
  RootOptions opt;
  opt.ftol = 0.0;
  opt.xtol = 0.0;
  opt.max_iter = 400;
  return opt;
}

/// Lower turning value near 0 at level E < 0 given log(-2E).
inline TurningEnd lower_end_at_level(const PhasePortrait& pp, double level, double log_m2e) {
  const double guess = std::exp(0.5 * log_m2e);
  if (guess < 0.25 * pp.reach_zero) {
    TurningEnd e;
    e.near_saddle = true;
    e.log_gap = solve_log_gap(pp.at_zero, log_m2e);
    e.value = std::exp(e.log_gap);
    if (e.value < 0.25 * pp.reach_zero) return e;
  }
  const auto r = find_root([&](double z) { return pp.nl.G(z) - level; }, 0.0, pp.alpha,
                           tight_root_options());
  return TurningEnd{false, r.x, std::log(r.x)};
}

}  // namespace detail

/// Spike branch orbit from eta (given as log eta) up to xi in (alpha, gamma).
inline Orbit spike_orbit_from_log_eta(const PhasePortrait& pp, double log_eta) {
  if (!pp.gamma) throw DomainError("spike orbit needs mu > mu_bar");
  if (!(log_eta < std::log(pp.alpha))) throw DomainError("spike orbit: eta must lie below alpha");
  const double eta = std::exp(log_eta);
  TurningEnd lo;
  double level;
  if (eta < 0.25 * pp.reach_zero) {
    lo = {true, eta, log_eta};
    level = -0.5 * eta * eta * pp.at_zero.P(eta);
  } else {
    lo = {false, eta, log_eta};
    level = pp.nl.G(eta);
  }
  // Upper end near the beta saddle: gap^2 P(gap) = 2 (G(beta) - E), in logs.
  const double log_rhs =
      lo.near_saddle ? detail::log_add_exp(std::log(2.0) + pp.log_abs_G_beta, 2.0 * log_eta + std::log(pp.at_zero.P(eta)))
                     : std::log(2.0 * (pp.G_beta - level));
  if (std::exp(0.5 * (log_rhs - std::log(pp.at_beta.P(0.0)))) < 0.25 * pp.reach_beta) {
    const double lg = detail::solve_log_gap(pp.at_beta, log_rhs);
    if (std::exp(lg) < 0.25 * pp.reach_beta) return Orbit(&pp, level, lo, TurningEnd{true, pp.beta - std::exp(lg), lg});
  }
  double xi = *pp.gamma;
  if (level < 0.0) {
    const double glo = pp.nl.G(pp.alpha) - level;
    const double ghi = pp.nl.G(*pp.gamma) - level;
    if (glo < 0.0 && ghi > 0.0)
      xi = find_root([&](double z) { return pp.nl.G(z) - level; }, pp.alpha, *pp.gamma,
                     detail::tight_root_options())
               .x;
    else if (glo >= 0.0) xi = pp.alpha;
  }
  return Orbit(&pp, level, lo, TurningEnd{false, xi, std::log(xi)});
}

/// Spike branch orbit from its upper turning value xi in (alpha, gamma).
inline Orbit spike_orbit_from_xi(const PhasePortrait& pp, double xi) {
  if (!pp.gamma) throw DomainError("spike orbit needs mu > mu_bar");
  if (!(xi > pp.alpha && xi < *pp.gamma)) throw DomainError("rho: xi must lie in (alpha, gamma)");
  const double level = pp.nl.G(xi);
  if (!(level < 0.0)) throw DomainError("rho: xi too close to gamma for double precision");
  TurningEnd lo = detail::lower_end_at_level(pp, level, std::log(-2.0 * level));
  if (lo.near_saddle) {
    // Recompute the level from the series so both ends agree.
    const double eta = lo.value;
    return Orbit(&pp, -0.5 * eta * eta * pp.at_zero.P(eta), lo, TurningEnd{false, xi, std::log(xi)});
  }
  return Orbit(&pp, level, lo, TurningEnd{false, xi, std::log(xi)});
}

/// Increasing branch orbit from omega up to chi = beta - delta, with delta
/// given as log delta.
inline Orbit increasing_orbit_from_log_gap(const PhasePortrait& pp, double log_delta) {
  if (pp.gamma) throw DomainError("increasing orbit needs mu <= mu_bar");
  if (!(log_delta < std::log(pp.beta - pp.alpha)))
    throw DomainError("increasing orbit: chi must lie above alpha");
  const double delta = std::exp(log_delta);
  TurningEnd hi;
  double level, log_m2e;
  if (delta < 0.25 * pp.reach_beta) {
    hi = {true, pp.beta - delta, log_delta};
    const double pd = pp.at_beta.P(delta);
    level = pp.G_beta - 0.5 * delta * delta * pd;
    log_m2e = pp.front ? detail::log_add_exp(std::log(2.0) + pp.log_abs_G_beta, 2.0 * log_delta + std::log(pd))
                       : std::log(-2.0 * level);
  } else {
    hi = {false, pp.beta - delta, log_delta};
    level = pp.nl.G(hi.value);
    log_m2e = std::log(-2.0 * level);
  }
  TurningEnd lo = detail::lower_end_at_level(pp, level, log_m2e);
  return Orbit(&pp, level, lo, hi);
}

/// Increasing branch orbit from its lower turning value omega.
inline Orbit increasing_orbit_from_omega(const PhasePortrait& pp, double omega) {
  if (pp.gamma) throw DomainError("increasing orbit needs mu <= mu_bar");
  if (!(omega > 0.0 && omega < pp.alpha)) throw DomainError("rho_tilde: omega must lie in (omega_*, alpha)");
  const double level = pp.nl.G(omega);
  const double rhs = 2.0 * (pp.G_beta - level);
  if (!(rhs > 0.0)) throw DomainError("rho_tilde: omega must exceed omega_*");
  TurningEnd hi;
  const double guess = std::sqrt(rhs / pp.at_beta.P(0.0));
  if (guess < 0.25 * pp.reach_beta) {
    const double lg = detail::solve_log_gap(pp.at_beta, std::log(rhs));
    hi = {true, pp.beta - std::exp(lg), lg};
  } else {
    const double x = find_root([&](double z) { return pp.nl.G(z) - level; }, pp.alpha, pp.beta,
                               detail::tight_root_options())
                         .x;
    hi = {false, x, std::log(pp.beta - x)};
  }
  TurningEnd lo{false, omega, std::log(omega)};
  if (omega < 0.25 * pp.reach_zero) lo.near_saddle = true;
  return Orbit(&pp, level, lo, hi);
}

}  // namespace mcrd
