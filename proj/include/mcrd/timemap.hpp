#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcrd/equilibria.hpp"
#include "mcrd/error.hpp"
#include "mcrd/orbit.hpp"
#include "mcrd/quadrature.hpp"
#include "mcrd/roots.hpp"

namespace mcrd {

/// Cumulative arclength-in-x table along an orbit, from its lower z end.
class OrbitCurve {
 public:
  OrbitCurve() = default;
  explicit OrbitCurve(Orbit orbit, int panels_per_piece = 32) : orbit_(std::move(orbit)) {
    double x = 0.0;
    const auto& pcs = orbit_.pieces();
    for (std::size_t k = 0; k < pcs.size(); ++k) {
      const Piece& pc = pcs[k];
      const double span = pc.p_high - pc.p_low;
      const int m = std::max(panels_per_piece, static_cast<int>(std::ceil(std::abs(span) / 0.5)));
      for (int i = 0; i < m; ++i) {
        const double pa = pc.p_low + span * i / m;
        const double pb = (i + 1 == m) ? pc.p_high : pc.p_low + span * (i + 1) / m;
        add_panel(static_cast<int>(k), pa, pb, x, 0);
      }
    }
    total_ = x;
  }

  const Orbit& orbit() const { return orbit_; }
  double total() const { return total_; }

  /// z at distance x (0 <= x <= total) from the lower end.
  double z_at(double x) const { return eval(x).first; }

  /// (z, dz/dx) at distance x from the lower end.
  std::pair<double, double> eval(double x) const {
    if (panels_.empty()) throw NumericalError("OrbitCurve: empty");
    x = std::clamp(x, 0.0, total_);
    auto it = std::upper_bound(panels_.begin(), panels_.end(), x,
                               [](double v, const Panel& p) { return v < p.x_to; });
    if (it == panels_.end()) --it;
    const Panel& pn = *it;
    const Piece& pc = orbit_.pieces()[pn.piece];
    const double sc = orbit_.scale();
    const double dir = pn.p_to > pn.p_from ? 1.0 : -1.0;
    double lo = std::min(pn.p_from, pn.p_to), hi = std::max(pn.p_from, pn.p_to);
    const double frac = (pn.x_to > pn.x_from) ? (x - pn.x_from) / (pn.x_to - pn.x_from) : 0.0;
    double p = pn.p_from + (pn.p_to - pn.p_from) * frac;
    for (int it2 = 0; it2 < 60; ++it2) {
      const double xp = pn.x_from + sc * dir * gauss_fixed([&](double s) { return pc.w(s); }, pn.p_from, p, 24);
      const double f = xp - x;
      if (f * dir > 0.0) hi = std::min(hi, p);
      else lo = std::max(lo, p);
      if (std::abs(f) <= 2e-16 * (1.0 + std::abs(x))) break;
      double next = p - f / (sc * dir * pc.w(p));
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == p) break;
      p = next;
      if (hi - lo <= 1e-16 * (1.0 + std::abs(p))) break;
    }
    const double wz = pc.w(p);
    // dz/dx = (dz/dp) / (dx/dp); dx/dp = sc * w along increasing x.
    const double h = 1e-7 * (1.0 + std::abs(p));
    const double dzdp = (pc.z(p + h) - pc.z(p - h)) / (2.0 * h);
    return {pc.z(p), std::abs(dzdp) / (sc * wz)};
  }

 private:
  struct Panel {
    int piece;
    double p_from, p_to;
    double x_from, x_to;
  };

  void add_panel(int piece, double pa, double pb, double& x, int depth) {
    const Piece& pc = orbit_.pieces()[piece];
    auto w = [&](double s) { return pc.w(s); };
    const double coarse = std::abs(gauss_fixed(w, pa, pb, 20));
    const double fine = std::abs(gauss_fixed(w, pa, pb, 40));
    if (std::abs(fine - coarse) > 1e-14 * std::max(fine, 1e-300) && depth < 20) {
      const double mid = 0.5 * (pa + pb);
      add_panel(piece, pa, mid, x, depth + 1);
      add_panel(piece, mid, pb, x, depth + 1);
      return;
    }
    const double dx = orbit_.scale() * fine;
    panels_.push_back({piece, pa, pb, x, x + dx});
    x += dx;
  }

  Orbit orbit_;
  std::vector<Panel> panels_;
  double total_ = 0.0;
};

enum class Branch { spike, increasing, front, homoclinic, homoclinic_beta, heteroclinic };

inline std::string to_string(Branch b) {
  switch (b) {
    case Branch::spike: return "spike-decreasing";
    case Branch::increasing: return "increasing";
    case Branch::front: return "front";
    case Branch::homoclinic: return "homoclinic";
    case Branch::homoclinic_beta: return "homoclinic-beta";
    case Branch::heteroclinic: return "heteroclinic";
  }
  return "?";
}

/// Time-map lengths: spike orbit through xi (mu > mu_bar).
inline double rho(double xi, double mu, double d, double kappa,
                  TimeMapScaling s = TimeMapScaling::physical) {
  const PhasePortrait pp(mu, d, kappa, s);
  if (!pp.gamma) throw DomainError("rho: mu must exceed mu_bar");
  return spike_orbit_from_xi(pp, xi).length();
}

/// Increasing orbit through omega (mu_c < mu <= mu_bar). At mu = mu_bar pass
/// front = true to force G(beta) = 0.
inline double rho_tilde(double omega, double mu, double d, double kappa,
                        TimeMapScaling s = TimeMapScaling::physical, bool front = false) {
  const PhasePortrait pp(mu, d, kappa, s, front);
  if (pp.gamma) throw DomainError("rho_tilde: mu must not exceed mu_bar");
  return increasing_orbit_from_omega(pp, omega).length();
}

/// A solved branch: the orbit whose length equals ell.
struct BranchSolution {
  std::shared_ptr<const PhasePortrait> portrait;
  Orbit orbit;
  Branch branch = Branch::spike;
  double ell = 0.0;
  double length = 0.0;     // orbit length actually achieved
  double log_param = 0.0;  // log eta (spike) or log(beta - chi) (increasing)

  double mu() const { return portrait->mu(); }
  /// u(0): xi on the spike branch, omega on the increasing branch.
  double boundary_value() const {
    return branch == Branch::spike ? orbit.hi().value : orbit.lo().value;
  }
  double endpoint_value() const {
    return branch == Branch::spike ? orbit.lo().value : orbit.hi().value;
  }
  double mean() const { return orbit.moment() / orbit.length(); }
};

namespace detail {

struct LogSolveResult {
  double p = 0.0;
  double length = 0.0;
};

/// Solves length(p) = target for the log parameter p below p_top, where the
/// length diverges as p -> -inf with slope about -slope_hint.
template <class LengthOf>
LogSolveResult solve_log_length(LengthOf&& length_of, double p_top, double target, double slope_hint) {
  auto f = [&](double p) { return length_of(p) - target; };
  double p_far = p_top - 12.0;
  double f_far = f(p_far);
  for (int i = 0; i < 80 && f_far <= 0.0; ++i) {
    p_far -= std::max(1.0, 1.25 * (-f_far) / slope_hint);
    if (p_far < -1e6) break;
    f_far = f(p_far);
  }
  constexpr int kScan = 24;
  std::vector<double> ps(kScan + 1), fs(kScan + 1);
  ps[0] = p_far;
  fs[0] = f_far;
  for (int i = 1; i <= kScan; ++i) {
    ps[i] = p_far + (p_top - p_far) * i / kScan;
    fs[i] = f(ps[i]);
  }
  if (f_far > 0.0) {
    for (int i = 0; i < kScan; ++i) {
      if (fs[i] > 0.0 && fs[i + 1] <= 0.0) {
        RootOptions opt;
        opt.ftol = 1e-12 * target;
        opt.xtol = 0.0;
        const auto r = find_root(f, ps[i], ps[i + 1], opt);
        return {r.x, r.fx + target};
      }
    }
  }
  // Nothing crosses: report the smallest length the branch reaches.
  int imin = 0;
  for (int i = 1; i <= kScan; ++i)
    if (fs[i] < fs[imin]) imin = i;
  const double a = ps[std::max(0, imin - 1)], b = ps[std::min(kScan, imin + 1)];
  const auto m = golden_min([&](double p) { return length_of(p); }, a, b, 1e-10);
  const double lmin = std::min(m.fx, fs[imin] + target);
  throw LengthTooShort("ell below minimal time-map length " + std::to_string(lmin), lmin);
}

inline double spike_log_top(const PhasePortrait& pp) { return std::log(pp.alpha) + std::log1p(-1e-4); }
inline double increasing_log_top(const PhasePortrait& pp) {
  return std::log(pp.beta - pp.alpha) + std::log1p(-1e-4);
}

}  // namespace detail

/// Spike branch on a prepared portrait.
inline BranchSolution solve_spike_on(std::shared_ptr<const PhasePortrait> pp, double ell) {
  if (!pp->gamma) throw DomainError("solve_xi: mu must exceed mu_bar");
  if (!(ell > 0.0)) throw DomainError("solve_xi: ell must be positive");
  const auto r = detail::solve_log_length(
      [&](double p) { return spike_orbit_from_log_eta(*pp, p).length(); }, detail::spike_log_top(*pp), ell,
      pp->scale / std::sqrt(pp->at_zero.P(0.0)));
  BranchSolution sol;
  sol.portrait = pp;
  sol.orbit = spike_orbit_from_log_eta(*pp, r.p);
  sol.branch = Branch::spike;
  sol.ell = ell;
  sol.length = r.length;
  sol.log_param = r.p;
  return sol;
}

/// Spike branch (iii): u decreasing on [0, ell] from xi to eta.
inline BranchSolution solve_spike(double mu, double ell, double d, double kappa,
                                  TimeMapScaling s = TimeMapScaling::physical) {
  return solve_spike_on(std::make_shared<const PhasePortrait>(mu, d, kappa, s), ell);
}

/// Spike branch at mu = mu_bar + exp(log_offset), for offsets too small to
/// resolve in mu itself.
inline BranchSolution solve_spike_pinned(double log_offset, double ell, double d, double kappa,
                                         TimeMapScaling s = TimeMapScaling::physical) {
  return solve_spike_on(std::make_shared<const PhasePortrait>(PhasePortrait::pinned(d, kappa, 1, log_offset, s)),
                        ell);
}

inline double solve_xi(double mu, double ell, double d, double kappa,
                       TimeMapScaling s = TimeMapScaling::physical) {
  return solve_spike(mu, ell, d, kappa, s).boundary_value();
}

/// Increasing branch (i) for mu in (mu_c, mu_bar); the front (ii) when
/// front = true, which evaluates at mu_bar(d, kappa) with G(beta) = 0.
inline BranchSolution solve_increasing(double mu, double ell, double d, double kappa,
                                       TimeMapScaling s = TimeMapScaling::physical, bool front = false) {
  if (front) mu = mu_bar(d, kappa);
  auto pp = std::make_shared<const PhasePortrait>(mu, d, kappa, s, front);
  if (pp->gamma) throw DomainError("solve_omega: mu must not exceed mu_bar");
  if (!(ell > 0.0)) throw DomainError("solve_omega: ell must be positive");
  const double slope = pp->scale / std::sqrt(pp->at_beta.P(0.0)) +
                       (front ? pp->scale / std::sqrt(pp->at_zero.P(0.0)) : 0.0);
  const auto r = detail::solve_log_length(
      [&](double p) { return increasing_orbit_from_log_gap(*pp, p).length(); },
      detail::increasing_log_top(*pp), ell, slope);
  BranchSolution sol;
  sol.portrait = pp;
  sol.orbit = increasing_orbit_from_log_gap(*pp, r.p);
  sol.branch = front ? Branch::front : Branch::increasing;
  sol.ell = ell;
  sol.length = r.length;
  sol.log_param = r.p;
  return sol;
}

inline double solve_omega(double mu, double ell, double d, double kappa,
                          TimeMapScaling s = TimeMapScaling::physical, bool front = false) {
  return solve_increasing(mu, ell, d, kappa, s, front).boundary_value();
}

/// Smallest ell the branch admits (scan plus golden-section refinement).
inline double minimal_length(Branch branch, double mu, double d, double kappa,
                             TimeMapScaling s = TimeMapScaling::physical) {
  try {
    if (branch == Branch::spike) solve_spike(mu, 1e-300, d, kappa, s);
    else solve_increasing(mu, 1e-300, d, kappa, s, branch == Branch::front);
  } catch (const LengthTooShort& e) {
    return e.minimal_length();
  }
  return 0.0;
}

/// Sampled stationary profile on a uniform grid of [0, ell].
struct ProfileSolution {
  std::vector<double> xs, us;
  double mu = 0.0;
  double ell = 0.0;
  Branch branch = Branch::spike;
  double boundary_value = 0.0;  // u(0)
  double endpoint = 0.0;        // u(ell)
  double level = 0.0;           // first-integral constant
  double mean_integral = 0.0;   // quadrature value of <u>
  double energy_spread = 0.0;   // relative spread of (d/2) u_x^2 + G(u)
};

/// Evaluates a solved profile at any x, with the even reflections across
/// x = 0 and x = length used for centered stencils at the ends.
class ProfileCurve {
 public:
  ProfileCurve(std::shared_ptr<const PhasePortrait> pp, Orbit orbit, bool decreasing, double shift = 0.0)
      : pp_(std::move(pp)), curve_(std::move(orbit)), decreasing_(decreasing), shift_(shift) {}

  double length() const { return curve_.total(); }
  const OrbitCurve& curve() const { return curve_; }

  double u_at(double x) const {
    const double L = curve_.total();
    if (shift_ == 0.0) {
      if (x < 0.0) x = -x;
      if (x > L) x = 2.0 * L - x;
    }
    const double s = decreasing_ ? L - x : x + shift_;
    return curve_.z_at(s);
  }

 private:
  std::shared_ptr<const PhasePortrait> pp_;
  OrbitCurve curve_;
  bool decreasing_;
  double shift_;
};

namespace detail {

/// Relative spread of (d/2) u_x^2 + G(u) along the sampled points, with u_x
/// from a five-point centered difference of the continuous curve.
inline double energy_spread(const ProfileCurve& pc, const PhasePortrait& pp, const std::vector<double>& xs,
                            double h = 1e-3) {
  const double dcoef = pp.scale * pp.scale;  // d in physical scaling, 1 in literal
  double emin = std::numeric_limits<double>::infinity(), emax = -emin, gmax = 0.0;
  for (double x : xs) {
    const double u = pc.u_at(x);
    const double ux = (pc.u_at(x - 2 * h) - 8.0 * pc.u_at(x - h) + 8.0 * pc.u_at(x + h) - pc.u_at(x + 2 * h)) /
                      (12.0 * h);
    const double G = pp.nl.G(u);
    const double e = 0.5 * dcoef * ux * ux + G;
    emin = std::min(emin, e);
    emax = std::max(emax, e);
    gmax = std::max(gmax, std::abs(G));
  }
  return (emax - emin) / std::max(gmax, 1e-300);
}

}  // namespace detail

inline ProfileSolution sample_profile(const ProfileCurve& pc, const PhasePortrait& pp, Branch branch, double ell,
                                      int n, double level, double mean_integral, bool with_energy = true) {
  if (n < 16) throw DomainError("profile: need n >= 16 samples");
  ProfileSolution out;
  out.mu = pp.mu();
  out.ell = ell;
  out.branch = branch;
  out.level = level;
  out.mean_integral = mean_integral;
  out.xs.resize(n);
  out.us.resize(n);
  const double L = pc.length();
  for (int i = 0; i < n; ++i) {
    out.xs[i] = ell * i / (n - 1);
    out.us[i] = pc.u_at(L * i / (n - 1));
  }
  out.boundary_value = out.us.front();
  out.endpoint = out.us.back();
  if (with_energy) {
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = L * i / (n - 1);
    out.energy_spread = detail::energy_spread(pc, pp, xs);
  }
  return out;
}

/// Samples a solved branch on n uniform points of [0, ell].
inline ProfileSolution profile_from_solution(const BranchSolution& sol, int n, bool with_energy = true) {
  const bool decreasing = sol.branch == Branch::spike;
  ProfileCurve pc(sol.portrait, sol.orbit, decreasing);
  auto out = sample_profile(pc, *sol.portrait, sol.branch, sol.ell, n, sol.orbit.level(), sol.mean(), with_energy);
  // Exact turning values where the samples only carry rounding.
  out.boundary_value = sol.boundary_value();
  out.endpoint = sol.endpoint_value();
  return out;
}

/// Profile from its boundary value u(0): xi on the spike branch, omega on the
/// increasing branch (front = true at mu_bar). The length is the time map at
/// that value.
inline ProfileSolution profile_from_boundary(Branch branch, double value, double mu, double d, double kappa, int n,
                                             TimeMapScaling s = TimeMapScaling::physical) {
  const bool front = branch == Branch::front;
  if (front) mu = mu_bar(d, kappa);
  auto pp = std::make_shared<const PhasePortrait>(mu, d, kappa, s, front);
  BranchSolution sol;
  sol.portrait = pp;
  sol.branch = branch;
  if (branch == Branch::spike) sol.orbit = spike_orbit_from_xi(*pp, value);
  else if (branch == Branch::increasing || front) sol.orbit = increasing_orbit_from_omega(*pp, value);
  else throw DomainError("profile_from_boundary: branch must be spike, increasing or front");
  sol.length = sol.orbit.length();
  sol.ell = sol.length;
  return profile_from_solution(sol, n);
}

/// Trapezoid mean of the samples.
inline double mean_u(const ProfileSolution& p) {
  const std::size_t n = p.us.size();
  if (n < 2) throw DomainError("mean_u: need at least two samples");
  double s = 0.5 * (p.us.front() + p.us.back());
  for (std::size_t i = 1; i + 1 < n; ++i) s += p.us[i];
  return s / static_cast<double>(n - 1);
}

/// <u> by quadrature of the time-map moment: (1/ell) int z dz / sqrt(2(E - G)).
inline double mean_u_integral(Branch branch, double value, double mu, double d, double kappa,
                              TimeMapScaling s = TimeMapScaling::physical) {
  const bool front = branch == Branch::front;
  if (front) mu = mu_bar(d, kappa);
  const PhasePortrait pp(mu, d, kappa, s, front);
  const Orbit o = branch == Branch::spike ? spike_orbit_from_xi(pp, value) : increasing_orbit_from_omega(pp, value);
  return o.moment() / o.length();
}

/// Large-ell limit of <u(.; mu, ell)>.
inline double mean_limit(double mu, double d, double kappa) {
  const double mb = mu_bar(d, kappa);
  if (mu > mb) return 0.0;
  const auto [a, b] = detail::alpha_beta_unchecked(mu, d, kappa);
  (void)a;
  if (mu == mb) return b / (1.0 + std::sqrt(h_constant(d, kappa)));
  return b;
}

struct MassConstraintOptions {
  double eps_r_fraction = 1e-3;  // left end mu_bar + fraction * (M - mu_bar)
  int scan_points = 16;
  int n = 2048;
  bool with_energy = true;
  TimeMapScaling scaling = TimeMapScaling::physical;
  int offset_scan_points = 48;     // coarse points in log(mu - mu_bar) below pinned_below
  double log_offset_floor = -650.0;
  double pinned_below = 1e-8;      // mu - mu_bar below which mu is held at mu_bar
};

/// (u*, v*, w*) with v* = mu* - d u*, w* = u*, solving M = mu* + (1 - d) <u*>.
struct StationaryTriple {
  ProfileSolution u;
  std::vector<double> v, w;
  double M = 0.0;
  double mu_star = 0.0;
  double d = 0.0, kappa = 0.0;
  double mean_u = 0.0;  // quadrature mean
  double mean_v = 0.0;
  double mass_residual = 0.0;
  int sign_changes = 0;  // roots seen by the coarse scan
  BranchSolution solution;
};

inline StationaryTriple make_triple(const BranchSolution& sol, double M, double d, double kappa, int n,
                                    bool with_energy = true) {
  StationaryTriple t;
  t.solution = sol;
  t.M = M;
  t.mu_star = sol.mu();
  t.d = d;
  t.kappa = kappa;
  t.u = profile_from_solution(sol, n, with_energy);
  t.mean_u = sol.mean();
  t.mean_v = t.mu_star - d * t.mean_u;
  t.mass_residual = (sol.portrait->nl.mu() - M) + sol.portrait->mu_offset + (1.0 - d) * t.mean_u;
  t.v.resize(n);
  t.w = t.u.us;
  for (int i = 0; i < n; ++i) {
    t.v[i] = t.mu_star - d * t.u.us[i];
    if (!(t.v[i] > 0.0))
      throw NumericalError("stationary triple: v* not positive at x = " + std::to_string(t.u.xs[i]));
  }
  return t;
}

namespace detail {

/// Scans q = log(mu - mu_bar) upward from opt.log_offset_floor to q_top and
/// returns the root of the mass equation closest to mu_bar.
inline StationaryTriple solve_mass_near_mu_bar(double M, double ell, double d, double kappa, double q_top,
                                               const MassConstraintOptions& opt) {
  const double mb = mu_bar(d, kappa);
  auto spike_at = [&](double q) {
    if (q > std::log(opt.pinned_below)) return solve_spike(mb + std::exp(q), ell, d, kappa, opt.scaling);
    return solve_spike_pinned(q, ell, d, kappa, opt.scaling);
  };
  auto F = [&](double q) { return (M - mb - std::exp(q)) / (1.0 - d) - spike_at(q).mean(); };
  // Coarse steps far below, where the mean drifts only logarithmically;
  // unit-ish steps over the last decades where mesa and spike roots crowd.
  const double q_lo = opt.log_offset_floor;
  const double q_mid = std::max(q_lo, std::min(q_top - 1.0, std::log(opt.pinned_below)));
  std::vector<double> qs;
  const int coarse = std::max(2, opt.offset_scan_points);
  for (int i = 0; i < coarse; ++i) qs.push_back(q_lo + (q_mid - q_lo) * i / coarse);
  const int fine = std::max(2, static_cast<int>(std::ceil(2.0 * (q_top - q_mid))));
  for (int i = 0; i <= fine; ++i) qs.push_back(q_mid + (q_top - q_mid) * i / fine);
  const int m = static_cast<int>(qs.size());
  std::vector<double> fs(m);
  std::vector<bool> ok(m, false);
  for (int i = 0; i < m; ++i) {
    try {
      fs[i] = F(qs[i]);
      ok[i] = true;
    } catch (const LengthTooShort&) {
    }
  }
  int changes = 0, first = -1;
  for (int i = 0; i + 1 < m; ++i) {
    if (ok[i] && ok[i + 1] && ((fs[i] > 0.0) != (fs[i + 1] > 0.0))) {
      ++changes;
      if (first < 0) first = i;
    }
  }
  if (first < 0) throw NumericalError("solve_mass_constraint: no bracket for mu* (ell too small?)");
  RootOptions ro;
  ro.ftol = 1e-13;
  ro.xtol = 0.0;
  const double q_star = find_root(F, qs[first], qs[first + 1], ro).x;
  StationaryTriple t = make_triple(spike_at(q_star), M, d, kappa, opt.n, opt.with_energy);
  t.sign_changes = changes;
  return t;
}

}  // namespace detail

/// Spike-branch solution of the nonlocal problem for total mass M on [0, ell].
inline StationaryTriple solve_mass_constraint(double M, double ell, double d, double kappa,
                                              const MassConstraintOptions& opt = {}) {
  if (!(d > 0.0 && d < 1.0)) throw DomainError("solve_mass_constraint: need 0 < d < 1");
  const double mb = mu_bar(d, kappa);
  if (!(M > mb)) throw DomainError("solve_mass_constraint: M must exceed mu_bar");
  const double left = mb + opt.eps_r_fraction * (M - mb);
  auto F = [&](double mu) {
    if (mu >= M) return -solve_spike(mu, ell, d, kappa, opt.scaling).mean();
    return (M - mu) / (1.0 - d) - solve_spike(mu, ell, d, kappa, opt.scaling).mean();
  };
  // Geometric spacing in mu - mu_bar: the spike widens quickly near mu_bar.
  const int m = std::max(4, opt.scan_points);
  std::vector<double> mus(m), fs(m);
  std::vector<bool> ok(m, false);
  for (int i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / (m - 1);
    mus[i] = mb + (left - mb) * std::pow((M - mb) / (left - mb), t);
    try {
      fs[i] = F(mus[i]);
      ok[i] = true;
    } catch (const LengthTooShort&) {
    }
  }
  int changes = 0, first = -1;
  for (int i = 0; i + 1 < m; ++i) {
    if (ok[i] && ok[i + 1] && ((fs[i] > 0.0) != (fs[i + 1] > 0.0))) {
      ++changes;
      if (first < 0) first = i;
    }
  }
  RootOptions ro;
  ro.ftol = 1e-13;
  ro.xtol = 0.0;
  if (first >= 0) {
    const double mu_star = find_root(F, mus[first], mus[first + 1], ro).x;
    auto sol = solve_spike(mu_star, ell, d, kappa, opt.scaling);
    StationaryTriple t = make_triple(sol, M, d, kappa, opt.n, opt.with_energy);
    t.sign_changes = changes;
    return t;
  }
  StationaryTriple t = detail::solve_mass_near_mu_bar(M, ell, d, kappa, std::log(left - mb), opt);
  t.sign_changes += changes;
  return t;
}

/// Mass-constrained solution closest to mu_bar (the widest, mesa-shaped
/// spike), searched over log(mu - mu_bar) in [log_offset_floor, log(M - mu_bar)).
inline StationaryTriple solve_mesa_mass_constraint(double M, double ell, double d, double kappa,
                                                   const MassConstraintOptions& opt = {}) {
  if (!(d > 0.0 && d < 1.0)) throw DomainError("solve_mesa_mass_constraint: need 0 < d < 1");
  const double mb = mu_bar(d, kappa);
  if (!(M > mb)) throw DomainError("solve_mesa_mass_constraint: M must exceed mu_bar");
  return detail::solve_mass_near_mu_bar(M, ell, d, kappa, std::log(M - mb) + std::log1p(-1e-9), opt);
}

namespace detail {

/// Tail of an orbit asymptotic to a saddle, parametrized by s = log(gap)
/// over [s_min, s_max]; chunks keep each quadrature span short.
inline std::vector<Piece> tail_pieces(const PhasePortrait& pp, bool at_zero, double s_min, double s_max) {
  std::vector<Piece> out;
  const SaddleExpansion& ex = at_zero ? pp.at_zero : pp.at_beta;
  double a = s_min;
  while (a < s_max) {
    const double b = std::min(s_max, a + 8.0);
    Piece pc;
    pc.kind = PieceKind::saddle_tail;
    pc.ex = &ex;
    pc.nl = &pp.nl;
    if (at_zero) {
      pc.p_low = a;
      pc.p_high = b;
    } else {
      pc.p_low = b;
      pc.p_high = a;
    }
    out.push_back(pc);
    a = b;
  }
  if (!at_zero) std::reverse(out.begin(), out.end());
  return out;
}

inline Piece sqrt_piece(const PhasePortrait& pp, double turning, double far) {
  Piece pc;
  pc.kind = PieceKind::sqrt_one;
  pc.nl = &pp.nl;
  pc.a = turning;
  pc.b = far;
  pc.p_low = turning < far ? 0.0 : 1.0;
  pc.p_high = turning < far ? 1.0 : 0.0;
  return pc;
}

inline double tail_log_floor(const PhasePortrait& pp, bool at_zero, double x_needed) {
  const SaddleExpansion& ex = at_zero ? pp.at_zero : pp.at_beta;
  const double reach = at_zero ? pp.reach_zero : pp.reach_beta;
  // Far down the tail dx/ds -> scale / sqrt(P(0)); overshoot generously.
  const double s = std::log(reach) - 1.2 * x_needed * std::sqrt(ex.P(0.0)) / pp.scale - 10.0;
  const double gap_floor = at_zero ? std::log(1e-300) : std::log(4.0 * std::numeric_limits<double>::epsilon() * pp.beta);
  if (s < gap_floor)
    throw DomainError("x_max requires values closer to the asymptote than double precision resolves");
  return s;
}

}  // namespace detail

/// Homoclinic orbit to 0 (mu > mu_bar), peak gamma at x = 0, decaying on [0, x_max].
/// For mu < mu_bar the orbit homoclinic to beta is returned instead, with its
/// valley omega_* at x = 0.
inline ProfileSolution homoclinic_profile(double mu, double d, double kappa, double x_max, int n,
                                          TimeMapScaling s = TimeMapScaling::physical) {
  if (!(x_max > 0.0)) throw DomainError("homoclinic_profile: x_max must be positive");
  auto pp = std::make_shared<const PhasePortrait>(mu, d, kappa, s);
  const double mb = mu_bar(d, kappa);
  if (mu > mb) {
    const double top = *pp->gamma;
    std::vector<Piece> pcs;
    Piece head = detail::sqrt_piece(*pp, top, pp->reach_zero);
    const double x_head = pp->scale * gauss_adaptive([&](double p) { return head.w(p); }, 0.0, 1.0).value;
    const double need = std::max(0.0, x_max - x_head);
    const double smin = detail::tail_log_floor(*pp, true, need);
    pcs = detail::tail_pieces(*pp, true, smin, std::log(pp->reach_zero));
    pcs.push_back(head);
    Orbit o(pp.get(), 0.0, TurningEnd{true, 0.0, smin}, TurningEnd{false, top, std::log(top)}, pcs);
    ProfileCurve pc(pp, o, true);
    // Sample from the peak: x measured from gamma.
    const double L = pc.length();
    ProfileSolution out;
    out.mu = mu;
    out.ell = x_max;
    out.branch = Branch::homoclinic;
    out.level = 0.0;
    out.xs.resize(n);
    out.us.resize(n);
    for (int i = 0; i < n; ++i) {
      out.xs[i] = x_max * i / (n - 1);
      out.us[i] = pc.curve().z_at(L - out.xs[i]);
    }
    out.boundary_value = top;
    out.endpoint = out.us.back();
    return out;
  }
  if (mu == mb) throw DomainError("homoclinic_profile: mu = mu_bar carries the heteroclinic front");
  const double bottom = omega_star(pp->nl);
  const double level = pp->G_beta;
  std::vector<Piece> pcs;
  Piece head = detail::sqrt_piece(*pp, bottom, pp->beta - pp->reach_beta);
  const double x_head = pp->scale * gauss_adaptive([&](double p) { return head.w(p); }, 0.0, 1.0).value;
  const double need = std::max(0.0, x_max - x_head);
  const double smin = detail::tail_log_floor(*pp, false, need);
  pcs.push_back(head);
  const auto tail = detail::tail_pieces(*pp, false, smin, std::log(pp->reach_beta));
  pcs.insert(pcs.end(), tail.begin(), tail.end());
  Orbit o(pp.get(), level, TurningEnd{false, bottom, std::log(bottom)}, TurningEnd{true, pp->beta, smin}, pcs);
  ProfileCurve pc(pp, o, false);
  ProfileSolution out;
  out.mu = mu;
  out.ell = x_max;
  out.branch = Branch::homoclinic_beta;
  out.level = level;
  out.xs.resize(n);
  out.us.resize(n);
  for (int i = 0; i < n; ++i) {
    out.xs[i] = x_max * i / (n - 1);
    out.us[i] = pc.curve().z_at(out.xs[i]);
  }
  out.boundary_value = bottom;
  out.endpoint = out.us.back();
  return out;
}

/// Front from 0 to beta(mu_bar) on [0, x_max], centered so u(x_max/2) = alpha(mu_bar).
inline ProfileSolution heteroclinic_profile(double d, double kappa, double x_max, int n,
                                            TimeMapScaling s = TimeMapScaling::physical) {
  if (!(x_max > 0.0)) throw DomainError("heteroclinic_profile: x_max must be positive");
  const double mb = mu_bar(d, kappa);
  auto pp = std::make_shared<const PhasePortrait>(mb, d, kappa, s, true);
  Piece mid;
  mid.kind = PieceKind::regular;
  mid.nl = &pp->nl;
  mid.level = 0.0;
  const double z0 = pp->reach_zero, z1 = pp->beta - pp->reach_beta;
  auto w = [&](double z) { return 1.0 / std::sqrt(-2.0 * pp->nl.G(z)); };
  // Distance from alpha to each end of the regular middle stretch.
  const double to_low = pp->scale * gauss_adaptive(w, z0, pp->alpha).value;
  const double to_high = pp->scale * gauss_adaptive(w, pp->alpha, z1).value;
  const double half = 0.5 * x_max;
  const double smin0 = detail::tail_log_floor(*pp, true, std::max(0.0, half - to_low));
  const double sminb = detail::tail_log_floor(*pp, false, std::max(0.0, half - to_high));
  std::vector<Piece> pcs = detail::tail_pieces(*pp, true, smin0, std::log(z0));
  mid.a = z0;
  mid.b = z1;
  mid.p_low = z0;
  mid.p_high = z1;
  pcs.push_back(mid);
  const auto tail = detail::tail_pieces(*pp, false, sminb, std::log(pp->reach_beta));
  pcs.insert(pcs.end(), tail.begin(), tail.end());
  Orbit o(pp.get(), 0.0, TurningEnd{true, 0.0, smin0}, TurningEnd{true, pp->beta, sminb}, pcs);
  OrbitCurve curve(o);
  // Arclength from the truncated lower end up to alpha.
  double x_alpha = 0.0;
  {
    double lo = 0.0, hi = curve.total();
    for (int i = 0; i < 200 && hi - lo > 1e-14 * curve.total(); ++i) {
      const double m = 0.5 * (lo + hi);
      if (curve.z_at(m) < pp->alpha) lo = m;
      else hi = m;
    }
    x_alpha = 0.5 * (lo + hi);
  }
  ProfileSolution out;
  out.mu = mb;
  out.ell = x_max;
  out.branch = Branch::heteroclinic;
  out.level = 0.0;
  out.xs.resize(n);
  out.us.resize(n);
  for (int i = 0; i < n; ++i) {
    out.xs[i] = x_max * i / (n - 1);
    out.us[i] = curve.z_at(x_alpha - half + out.xs[i]);
  }
  out.boundary_value = out.us.front();
  out.endpoint = out.us.back();
  return out;
}

}  // namespace mcrd
