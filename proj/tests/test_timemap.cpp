#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcrd/equilibria.hpp"
#include "mcrd/residual.hpp"
#include "mcrd/timemap.hpp"

using namespace mcrd;

namespace {

constexpr double kD = 0.1, kKappa = 2.0;

// Time for d u'' + g(u) = 0 started at rest from u0 to come to rest again,
// by RK4 at step h with bisection on the last step.
double shoot_half_period(const Nonlinearity& nl, double u0, double h) {
  const double d = nl.d();
  auto rk4 = [&](double u, double v, double dt, double& uo, double& vo) {
    const double k1u = v, k1v = -nl.g(u) / d;
    const double k2u = v + 0.5 * dt * k1v, k2v = -nl.g(u + 0.5 * dt * k1u) / d;
    const double k3u = v + 0.5 * dt * k2v, k3v = -nl.g(u + 0.5 * dt * k2u) / d;
    const double k4u = v + dt * k3v, k4v = -nl.g(u + dt * k3u) / d;
    uo = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    vo = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  };
  const double dir = nl.g(u0) > 0.0 ? -1.0 : 1.0;  // sign of u'' = -g / d at the start
  double u = u0, v = 0.0, t = 0.0;
  for (long long k = 0;; ++k) {
    double un, vn;
    rk4(u, v, h, un, vn);
    if (k > 0 && dir * vn <= 0.0) {
      double lo = 0.0, hi = h;
      for (int i = 0; i < 200 && hi - lo > 1e-18; ++i) {
        const double mid = 0.5 * (lo + hi);
        double um, vm;
        rk4(u, v, mid, um, vm);
        (dir * vm <= 0.0 ? hi : lo) = mid;
      }
      return t + 0.5 * (lo + hi);
    }
    u = un;
    v = vn;
    t += h;
    if (t > 1e4) throw NumericalError("shooting did not turn");
  }
}

double mid_increasing_mu() { return 0.5 * (mu_threshold(kD, kKappa) + mu_bar(kD, kKappa)); }

}  // namespace

TEST(TimeMap, SpikeLengthMatchesShooting) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const Nonlinearity nl(mu, kD, kKappa);
  const double a = roots_alpha_beta(nl).first, gam = gamma_root(nl);
  for (double f : {0.3, 0.7}) {
    const double xi = a + f * (gam - a);
    const double rs = shoot_half_period(nl, xi, 1e-4);
    EXPECT_NEAR(rho(xi, mu, kD, kKappa), rs, 1e-6 * rs);
  }
}

TEST(TimeMap, IncreasingLengthMatchesShooting) {
  const double mu = mid_increasing_mu();
  const Nonlinearity nl(mu, kD, kKappa);
  const double a = roots_alpha_beta(nl).first, ws = omega_star(nl);
  for (double f : {0.3, 0.7}) {
    const double om = ws + f * (a - ws);
    const double rs = shoot_half_period(nl, om, 1e-4);
    EXPECT_NEAR(rho_tilde(om, mu, kD, kKappa), rs, 1e-6 * rs);
  }
}

TEST(TimeMap, LiteralScalingDividesBySqrtD) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const Nonlinearity nl(mu, kD, kKappa);
  const double xi = 0.5 * (roots_alpha_beta(nl).first + gamma_root(nl));
  EXPECT_NEAR(rho(xi, mu, kD, kKappa, TimeMapScaling::literal) * std::sqrt(kD), rho(xi, mu, kD, kKappa), 1e-12);
}

TEST(TimeMap, SpikeLengthDivergesAtGamma) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const double gam = gamma_root(Nonlinearity(mu, kD, kKappa));
  // Logarithmic divergence: each extra two decades adds about the same length.
  std::vector<double> r;
  for (int k = 4; k <= 10; k += 2) r.push_back(rho(gam - std::pow(10.0, -k), mu, kD, kKappa));
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GT(r[i], r[i - 1]);
  const double step1 = r[2] - r[1], step2 = r[3] - r[2];
  EXPECT_NEAR(step2 / step1, 1.0, 0.05);
}

TEST(TimeMap, IncreasingLengthDivergesAtOmegaStar) {
  const double mu = mid_increasing_mu();
  const double ws = omega_star(Nonlinearity(mu, kD, kKappa));
  double prev = 0.0;
  for (int k = 2; k <= 10; k += 2) {
    const double r = rho_tilde(ws + std::pow(10.0, -k), mu, kD, kKappa);
    EXPECT_GT(r, prev);
    prev = r;
  }
  EXPECT_GT(prev, 5.0);
}

TEST(Solver, XiIncreasesWithLength) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const double gam = gamma_root(Nonlinearity(mu, kD, kKappa));
  double prev = 0.0;
  // xi reaches gamma to rounding once ell is a few units long; stay where xi is resolved.
  for (double ell : {1.8, 2.0, 2.5, 3.0}) {
    const auto sol = solve_spike(mu, ell, kD, kKappa);
    const double xi = sol.boundary_value();
    EXPECT_GT(xi, prev);
    EXPECT_LT(xi, gam);
    EXPECT_NEAR(rho(xi, mu, kD, kKappa), ell, 1e-9 * ell);
    EXPECT_NEAR(sol.length, ell, 1e-9 * ell);
    prev = xi;
  }
}

TEST(Solver, OmegaSolvesLength) {
  const double mu = mid_increasing_mu();
  for (double ell : {5.0, 10.0}) {
    const double om = solve_omega(mu, ell, kD, kKappa);
    EXPECT_NEAR(rho_tilde(om, mu, kD, kKappa), ell, 1e-9 * ell);
  }
}

TEST(Solver, TooShortThrowsWithMinimum) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const double lmin = minimal_length(Branch::spike, mu, kD, kKappa);
  EXPECT_GT(lmin, 0.0);
  EXPECT_THROW(solve_spike(mu, 0.5 * lmin, kD, kKappa), LengthTooShort);
  EXPECT_NO_THROW(solve_spike(mu, 1.5 * lmin, kD, kKappa));
}

TEST(Profile, EndpointsAndEnergy) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const auto sol = solve_spike(mu, 30.0, kD, kKappa);
  const auto p = profile_from_solution(sol, 1025);
  const Nonlinearity nl(mu, kD, kKappa);
  EXPECT_NEAR(p.us.front(), sol.boundary_value(), 1e-9);
  EXPECT_NEAR(p.us.back(), sol.endpoint_value(), 1e-9);
  EXPECT_LT(p.endpoint, roots_alpha_beta(nl).first);
  EXPECT_NEAR(nl.G(p.boundary_value), p.level, 1e-9 * (1.0 + std::abs(p.level)));
  EXPECT_NEAR(nl.G(p.endpoint), p.level, 1e-9 * (1.0 + std::abs(p.level)));
  EXPECT_LT(p.energy_spread, 1e-6);
  for (std::size_t i = 1; i < p.us.size(); ++i) EXPECT_LT(p.us[i], p.us[i - 1]);
}

TEST(Profile, ResidualConvergesSecondOrder) {
  const double mu = mu_bar(kD, kKappa) + 1.0, ell = 30.0;
  const auto sol = solve_spike(mu, ell, kD, kKappa);
  const Nonlinearity nl(mu, kD, kKappa);
  double prev = 0.0;
  for (int n : {257, 513, 1025}) {
    const auto p = profile_from_solution(sol, n, false);
    const double r = scalar_residual(p.us, ell / (n - 1), nl);
    if (prev > 0.0) {
      EXPECT_GT(prev / r, 3.5);
      EXPECT_LT(prev / r, 4.5);
    }
    prev = r;
  }
}

TEST(Profile, FromBoundaryMatchesSolver) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const auto sol = solve_spike(mu, 2.5, kD, kKappa);
  const auto p = profile_from_boundary(Branch::spike, sol.boundary_value(), mu, kD, kKappa, 257);
  EXPECT_NEAR(p.ell, 2.5, 1e-9);
  EXPECT_NEAR(p.endpoint, sol.endpoint_value(), 1e-9);
}

TEST(Means, QuadratureMatchesTrapezoid) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const auto sol = solve_spike(mu, 2.5, kD, kKappa);
  const auto p = profile_from_solution(sol, 4097, false);
  EXPECT_NEAR(mean_u(p), sol.mean(), 1e-6 * sol.mean());
  EXPECT_NEAR(mean_u_integral(Branch::spike, sol.boundary_value(), mu, kD, kKappa), sol.mean(), 1e-9 * sol.mean());
}

TEST(Means, SpikeMeanShrinksWithLength) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  double prev = 1e300;
  for (double ell : {10.0, 20.0, 40.0, 80.0}) {
    const double m = solve_spike(mu, ell, kD, kKappa).mean();
    EXPECT_LT(m, prev);
    prev = m;
  }
  EXPECT_EQ(mean_limit(mu, kD, kKappa), 0.0);
}

TEST(Means, IncreasingMeanApproachesBeta) {
  const double mu = mid_increasing_mu();
  const double beta = roots_alpha_beta(mu, kD, kKappa).second;
  double prev = 1e300;
  for (double ell : {20.0, 40.0, 80.0}) {
    const double gap = std::abs(solve_increasing(mu, ell, kD, kKappa).mean() - beta);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_EQ(mean_limit(mu, kD, kKappa), beta);
}

TEST(MassConstraint, TripleConservesMass) {
  const double M = mu_bar(kD, kKappa) + 2.0;
  MassConstraintOptions opt;
  opt.n = 513;
  const auto t = solve_mass_constraint(M, 50.0, kD, kKappa, opt);
  EXPECT_LT(std::abs(t.mass_residual), 1e-8);
  EXPECT_NEAR(t.mean_u + t.mean_v, M, 1e-8);
  EXPECT_GT(t.mu_star, mu_bar(kD, kKappa));
  EXPECT_LT(t.mu_star, M);
  for (std::size_t i = 0; i < t.v.size(); ++i) {
    EXPECT_GT(t.v[i], 0.0);
    EXPECT_NEAR(t.v[i], t.mu_star - kD * t.u.us[i], 1e-12 * t.mu_star);
    EXPECT_EQ(t.w[i], t.u.us[i]);
  }
}

TEST(MassConstraint, RejectsBadInput) {
  EXPECT_THROW(solve_mass_constraint(mu_bar(kD, kKappa) - 0.1, 50.0, kD, kKappa), DomainError);
  EXPECT_THROW(solve_mass_constraint(10.0, 50.0, 1.5, kKappa), DomainError);
}

TEST(Pinned, AgreesWithDirectPortraitNearSwitch) {
  const double mb = mu_bar(kD, kKappa), off = 1e-7;
  const auto direct = solve_spike(mb + off, 40.0, kD, kKappa);
  const auto pinned = solve_spike_pinned(std::log(off), 40.0, kD, kKappa);
  EXPECT_NEAR(pinned.mean(), direct.mean(), 1e-6 * direct.mean());
  EXPECT_NEAR(pinned.boundary_value(), direct.boundary_value(), 1e-6 * direct.boundary_value());
  EXPECT_TRUE(pinned.portrait->pinned());
  EXPECT_NEAR(pinned.portrait->mu_offset, off, 1e-20);
}

TEST(Pinned, MesaWidensAsOffsetShrinks) {
  double prev = 0.0;
  // The mesa fills [0, 50] once the offset is tiny; the mean then plateaus.
  for (double q : {-10.0, -20.0, -60.0, -200.0, -600.0}) {
    const auto sol = solve_spike_pinned(q, 50.0, kD, kKappa);
    if (q > -30.0) EXPECT_GT(sol.mean(), prev);
    else EXPECT_GE(sol.mean(), prev * (1.0 - 1e-12));
    EXPECT_NEAR(sol.length, 50.0, 1e-8);
    prev = sol.mean();
  }
  EXPECT_LT(prev, detail::alpha_beta_unchecked(mu_bar(kD, kKappa), kD, kKappa).second);
}

TEST(Pinned, MesaSolverFindsRootNearestThreshold) {
  const double d = 0.1, kappa = 20.0 / 3.0;
  const double M = kappa * 7.8;
  MassConstraintOptions opt;
  opt.n = 257;
  opt.with_energy = false;
  const auto mesa = solve_mesa_mass_constraint(M, 50.0, d, kappa, opt);
  const auto first = solve_mass_constraint(M, 50.0, d, kappa, opt);
  EXPECT_LT(std::abs(mesa.mass_residual), 1e-8);
  EXPECT_GT(mesa.mu_star, mu_bar(d, kappa));
  EXPECT_LE(mesa.mu_star, first.mu_star + 1e-12);
}

TEST(Homoclinic, PeakAndTail) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const auto h = homoclinic_profile(mu, kD, kKappa, 12.0, 1201);
  EXPECT_EQ(h.boundary_value, gamma_root(Nonlinearity(mu, kD, kKappa)));
  EXPECT_NEAR(h.us.front(), h.boundary_value, 1e-9);
  // Far tail: u ~ exp(-x / sqrt(d)).
  const int i = 1000, j = 1100;
  const double slope = (std::log(h.us[j]) - std::log(h.us[i])) / (h.xs[j] - h.xs[i]);
  EXPECT_NEAR(slope, -1.0 / std::sqrt(kD), 0.01 / std::sqrt(kD));
}

TEST(Homoclinic, SpikeConvergesToIt) {
  const double mu = mu_bar(kD, kKappa) + 1.0;
  const auto h = homoclinic_profile(mu, kD, kKappa, 5.0, 101);
  double prev = 1e300;
  for (double ell : {2.5, 3.0, 4.0, 10.0, 40.0}) {
    const auto sol = solve_spike(mu, ell, kD, kKappa);
    ProfileCurve pc(sol.portrait, sol.orbit, true);
    double err = 0.0;
    for (std::size_t k = 0; k < h.xs.size(); ++k)
      if (h.xs[k] <= 0.5 * ell) err = std::max(err, std::abs(pc.u_at(h.xs[k]) - h.us[k]));
    EXPECT_LT(err, std::max(prev, 1e-11));
    prev = err;
  }
  EXPECT_LT(prev, 1e-9 * h.boundary_value);
}

TEST(Heteroclinic, CenteredFront) {
  const double mb = mu_bar(kD, kKappa);
  const auto [a, b] = detail::alpha_beta_unchecked(mb, kD, kKappa);
  const auto f = heteroclinic_profile(kD, kKappa, 20.0, 401);
  EXPECT_NEAR(f.us[200], a, 1e-8 * b);
  EXPECT_LT(f.us.front(), 1e-3);
  EXPECT_GT(f.us.back(), b * (1.0 - 1e-3));
  for (std::size_t i = 1; i < f.us.size(); ++i) EXPECT_GT(f.us[i], f.us[i - 1]);
}
