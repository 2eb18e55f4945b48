#include <gtest/gtest.h>

#include <cmath>

#include "mcrd/equilibria.hpp"
#include "mcrd/quadrature.hpp"

using namespace mcrd;

namespace {

// First sign change of f on a dense uniform grid, refined by plain bisection.
template <class F>
double scan_root(F&& f, double a, double b, int samples = 200000) {
  double x0 = a, f0 = f(a);
  for (int i = 1; i <= samples; ++i) {
    const double x1 = a + (b - a) * i / samples;
    const double f1 = f(x1);
    if ((f0 > 0.0) != (f1 > 0.0)) {
      double lo = x0, hi = x1;
      for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (((f(mid) > 0.0) == (f0 > 0.0))) lo = mid;
        else hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    x0 = x1;
    f0 = f1;
  }
  return std::nan("");
}

}  // namespace

TEST(CriticalMass, Values) {
  EXPECT_DOUBLE_EQ(critical_mass(2.0), 8.0);
  EXPECT_DOUBLE_EQ(critical_mass(2.5), 11.25);
  EXPECT_LT(critical_mass(1e-9), 1e-8);
}

TEST(ConstantEquilibria, ClosedForm) {
  const auto eq = constant_equilibria(10.0, 2.0);
  ASSERT_TRUE(eq.plus && eq.minus);
  EXPECT_NEAR(eq.plus->u, 3.0 + std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(eq.minus->u, 3.0 - std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(eq.plus->v, 10.0 - 3.0 - std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(eq.plus->u * eq.minus->u, 4.0, 1e-12);
  EXPECT_NEAR(eq.plus->u + eq.minus->u, 6.0, 1e-12);
}

TEST(ConstantEquilibria, SaddleNode) {
  for (double kappa : {2.0, 2.5, 20.0 / 3.0}) {
    const auto eq = constant_equilibria(critical_mass(kappa), kappa);
    ASSERT_TRUE(eq.plus && eq.minus);
    EXPECT_NEAR(eq.plus->u, kappa, 1e-12 * kappa);
    EXPECT_NEAR(eq.minus->u, kappa, 1e-12 * kappa);
    EXPECT_NEAR(eq.plus->v, kappa * kappa + kappa, 1e-12 * kappa * kappa);
  }
}

TEST(ConstantEquilibria, BelowThresholdOnlyZero) {
  const auto eq = constant_equilibria(4.0, 2.0);
  EXPECT_FALSE(eq.plus);
  EXPECT_FALSE(eq.minus);
  EXPECT_EQ(eq.zero.u, 0.0);
  EXPECT_EQ(eq.zero.v, 4.0);
  EXPECT_EQ(eq.zero.w, 0.0);
}

TEST(ConstantEquilibria, ReactionVanishesProperty) {
  for (double kappa : {0.5, 2.0, 2.5, 20.0 / 3.0})
    for (double extra : {1e-6, 0.1, 1.0, 10.0, 1e3}) {
      const double M = critical_mass(kappa) + extra;
      for (const auto& s : constant_equilibria(M, kappa).all()) {
        const double f = s.u * s.u * s.v / (kappa * kappa * (1.0 + s.w)) - s.u;
        EXPECT_NEAR(f, 0.0, 1e-11 * (1.0 + s.u)) << kappa << " " << M;
        EXPECT_NEAR(s.u + s.v, M, 1e-12 * M);
        EXPECT_EQ(s.u, s.w);
      }
    }
}

TEST(Potential, VanishesAtOrigin) {
  const Nonlinearity nl(6.0, 0.1, 2.0);
  EXPECT_EQ(nl.g(0.0), 0.0);
  EXPECT_EQ(nl.G(0.0), 0.0);
}

TEST(Potential, ZerosOfNonlinearity) {
  const Nonlinearity nl(6.0, 0.1, 2.0);
  const auto [a, b] = roots_alpha_beta(nl);
  EXPECT_NEAR(a, 10.0 - std::sqrt(60.0), 1e-12);
  EXPECT_NEAR(b, 10.0 + std::sqrt(60.0), 1e-12);
  EXPECT_NEAR(a + b, 20.0, 1e-12);
  EXPECT_NEAR(a * b, 40.0, 1e-11);
  EXPECT_NEAR(nl.g(a), 0.0, 1e-12);
  EXPECT_NEAR(nl.g(b), 0.0, 1e-11);
}

TEST(Potential, ClosedFormMatchesQuadrature) {
  const Nonlinearity nl(6.0, 0.1, 2.0);
  for (double u : {0.5, 1.0, 5.0, 15.0}) {
    const double q = gauss_adaptive([&](double z) { return nl.g(z); }, 0.0, u).value;
    EXPECT_NEAR(nl.G(u), q, 1e-12 * (1.0 + std::abs(q)));
  }
}

TEST(Potential, RootsRejectedOutsideRange) {
  EXPECT_THROW(roots_alpha_beta(mu_threshold(0.1, 2.0), 0.1, 2.0), DomainError);
  EXPECT_THROW(roots_alpha_beta(6.0, 1.0, 2.0), DomainError);
  const auto [a, b] = detail::alpha_beta_unchecked(mu_threshold(0.1, 2.0), 0.1, 2.0);
  EXPECT_NEAR(a, std::sqrt(4.0 / 0.1), 1e-6);
  EXPECT_NEAR(b, std::sqrt(4.0 / 0.1), 1e-6);
}

TEST(Thresholds, MuOneValue) {
  EXPECT_NEAR(mu_one(0.1, 2.0), 4.1 + (2.0 / 3.0) * std::sqrt(3.0 * 1.63), 1e-13);
  EXPECT_NEAR(mu_one(0.1, 2.0), 5.574222959, 1e-8);
}

TEST(Thresholds, BracketSigns) {
  const double d = 0.1, kappa = 2.0;
  EXPECT_LT(potential_at_beta(mu_threshold(d, kappa) + 1e-9, d, kappa), 0.0);
  EXPECT_GT(potential_at_beta(mu_one(d, kappa), d, kappa), 0.0);
}

TEST(Thresholds, MuBarSandwichAndOracle) {
  for (double d : {0.01, 0.1})
    for (double kappa : {2.0, 2.5, 20.0 / 3.0}) {
      const double mc = mu_threshold(d, kappa), m1 = mu_one(d, kappa), mb = mu_bar(d, kappa);
      EXPECT_LT(mc, mb);
      EXPECT_LT(mb, m1);
      // Independent oracle: dense sign scan of G(beta(mu); mu), beta from the quadratic formula.
      auto gb = [&](double mu) {
        const double k2 = kappa * kappa;
        const double beta = ((mu - k2) + std::sqrt((mu - k2) * (mu - k2) - 4.0 * d * k2)) / (2.0 * d);
        return Nonlinearity(mu, d, kappa).G(beta);
      };
      const double oracle = scan_root(gb, mc + 1e-12, m1, 20000);
      EXPECT_NEAR(mb, oracle, 1e-9 * mb);
    }
}

TEST(Gamma, MatchesSignScan) {
  const double d = 0.1, kappa = 2.0, mu = mu_bar(d, kappa) + 1.0;
  const Nonlinearity nl(mu, d, kappa);
  const auto [a, b] = roots_alpha_beta(nl);
  const double gam = gamma_root(nl);
  EXPECT_NEAR(gam, scan_root([&](double z) { return nl.G(z); }, a, b), 1e-9);
  EXPECT_LT(nl.G(a), 0.0);
  EXPECT_GT(nl.G(b), 0.0);
}

TEST(Gamma, DecreasesWithMu) {
  const double d = 0.1, kappa = 2.0, mb = mu_bar(d, kappa);
  EXPECT_LT(gamma_root(Nonlinearity(mb + 2.0, d, kappa)), gamma_root(Nonlinearity(mb + 1.0, d, kappa)));
}

TEST(Eta, EndpointsAndOracle) {
  const double d = 0.1, kappa = 2.0, mu = mu_bar(d, kappa) + 1.0;
  const Nonlinearity nl(mu, d, kappa);
  const auto [a, b] = roots_alpha_beta(nl);
  (void)b;
  const double gam = gamma_root(nl);
  EXPECT_EQ(eta(a, nl), a);
  EXPECT_LT(eta(gam - 1e-12, nl), 1e-4);
  const double xi = 0.5 * (a + gam);
  const double level = nl.G(xi);
  EXPECT_NEAR(eta(xi, nl), scan_root([&](double z) { return nl.G(z) - level; }, 0.0, a), 1e-9);
}

TEST(OmegaChi, Definitions) {
  const double d = 0.1, kappa = 2.0, mb = mu_bar(d, kappa);
  EXPECT_EQ(omega_star(Nonlinearity(mb, d, kappa)), 0.0);
  const double mu = 0.5 * (mu_threshold(d, kappa) + mb);
  const Nonlinearity nl(mu, d, kappa);
  const auto [a, b] = roots_alpha_beta(nl);
  const double ws = omega_star(nl);
  EXPECT_GT(ws, 0.0);
  EXPECT_LT(ws, a);
  EXPECT_EQ(chi(ws, nl), b);
  for (double t : {0.2, 0.5, 0.8}) {
    const double w1 = ws + t * (a - ws), w2 = w1 + 1e-3 * (a - ws);
    EXPECT_GT(chi(w1, nl), chi(w2, nl));  // decreasing in omega
    EXPECT_LT(nl.g(w1) / nl.g(chi(w1, nl)), 0.0);
    EXPECT_NEAR(nl.G(chi(w1, nl)), nl.G(w1), 1e-12 * (1.0 + std::abs(nl.G(w1))));
  }
}

TEST(DecayConstant, MatchesSecondDifference) {
  const double d = 0.1, kappa = 2.0, mb = mu_bar(d, kappa);
  const Nonlinearity nl(mb, d, kappa);
  const double b = roots_alpha_beta(nl).second;
  const double h = 1e-3;
  const double fd = (nl.G(b + h) - 2.0 * nl.G(b) + nl.G(b - h)) / (h * h);
  EXPECT_NEAR(h_constant(d, kappa), std::abs(fd), 1e-6);
  EXPECT_NEAR(h_constant(d, kappa), std::abs(nl.g_u(b)), 1e-10);
  EXPECT_GT(h_constant(d, kappa), 0.0);
  EXPECT_LT(h_constant(1e-4, kappa), h_constant(1e-2, kappa));
}

TEST(Landscape, Summary) {
  const auto s = landscape(6.0, 0.1, 2.0);
  EXPECT_NEAR(s.mu_c, 5.264911064, 1e-9);
  EXPECT_NEAR(s.mu_bar, 5.40339722973, 1e-10);
  ASSERT_TRUE(s.alpha && s.beta && s.gamma);
  EXPECT_FALSE(s.omega_star);
}
