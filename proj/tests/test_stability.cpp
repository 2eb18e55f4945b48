#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "mcrd/stability.hpp"

using namespace mcrd;

namespace {

ReducedParams turing_params() { return ReducedParams{2.5, 0.8, 0.01, 0.001, 22.0, 100.0}; }

Eigen::Matrix3d assembled(double sigma, const ReducedParams& p) {
  const auto s = equilibrium_state(EquilibriumBranch::plus, p.M, p.kappa);
  const Matrix3 J = reaction_jacobian(s.u, s.v, s.w, p.kappa, p.tau);
  const double diff[3] = {p.d, 1.0, p.eps};
  Eigen::Matrix3d B;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) B(r, c) = J[r][c] - (r == c ? diff[r] * sigma : 0.0);
  return B;
}

}  // namespace

TEST(Jacobian, ZeroStateRows) {
  const Matrix3 J = reaction_jacobian(0.0, 22.0, 0.0, 2.5, 0.8);
  const Matrix3 want{{{-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.8, 0.0, -0.8}}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(J[r][c] + 0.0, want[r][c]);
}

TEST(Jacobian, ReactionConservesMass) {
  const auto p = turing_params();
  const Matrix3 J = jacobian_at_equilibrium(EquilibriumBranch::plus, p);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(J[0][c] + J[1][c], 0.0, 1e-15);
  EXPECT_NEAR(J[0][0], 1.0, 1e-13);
}

TEST(Jacobian, MatchesModeMatrix) {
  const auto p = turing_params();
  const auto lin = linearize(p);
  for (double sigma : {0.0, 0.7, 30.0}) {
    const auto B = mode_matrix_B(sigma, lin);
    const auto O = assembled(sigma, p);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(B[r][c], O(r, c), 1e-12 * (1.0 + std::abs(O(r, c))));
  }
}

TEST(ZeroState, Spectrum) {
  ReducedParams p = turing_params();
  auto e = eig_A(0.0, p);
  std::sort(e.begin(), e.end());
  EXPECT_EQ(e[0], -1.0);
  EXPECT_EQ(e[1], -0.8);
  EXPECT_EQ(e[2], 0.0);
  for (double s : {1e-6, 0.1, 10.0}) {
    for (double v : eig_A(s, p)) EXPECT_LT(v, 0.0);
  }
  ReducedParams q{2.0, 1.0, 1.0, 1.0, 10.0, 1.0};
  auto f = eig_A(1.0, q);
  std::sort(f.begin(), f.end());
  EXPECT_EQ(f[0], -2.0);
  EXPECT_EQ(f[1], -2.0);
  EXPECT_EQ(f[2], -1.0);
}

TEST(CharPoly, FactorsAtZeroMode) {
  const auto lin = linearize(turing_params());
  const auto c = char_poly_B(0.0, lin);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_NEAR(c[2], lin.alpha0 - 1.0 + lin.tau, 1e-14);
  EXPECT_NEAR(c[1], lin.tau * (lin.alpha0 - 1.0 + lin.beta0), 1e-14);
  EXPECT_NEAR(-1.0 + lin.beta0, -1.0 / (1.0 + lin.u), 1e-15);
  const auto r = eig_B(0.0, lin);
  int zeros = 0;
  for (const auto& z : r) {
    if (std::abs(z) < 1e-14) ++zeros;
    else EXPECT_LT(z.real(), 0.0);
  }
  EXPECT_EQ(zeros, 1);
}

TEST(CharPoly, MatchesDeterminantOverGrid) {
  for (double M : {12.0, 22.0, 60.0})
    for (double tau : {0.3, 0.8, 1.5})
      for (double sigma : {0.0, 0.01, 1.0, 25.0, 400.0}) {
        ReducedParams p = turing_params();
        p.M = M;
        p.tau = tau;
        const auto B = assembled(sigma, p);
        const double minors = B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0) + B(0, 0) * B(2, 2) - B(0, 2) * B(2, 0) +
                              B(1, 1) * B(2, 2) - B(1, 2) * B(2, 1);
        const auto c = char_poly_B(sigma, linearize(p));
        EXPECT_NEAR(c[2], -B.trace(), 1e-12 * (1.0 + std::abs(B.trace())));
        EXPECT_NEAR(c[1], minors, 1e-10 * (1.0 + std::abs(minors)));
        EXPECT_NEAR(c[0], -B.determinant(), 1e-10 * (1.0 + std::abs(B.determinant())));
      }
}

TEST(CharPoly, ConjugatePairs) {
  const auto lin = linearize(turing_params());
  for (double sigma = 0.0; sigma < 50.0; sigma += 0.37) {
    const auto r = eig_B(sigma, lin);
    for (const auto& z : r) {
      if (std::abs(z.imag()) < 1e-12) continue;
      bool found = false;
      for (const auto& w : r) found = found || std::abs(w - std::conj(z)) < 1e-9 * (1.0 + std::abs(z));
      EXPECT_TRUE(found);
    }
  }
}

TEST(SignCriteria, CriticalLimit) {
  EXPECT_NEAR(r_at_critical_mass(2.5, 0.8), 0.8 - 2.5 / 3.5, 1e-15);
  EXPECT_GT(r_at_critical_mass(2.5, 0.8), 0.0);
  EXPECT_FALSE(M_star(2.5, 0.8));
  EXPECT_NEAR(r_at_critical_mass(20.0 / 3.0, 0.3), 0.3 - 2.0 / 2.3, 1e-15);
  EXPECT_NEAR(r_of_M(critical_mass(2.5) + 1e-9, 2.5, 0.8), r_at_critical_mass(2.5, 0.8), 1e-4);
}

TEST(SignCriteria, MonotoneAndRoot) {
  double prev = -1e300;
  for (double M = critical_mass(2.5) + 0.01; M < 200.0; M *= 1.3) {
    const double r = r_of_M(M, 2.5, 0.3);
    EXPECT_GT(r, prev);
    prev = r;
  }
  const auto ms = M_star(20.0 / 3.0, 0.3);
  ASSERT_TRUE(ms);
  EXPECT_NEAR(r_of_M(*ms, 20.0 / 3.0, 0.3), 0.0, 1e-10);
}

TEST(Classification, ByTau) {
  ReducedParams p = turing_params();
  EXPECT_EQ(subsystem_classification(linearize(p)).kind, InstabilityKind::S_and_W);
  p.tau = 1.5;
  EXPECT_EQ(subsystem_classification(linearize(p)).kind, InstabilityKind::S);
  const auto rep = subsystem_classification(linearize(p));
  EXPECT_LT(rep.det13, 0.0);
  EXPECT_LT(rep.J2, 0.0);
}

TEST(Classification, RejectsUnstableState) {
  ReducedParams p{20.0 / 3.0, 0.3, 0.1, 0.0, critical_mass(20.0 / 3.0) + 0.5, 100.0};
  EXPECT_FALSE(uniformly_stable(linearize(p)));
  EXPECT_THROW(subsystem_classification(linearize(p)), DomainError);
}

TEST(Dispersion, TuringParametersUnstable) {
  const auto lin = linearize(turing_params());
  const auto rep = dispersion_scan(lin, 400.0, 4001, 100.0);
  EXPECT_TRUE(rep.uniform_stable);
  EXPECT_GT(rep.max_growth, 0.0);
  EXPECT_GT(rep.argmax_sigma, 0.0);
  ASSERT_TRUE(rep.crossing_sigma);
  EXPECT_NEAR(dispersion_point(0.0, lin).max_real, 0.0, 1e-14);
  bool has_mode = false;
  for (const auto& pt : rep.points) has_mode = has_mode || (pt.neumann_mode && pt.max_real > 0.0);
  EXPECT_TRUE(has_mode);
}

TEST(Dispersion, EqualDiffusionStable) {
  ReducedParams p = turing_params();
  p.d = 1.0;
  p.eps = 1.0;
  const auto rep = dispersion_scan(linearize(p), 400.0, 4001);
  EXPECT_LE(rep.max_growth, 1e-13);
  EXPECT_EQ(rep.kind, InstabilityKind::none);
}

TEST(Dispersion, SmallDiffusionScan) {
  ReducedParams p = turing_params();
  const auto scan = diffusion_instability_scan(p, 1e-3, 1e-1, 2, 200.0, 801);
  ASSERT_TRUE(scan.largest_unstable_d);
  EXPECT_GE(*scan.largest_unstable_d, 0.01);
}
