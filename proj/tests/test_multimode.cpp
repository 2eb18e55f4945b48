#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mcrd/multimode.hpp"
#include "mcrd/residual.hpp"

using namespace mcrd;

namespace {

constexpr double kD = 0.1, kKappa = 2.0;

const StationaryTriple& base() {
  static const StationaryTriple t = [] {
    MassConstraintOptions opt;
    opt.n = 257;
    opt.with_energy = false;
    return solve_mass_constraint(mu_bar(kD, kKappa) + 2.0, 30.0, kD, kKappa, opt);
  }();
  return t;
}

long count(const std::vector<PartitionEntry>& es, Pattern p) {
  return std::count_if(es.begin(), es.end(), [&](const PartitionEntry& e) { return e.pattern == p; });
}

}  // namespace

TEST(Patterns, SegmentOrientation) {
  EXPECT_EQ(pattern_segments(Pattern::Lambda, 1), (std::vector<bool>{false, true}));
  EXPECT_EQ(pattern_segments(Pattern::V, 1), (std::vector<bool>{true, false}));
  EXPECT_EQ(pattern_segments(Pattern::U, 1), (std::vector<bool>{true, false, true}));
  EXPECT_EQ(pattern_segments(Pattern::N, 2), (std::vector<bool>{false, true, false, true, false}));
  EXPECT_THROW(pattern_segments(Pattern::U, 0), DomainError);
  EXPECT_EQ(parse_pattern("Lambda"), Pattern::Lambda);
  EXPECT_THROW(parse_pattern("W"), DomainError);
}

TEST(Assemble, LambdaIsReflectionAboutMidpoint) {
  const auto& b = base();
  const auto mm = assemble(b, Pattern::Lambda, 1);
  const std::size_t n = b.u.us.size(), m = mm.us.size();
  ASSERT_EQ(m, 2 * n - 1);
  EXPECT_DOUBLE_EQ(mm.total_length, 2.0 * b.u.ell);
  for (std::size_t i = 0; i < m; ++i) EXPECT_EQ(mm.us[i], mm.us[m - 1 - i]);
  EXPECT_EQ(mm.us[n - 1], b.u.us.front());  // peak in the middle
  EXPECT_NEAR(mm.xs.back(), mm.total_length, 1e-12 * mm.total_length);
}

TEST(Assemble, USegmentsAlternate) {
  const auto& b = base();
  const auto mm = assemble(b, Pattern::U, 1);
  const std::size_t n = b.u.us.size();
  ASSERT_EQ(mm.us.size(), 3 * (n - 1) + 1);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(mm.us[i], b.u.us[i]);
    EXPECT_EQ(mm.us[(n - 1) + i], b.u.us[n - 1 - i]);
    EXPECT_EQ(mm.us[2 * (n - 1) + i], b.u.us[i]);
  }
}

TEST(Assemble, FirstSegmentIsBaseBitForBit) {
  const auto& b = base();
  const std::size_t n = b.u.us.size();
  for (Pattern p : {Pattern::V, Pattern::U}) {
    const auto mm = assemble(b, p, 2);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(mm.us[i], b.u.us[i]);
      EXPECT_EQ(mm.vs[i], b.v[i]);
      EXPECT_EQ(mm.ws[i], b.w[i]);
    }
  }
}

TEST(Assemble, MeansEqualBase) {
  const auto& b = base();
  const double mu = trapezoid_mean(b.u.us), mv = trapezoid_mean(b.v), mw = trapezoid_mean(b.w);
  for (Pattern p : {Pattern::Lambda, Pattern::V, Pattern::U, Pattern::N})
    for (int j = 1; j <= 3; ++j) {
      const auto mm = assemble(b, p, j);
      EXPECT_NEAR(trapezoid_mean(mm.us), mu, 1e-12);
      EXPECT_NEAR(trapezoid_mean(mm.vs), mv, 1e-12);
      EXPECT_NEAR(trapezoid_mean(mm.ws), mw, 1e-12);
      EXPECT_NEAR(trapezoid_mean(mm.us) + trapezoid_mean(mm.vs), b.M, 1e-6);
    }
}

TEST(Assemble, ResidualStaysAtBaseLevel) {
  const auto& b = base();
  const Nonlinearity nl(b.mu_star, kD, kKappa);
  const double dx = b.u.ell / (b.u.us.size() - 1);
  const double r0 = scalar_residual(b.u.us, dx, nl);
  for (Pattern p : {Pattern::Lambda, Pattern::V, Pattern::U, Pattern::N}) {
    const auto mm = assemble(b, p, 2);
    EXPECT_LE(scalar_residual(mm.us, dx, nl), 4.0 * r0);
  }
}

TEST(Partition, OddCount) {
  const auto es = partition_for_mass(4.5, 1.0);  // n_M = 4
  EXPECT_EQ(count(es, Pattern::Lambda), 2);
  EXPECT_EQ(count(es, Pattern::V), 2);
  EXPECT_EQ(count(es, Pattern::U), 1);
  EXPECT_EQ(count(es, Pattern::N), 1);
  for (const auto& e : es) {
    const bool even = e.pattern == Pattern::Lambda || e.pattern == Pattern::V;
    EXPECT_EQ(e.segment_length, even ? 4.5 / 4.0 : 4.5 / 3.0);
  }
}

TEST(Partition, EvenCount) {
  const auto es = partition_for_mass(5.5, 1.0);  // n_M = 5
  EXPECT_EQ(count(es, Pattern::Lambda), 2);
  EXPECT_EQ(count(es, Pattern::U), 2);
  for (const auto& e : es) {
    const bool even = e.pattern == Pattern::Lambda || e.pattern == Pattern::V;
    EXPECT_EQ(e.segment_length, even ? 5.5 / 4.0 : 5.5 / 5.0);
  }
}

TEST(Partition, SegmentsNeverShorterThanMinimum) {
  for (double total : {2.0, 3.7, 8.2, 13.0})
    for (const auto& e : partition_for_mass(total, 1.0)) EXPECT_GE(e.segment_length, 1.0);
}

TEST(Partition, TooShortThrows) {
  EXPECT_THROW(partition_for_mass(1.9, 1.0), DomainError);
  EXPECT_THROW(partition_for_mass(-1.0, 1.0), DomainError);
}

TEST(Partition, MinimalLengthBrackets) {
  const double M = mu_bar(kD, kKappa) + 2.0;
  const double lm = minimal_mass_length(M, kD, kKappa, 1e-2);
  MassConstraintOptions opt;
  opt.n = 16;
  opt.with_energy = false;
  EXPECT_NO_THROW(solve_mass_constraint(M, lm, kD, kKappa, opt));
  EXPECT_THROW(solve_mass_constraint(M, 0.9 * lm, kD, kKappa, opt), NumericalError);
  const auto mm = assemble_for_partition(M, kD, kKappa, {Pattern::U, 1, 1.5 * lm}, 65);
  EXPECT_NEAR(mm.total_length, 4.5 * lm, 1e-12 * lm);
}
