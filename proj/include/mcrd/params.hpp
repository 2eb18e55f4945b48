#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mcrd/error.hpp"

namespace mcrd {

/// Constants of the (N, S, I) actin model.
struct PhysicalParams {
  double k_N = 2.0;
  double k_I = 0.8;
  double D_N = 0.01;
  double D_I = 0.001;
  double A = 8.8;
  double L = 100.0;
};

/// Constants of the rescaled (u, v, w) system.
struct ReducedParams {
  double kappa = 2.5;
  double tau = 0.8;
  double d = 0.01;
  double eps = 0.001;
  double M = 22.0;
  double ell = 100.0;
};

/// Throws DomainError on hard violations; returns human readable warnings
/// for the soft ordering 0 <= D_I <= D_N < 1.
inline std::vector<std::string> validate(const PhysicalParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError(std::string(name) + " must be positive and finite");
  };
  positive(p.k_N, "k_N");
  positive(p.k_I, "k_I");
  positive(p.D_N, "D_N");
  positive(p.A, "A");
  positive(p.L, "L");
  if (!(p.D_I >= 0.0) || !std::isfinite(p.D_I))
    throw DomainError("D_I must be nonnegative and finite");
  if (!(p.k_I < p.k_N)) throw DomainError("k_I must be smaller than k_N");

  std::vector<std::string> warnings;
  if (p.D_I > p.D_N) warnings.emplace_back("D_I exceeds D_N");
  if (p.D_N >= 1.0) warnings.emplace_back("D_N is not below 1");
  return warnings;
}

inline std::vector<std::string> validate(const ReducedParams& r) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError(std::string(name) + " must be positive and finite");
  };
  positive(r.tau, "tau");
  positive(r.d, "d");
  positive(r.M, "M");
  positive(r.ell, "ell");
  if (!(r.kappa > 1.0) || !std::isfinite(r.kappa))
    throw DomainError("kappa must exceed 1");
  if (!(r.eps >= 0.0) || !std::isfinite(r.eps))
    throw DomainError("eps must be nonnegative and finite");

  std::vector<std::string> warnings;
  if (r.eps > r.d) warnings.emplace_back("eps exceeds d");
  if (r.d >= 1.0) warnings.emplace_back("d is not below 1");
  return warnings;
}

inline ReducedParams to_reduced(const PhysicalParams& p) {
  validate(p);
  const double kappa = p.k_N / p.k_I;
  return ReducedParams{kappa, p.k_I, p.D_N, p.D_I, kappa * p.A, p.L};
}

inline PhysicalParams to_physical(const ReducedParams& r) {
  validate(r);
  return PhysicalParams{r.kappa * r.tau, r.tau, r.d, r.eps, r.M / r.kappa, r.ell};
}

}  // namespace mcrd
