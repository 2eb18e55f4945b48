#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "mcrd/error.hpp"

namespace mcrd {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline GaussRule build_gauss_rule(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p1 = 1.0, p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    pp = n * (z * p1 - p2) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace detail

/// Cached rule of order n; safe for concurrent callers.
inline const GaussRule& gauss_rule(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::build_gauss_rule(n)).first;
  return it->second;
}

/// Fixed-order rule mapped to [a, b].
template <class F>
double gauss_fixed(F&& f, double a, double b, int n) {
  const GaussRule& rule = gauss_rule(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

struct QuadratureOptions {
  double rel_tol = 1e-12;
  int min_order = 16;
  int max_order = 4096;
};

struct QuadratureResult {
  double value = 0.0;
  int order = 0;
  double change = 0.0;  // |last - previous|
};

/// Order-doubling Gauss-Legendre: stops once two successive orders agree to
/// rel_tol. Exceeding max_order throws NumericalError.
template <class F>
QuadratureResult gauss_adaptive(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return {0.0, 0, 0.0};
  double prev = gauss_fixed(f, a, b, opt.min_order);
  for (int n = 2 * opt.min_order; n <= opt.max_order; n *= 2) {
    const double cur = gauss_fixed(f, a, b, n);
    if (!std::isfinite(cur)) throw NumericalError("gauss_adaptive: non-finite integrand");
    const double change = std::abs(cur - prev);
    if (change <= opt.rel_tol * std::abs(cur) || change == 0.0) return {cur, n, change};
    prev = cur;
  }
  throw NumericalError("gauss_adaptive: no convergence up to order " +
                       std::to_string(opt.max_order));
}

}  // namespace mcrd
