#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mcrd/error.hpp"
#include "mcrd/timemap.hpp"

namespace mcrd {

enum class Pattern { Lambda, V, U, N };

inline std::string to_string(Pattern p) {
  switch (p) {
    case Pattern::Lambda: return "Lambda";
    case Pattern::V: return "V";
    case Pattern::U: return "U";
    case Pattern::N: return "N";
  }
  return "?";
}

inline Pattern parse_pattern(const std::string& s) {
  if (s == "Lambda" || s == "lambda" || s == "L") return Pattern::Lambda;
  if (s == "V" || s == "v") return Pattern::V;
  if (s == "U" || s == "u") return Pattern::U;
  if (s == "N" || s == "n") return Pattern::N;
  throw DomainError("unknown pattern '" + s + "' (Lambda, V, U, N)");
}

/// Segment orientations: true = base profile, false = base reversed (x -> ell - x).
inline std::vector<bool> pattern_segments(Pattern p, int j) {
  if (j < 1) throw DomainError("pattern index j must be >= 1");
  std::vector<bool> seg;
  switch (p) {
    case Pattern::Lambda:
      for (int i = 0; i < j; ++i) seg.insert(seg.end(), {false, true});
      break;
    case Pattern::V:
      for (int i = 0; i < j; ++i) seg.insert(seg.end(), {true, false});
      break;
    case Pattern::U:
      seg.push_back(true);
      for (int i = 0; i < j; ++i) seg.insert(seg.end(), {false, true});
      break;
    case Pattern::N:
      seg.push_back(false);
      for (int i = 0; i < j; ++i) seg.insert(seg.end(), {true, false});
      break;
  }
  return seg;
}

struct MultiModeSolution {
  Pattern pattern = Pattern::Lambda;
  int j = 1;
  double segment_length = 0.0;
  double total_length = 0.0;
  double mu_star = 0.0;
  std::vector<double> xs, us, vs, ws;
};

namespace detail {

inline std::vector<double> chain(const std::vector<double>& base, const std::vector<bool>& seg) {
  const std::size_t n = base.size();
  std::vector<double> out;
  out.reserve(seg.size() * (n - 1) + 1);
  for (std::size_t s = 0; s < seg.size(); ++s) {
    // Junction samples are shared: skip the first point after the first segment.
    for (std::size_t i = (s == 0 ? 0 : 1); i < n; ++i) out.push_back(seg[s] ? base[i] : base[n - 1 - i]);
  }
  return out;
}

}  // namespace detail

/// Concatenates reflected copies of a stationary triple.
inline MultiModeSolution assemble(const StationaryTriple& base, Pattern pattern, int j) {
  const auto seg = pattern_segments(pattern, j);
  const std::size_t n = base.u.us.size();
  if (n < 2) throw DomainError("assemble: base profile is empty");
  MultiModeSolution out;
  out.pattern = pattern;
  out.j = j;
  out.segment_length = base.u.ell;
  out.total_length = base.u.ell * static_cast<double>(seg.size());
  out.mu_star = base.mu_star;
  out.us = detail::chain(base.u.us, seg);
  out.vs = detail::chain(base.v, seg);
  out.ws = detail::chain(base.w, seg);
  const std::size_t m = out.us.size();
  out.xs.resize(m);
  const double dx = base.u.ell / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < m; ++i) out.xs[i] = dx * static_cast<double>(i);
  return out;
}

/// Trapezoid mean on a uniform grid.
inline double trapezoid_mean(const std::vector<double>& f) {
  const std::size_t n = f.size();
  if (n < 2) throw DomainError("trapezoid_mean: need at least two samples");
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < n; ++i) s += f[i];
  return s / static_cast<double>(n - 1);
}

struct PartitionEntry {
  Pattern pattern;
  int j;
  double segment_length;
};

/// Admissible multi-mode constructions on [0, ell_total] given the minimal
/// length ell_M of the single-mode solution, with n_M = floor(ell_total / ell_M).
inline std::vector<PartitionEntry> partition_for_mass(double ell_total, double ell_M) {
  if (!(ell_total > 0.0) || !(ell_M > 0.0)) throw DomainError("partition_for_mass: lengths must be positive");
  const int nm = static_cast<int>(std::floor(ell_total / ell_M));
  if (nm < 2) throw DomainError("partition_for_mass: floor(ell / ell_M) must be at least 2");
  std::vector<PartitionEntry> out;
  const int k = nm / 2;
  const double even_seg = ell_total / (2.0 * k);
  for (int j = 1; j <= k; ++j) out.push_back({Pattern::Lambda, j, even_seg});
  for (int j = 1; j <= k; ++j) out.push_back({Pattern::V, j, even_seg});
  const int jmax = (nm % 2 == 0) ? k - 1 : k;
  const double odd_seg = (nm % 2 == 0) ? ell_total / (2.0 * k - 1.0) : ell_total / (2.0 * k + 1.0);
  for (int j = 1; j <= jmax; ++j) out.push_back({Pattern::U, j, odd_seg});
  for (int j = 1; j <= jmax; ++j) out.push_back({Pattern::N, j, odd_seg});
  return out;
}

/// Smallest segment length for which the mass constraint has a spike solution,
/// located by bisection between a failing and a succeeding length.
inline double minimal_mass_length(double M, double d, double kappa, double rel_tol = 1e-3) {
  MassConstraintOptions opt;
  opt.n = 16;
  opt.with_energy = false;
  auto works = [&](double ell) {
    try {
      solve_mass_constraint(M, ell, d, kappa, opt);
      return true;
    } catch (const NumericalError&) {
      return false;
    }
  };
  double good = 10.0, bad = 0.0;
  while (!works(good)) {
    bad = good;
    good *= 2.0;
    if (good > 1e6) throw NumericalError("minimal_mass_length: no admissible length found");
  }
  if (bad == 0.0) {
    bad = good;
    while (works(bad)) {
      good = bad;
      bad *= 0.5;
      if (bad < 1e-6) return good;
    }
  }
  while (good - bad > rel_tol * good) {
    const double mid = 0.5 * (good + bad);
    if (works(mid)) good = mid;
    else bad = mid;
  }
  return good;
}

/// Re-solves the base at the segment length of a partition entry and assembles.
inline MultiModeSolution assemble_for_partition(double M, double d, double kappa, const PartitionEntry& e,
                                                int n_per_segment) {
  MassConstraintOptions opt;
  opt.n = n_per_segment;
  opt.with_energy = false;
  const auto base = solve_mass_constraint(M, e.segment_length, d, kappa, opt);
  return assemble(base, e.pattern, e.j);
}

}  // namespace mcrd
