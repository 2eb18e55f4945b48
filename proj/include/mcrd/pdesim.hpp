#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mcrd/equilibria.hpp"
#include "mcrd/error.hpp"
#include "mcrd/params.hpp"
#include "mcrd/timemap.hpp"

namespace mcrd {

/// Vertex-centered grid on [0, L]: x_i = i L / (n - 1).
struct Grid1D {
  int n = 1024;
  double L = 100.0;
  Grid1D() = default;
  Grid1D(int n_, double L_) : n(n_), L(L_) {
    if (n < 16) throw DomainError("Grid1D: need n >= 16");
    if (!(L > 0.0)) throw DomainError("Grid1D: L must be positive");
  }
  double dx() const { return L / (n - 1); }
  double x(int i) const { return dx() * i; }
};

enum class Model { three, aux };
enum class Scheme { imex_cn, explicit_rk4 };

/// three: (N, S, I) with 1 + I in the denominator.
/// aux:   (N, S) with 1 + (k_N / k_I) N in the denominator.
struct ModelSpec {
  Model model = Model::three;
  PhysicalParams p;
  int field_count() const { return model == Model::three ? 3 : 2; }
  std::vector<double> diffusivities() const {
    if (model == Model::three) return {p.D_N, 1.0, p.D_I};
    return {p.D_N, 1.0};
  }
  std::vector<std::string> names() const {
    if (model == Model::three) return {"N", "S", "I"};
    return {"N", "S"};
  }
};

struct SimConfig {
  double dt = 0.0;  // 0 picks min(0.1, 0.4 dx^2 / max(D, 1))
  double t_end = 100.0;
  Scheme scheme = Scheme::imex_cn;
  double output_interval = 1.0;
  double steady_tol = 1e-8;
  int steady_outputs = 10;
  bool stop_when_steady = true;
  std::vector<double> snapshot_times;
  double blowup = 1e12;
  double negative_tol = -1e-12;
};

struct SimState {
  double t = 0.0;
  std::vector<std::vector<double>> fields;
};

struct MassSample {
  double t = 0.0;
  double mean = 0.0;  // trapezoid mean of N + S
};

struct Trajectory {
  SimState final;
  std::vector<SimState> snapshots;
  std::vector<MassSample> mass;
  bool steady = false;
  double steady_time = 0.0;
  long long negative_events = 0;  // cell values below negative_tol, summed over steps
  long long steps = 0;
  double dt = 0.0;
  double max_mass_drift = 0.0;  // max |mean(t) - mean(0)| / mean(0)
  double last_rate = 0.0;       // ||fields_t||_inf at the last output
};

inline double trapezoid_mean_of(const std::vector<double>& f) {
  const std::size_t n = f.size();
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < n; ++i) s += f[i];
  return s / static_cast<double>(n - 1);
}

inline double mass_mean(const SimState& s) {
  const auto& N = s.fields[0];
  const auto& S = s.fields[1];
  const std::size_t n = N.size();
  double acc = 0.5 * ((N.front() + S.front()) + (N.back() + S.back()));
  for (std::size_t i = 1; i + 1 < n; ++i) acc += N[i] + S[i];
  return acc / static_cast<double>(n - 1);
}

namespace detail {

/// Prefactored (I - c L) with the Neumann second difference L (ghost
/// reflection): rows 0 and n-1 carry 2c off the diagonal.
class NeumannTridiag {
 public:
  NeumannTridiag() = default;
  NeumannTridiag(int n, double c) : n_(n), c_(c) {
    if (c == 0.0) return;
    up_.resize(n);
    inv_.resize(n);
    const double diag = 1.0 + 2.0 * c;
    double b = diag;
    inv_[0] = 1.0 / b;
    up_[0] = -2.0 * c * inv_[0];
    for (int i = 1; i < n; ++i) {
      const double lower = (i == n - 1) ? -2.0 * c : -c;
      const double upper = (i == n - 1) ? 0.0 : -c;
      b = diag - lower * up_[i - 1];
      inv_[i] = 1.0 / b;
      up_[i] = upper * inv_[i];
    }
  }

  void solve(std::vector<double>& r) const {
    if (c_ == 0.0) return;
    const double c = c_;
    r[0] *= inv_[0];
    for (int i = 1; i < n_; ++i) {
      const double lower = (i == n_ - 1) ? -2.0 * c : -c;
      r[i] = (r[i] - lower * r[i - 1]) * inv_[i];
    }
    for (int i = n_ - 2; i >= 0; --i) r[i] -= up_[i] * r[i + 1];
  }

 private:
  int n_ = 0;
  double c_ = 0.0;
  std::vector<double> up_, inv_;
};

inline void neumann_laplacian(const std::vector<double>& u, double inv_dx2, std::vector<double>& out) {
  const std::size_t n = u.size();
  out[0] = 2.0 * (u[1] - u[0]) * inv_dx2;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2;
  out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_dx2;
}

}  // namespace detail

/// Method-of-lines integrator for one model on one grid.
class Simulator {
 public:
  Simulator(ModelSpec model, Grid1D grid, SimConfig config)
      : model_(std::move(model)), grid_(grid), cfg_(std::move(config)) {
    validate(model_.p);
    const auto D = model_.diffusivities();
    const double dmax = *std::max_element(D.begin(), D.end());
    const double dx2 = grid_.dx() * grid_.dx();
    const double explicit_cap = 0.4 * dx2 / dmax;
    if (cfg_.dt <= 0.0) cfg_.dt = std::min(0.1, 0.4 * dx2 / std::max(dmax, 1.0));
    if (cfg_.scheme == Scheme::explicit_rk4 && cfg_.dt > explicit_cap * (1.0 + 1e-12))
      throw DomainError("explicit-rk4 needs dt <= 0.4 dx^2 / max(D) = " + std::to_string(explicit_cap));
    if (!(cfg_.output_interval > 0.0)) throw DomainError("output interval must be positive");
    // Land outputs on exact step counts.
    stride_ = std::max<long long>(1, static_cast<long long>(std::ceil(cfg_.output_interval / cfg_.dt - 1e-9)));
    cfg_.dt = cfg_.output_interval / static_cast<double>(stride_);
    if (cfg_.scheme == Scheme::imex_cn)
      for (double d : D) solvers_.emplace_back(grid_.n, 0.5 * cfg_.dt * d / dx2);
    const int nf = model_.field_count();
    r0_.assign(nf, std::vector<double>(grid_.n));
    r1_ = r0_;
    tmp_ = r0_;
    lap_ = r0_;
    k_.assign(4, r0_);
  }

  double dt() const { return cfg_.dt; }
  const SimConfig& config() const { return cfg_; }
  const Grid1D& grid() const { return grid_; }
  const ModelSpec& model() const { return model_; }

  void reaction(const std::vector<std::vector<double>>& f, std::vector<std::vector<double>>& out) const {
    const auto& N = f[0];
    const auto& S = f[1];
    const double kr = model_.p.k_N / model_.p.k_I;
    for (int i = 0; i < grid_.n; ++i) {
      const double den = model_.model == Model::three ? 1.0 + f[2][i] : 1.0 + kr * N[i];
      const double r = N[i] * N[i] * S[i] / den - N[i];
      out[0][i] = r;
      out[1][i] = -r;
    }
    if (model_.model == Model::three)
      for (int i = 0; i < grid_.n; ++i) out[2][i] = model_.p.k_N * N[i] - model_.p.k_I * f[2][i];
  }

  /// One time step in place.
  void step(SimState& s) {
    if (cfg_.scheme == Scheme::imex_cn) step_imex(s);
    else step_rk4(s);
    s.t += cfg_.dt;
  }

  Trajectory run(SimState s) {
    check_state(s, "initial state");
    Trajectory tr;
    tr.dt = cfg_.dt;
    const double m0 = mass_mean(s);
    tr.mass.push_back({s.t, m0});
    std::vector<double> snaps = cfg_.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto take_snaps = [&](const SimState& st) {
      while (next_snap < snaps.size() && snaps[next_snap] <= st.t + 0.5 * cfg_.dt) {
        tr.snapshots.push_back(st);
        ++next_snap;
      }
    };
    take_snaps(s);
    const long long total = static_cast<long long>(std::llround((cfg_.t_end - s.t) / cfg_.dt));
    std::vector<std::vector<double>> prev = s.fields;
    int quiet = 0;
    for (long long k = 1; k <= total; ++k) {
      const bool output = (k % stride_ == 0) || k == total;
      if (output) prev = s.fields;
      step(s);
      ++tr.steps;
      tr.negative_events += count_negative(s);
      check_state(s, "step");
      if (!output) continue;
      const double m = mass_mean(s);
      tr.mass.push_back({s.t, m});
      tr.max_mass_drift = std::max(tr.max_mass_drift, std::abs(m - m0) / std::abs(m0));
      take_snaps(s);
      double rate = 0.0;
      for (std::size_t f = 0; f < s.fields.size(); ++f)
        for (int i = 0; i < grid_.n; ++i) rate = std::max(rate, std::abs(s.fields[f][i] - prev[f][i]) / cfg_.dt);
      tr.last_rate = rate;
      quiet = rate < cfg_.steady_tol ? quiet + 1 : 0;
      if (quiet >= cfg_.steady_outputs && !tr.steady) {
        tr.steady = true;
        tr.steady_time = s.t;
        if (cfg_.stop_when_steady) break;
      }
    }
    tr.final = s;
    return tr;
  }

 private:
  long long count_negative(const SimState& s) const {
    long long c = 0;
    for (int f = 0; f < 2; ++f)
      for (double v : s.fields[f])
        if (v < cfg_.negative_tol) ++c;
    return c;
  }

  void check_state(const SimState& s, const char* where) const {
    for (std::size_t f = 0; f < s.fields.size(); ++f) {
      if (static_cast<int>(s.fields[f].size()) != grid_.n) throw DomainError("field size does not match grid");
      for (int i = 0; i < grid_.n; ++i) {
        const double v = s.fields[f][i];
        if (!std::isfinite(v) || std::abs(v) > cfg_.blowup)
          throw NumericalError(std::string("simulation diverged (") + where + ") at t = " + std::to_string(s.t) +
                               ", field " + model_.names()[f] + ", x = " + std::to_string(grid_.x(i)) +
                               ", value = " + std::to_string(v));
      }
    }
  }

  // Crank-Nicolson diffusion with Heun (trapezoidal) reaction.
  void step_imex(SimState& s) {
    const auto D = model_.diffusivities();
    const double dt = cfg_.dt;
    const double inv_dx2 = 1.0 / (grid_.dx() * grid_.dx());
    const int nf = model_.field_count();
    reaction(s.fields, r0_);
    for (int f = 0; f < nf; ++f) {
      detail::neumann_laplacian(s.fields[f], inv_dx2, lap_[f]);
      for (int i = 0; i < grid_.n; ++i)
        tmp_[f][i] = s.fields[f][i] + 0.5 * dt * D[f] * lap_[f][i] + dt * r0_[f][i];
      solvers_[f].solve(tmp_[f]);
    }
    reaction(tmp_, r1_);
    for (int f = 0; f < nf; ++f) {
      auto& u = s.fields[f];
      for (int i = 0; i < grid_.n; ++i)
        u[i] = u[i] + 0.5 * dt * D[f] * lap_[f][i] + 0.5 * dt * (r0_[f][i] + r1_[f][i]);
      solvers_[f].solve(u);
    }
  }

  void rhs(const std::vector<std::vector<double>>& f, std::vector<std::vector<double>>& out) {
    const auto D = model_.diffusivities();
    const double inv_dx2 = 1.0 / (grid_.dx() * grid_.dx());
    reaction(f, out);
    for (std::size_t k = 0; k < f.size(); ++k) {
      detail::neumann_laplacian(f[k], inv_dx2, lap_[k]);
      for (int i = 0; i < grid_.n; ++i) out[k][i] += D[k] * lap_[k][i];
    }
  }

  void step_rk4(SimState& s) {
    const double dt = cfg_.dt;
    const int nf = model_.field_count();
    auto stage = [&](const std::vector<std::vector<double>>& k, double a) {
      for (int f = 0; f < nf; ++f)
        for (int i = 0; i < grid_.n; ++i) tmp_[f][i] = s.fields[f][i] + a * dt * k[f][i];
    };
    rhs(s.fields, k_[0]);
    stage(k_[0], 0.5);
    rhs(tmp_, k_[1]);
    stage(k_[1], 0.5);
    rhs(tmp_, k_[2]);
    stage(k_[2], 1.0);
    rhs(tmp_, k_[3]);
    for (int f = 0; f < nf; ++f)
      for (int i = 0; i < grid_.n; ++i)
        s.fields[f][i] += dt / 6.0 * (k_[0][f][i] + 2.0 * k_[1][f][i] + 2.0 * k_[2][f][i] + k_[3][f][i]);
  }

  ModelSpec model_;
  Grid1D grid_;
  SimConfig cfg_;
  long long stride_ = 1;
  std::vector<detail::NeumannTridiag> solvers_;
  std::vector<std::vector<double>> r0_, r1_, tmp_, lap_;
  std::vector<std::vector<std::vector<double>>> k_;
};

/// Step data: N = 2A on [L/4, 3L/4), zero elsewhere; S = 0; I = N.
/// Each vertex takes the average of the step over its dual cell, so the data
/// are symmetric about L/2 and carry mean exactly A.
inline SimState step_initial_state(const ModelSpec& m, const Grid1D& g) {
  SimState s;
  s.fields.assign(m.field_count(), std::vector<double>(g.n, 0.0));
  const double dx = g.dx(), a = 0.25 * g.L, b = 0.75 * g.L;
  for (int i = 0; i < g.n; ++i) {
    const double lo = std::max(0.0, g.x(i) - 0.5 * dx), hi = std::min(g.L, g.x(i) + 0.5 * dx);
    const double overlap = std::max(0.0, std::min(hi, b) - std::max(lo, a));
    s.fields[0][i] = 2.0 * m.p.A * overlap / (hi - lo);
  }
  if (m.model == Model::three) s.fields[2] = s.fields[0];
  return s;
}

/// (u_+, v_+, u_+) in physical variables with seeded multiplicative noise of
/// relative size `amplitude` on N and S, rescaled so <N + S> = A exactly.
/// symmetric = true mirrors the noise about L/2.
inline SimState perturbed_equilibrium_state(const ModelSpec& m, const Grid1D& g, std::uint64_t seed,
                                            double amplitude = 0.01, bool symmetric = false) {
  const double kappa = m.p.k_N / m.p.k_I;
  const double M = kappa * m.p.A;
  const auto eq = constant_equilibria(M, kappa);
  if (!eq.plus) throw DomainError("perturbed_equilibrium_state: M below critical mass, no u_+ state");
  const double N0 = eq.plus->u / kappa, S0 = eq.plus->v / kappa, I0 = eq.plus->w;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  SimState s;
  s.fields.assign(m.field_count(), std::vector<double>(g.n));
  std::vector<double> a(g.n), b(g.n);
  for (int i = 0; i < g.n; ++i) {
    a[i] = dist(rng);
    b[i] = dist(rng);
  }
  if (symmetric)
    for (int i = 0; i < g.n / 2; ++i) {
      a[g.n - 1 - i] = a[i];
      b[g.n - 1 - i] = b[i];
    }
  for (int i = 0; i < g.n; ++i) {
    s.fields[0][i] = N0 * (1.0 + amplitude * a[i]);
    s.fields[1][i] = S0 * (1.0 + amplitude * b[i]);
  }
  const double scale = m.p.A / mass_mean(s);
  for (int i = 0; i < g.n; ++i) {
    s.fields[0][i] *= scale;
    s.fields[1][i] *= scale;
  }
  if (m.model == Model::three) s.fields[2].assign(g.n, I0);
  return s;
}

inline SimState uniform_state(const ModelSpec& m, const Grid1D& g, double N, double S, double I = 0.0) {
  SimState s;
  s.fields.assign(m.field_count(), std::vector<double>(g.n));
  std::fill(s.fields[0].begin(), s.fields[0].end(), N);
  std::fill(s.fields[1].begin(), s.fields[1].end(), S);
  if (m.model == Model::three) std::fill(s.fields[2].begin(), s.fields[2].end(), I);
  return s;
}

inline Trajectory simulate_three(const PhysicalParams& p, const Grid1D& g, const SimState& init, const SimConfig& c) {
  Simulator sim(ModelSpec{Model::three, p}, g, c);
  return sim.run(init);
}

inline Trajectory simulate_aux(const PhysicalParams& p, const Grid1D& g, const SimState& init, const SimConfig& c) {
  Simulator sim(ModelSpec{Model::aux, p}, g, c);
  return sim.run(init);
}

struct CrossValidationReport {
  double horizon = 0.0;
  double drift = 0.0;          // max over outputs of ||state - triple||_inf (reduced variables)
  double initial_rate = 0.0;   // ||d/dt state||_inf after the first step
  std::vector<double> drift_history;
  double mass_drift = 0.0;
};

/// Starts the eps = 0 three-field system at a stationary triple and reports
/// how far it moves over t in [0, horizon]. A small drift certifies a
/// discrete near-equilibrium, not stability.
inline CrossValidationReport crossvalidate(const StationaryTriple& t, double tau, double horizon = 1.0,
                                           double dt = 0.0, Scheme scheme = Scheme::imex_cn) {
  const int n = static_cast<int>(t.u.us.size());
  const double kappa = t.kappa;
  PhysicalParams p;
  p.k_I = tau;
  p.k_N = kappa * tau;
  p.D_N = t.d;
  p.D_I = 0.0;
  p.A = t.M / kappa;
  p.L = t.u.ell;
  Grid1D g(n, t.u.ell);
  SimConfig c;
  c.dt = dt;
  c.scheme = scheme;
  c.t_end = horizon;
  c.output_interval = horizon / 10.0;
  c.stop_when_steady = false;
  Simulator sim(ModelSpec{Model::three, p}, g, c);
  SimState s;
  s.fields.assign(3, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    s.fields[0][i] = t.u.us[i] / kappa;
    s.fields[1][i] = t.v[i] / kappa;
    s.fields[2][i] = t.w[i];
  }
  const double m0 = mass_mean(s);
  CrossValidationReport rep;
  rep.horizon = horizon;
  const int outputs = 10;
  const long long per = static_cast<long long>(std::llround(c.output_interval / sim.dt()));
  for (int o = 0; o < outputs; ++o) {
    for (long long k = 0; k < per; ++k) {
      SimState before;
      if (o == 0 && k == 0) before = s;
      sim.step(s);
      if (o == 0 && k == 0)
        for (int f = 0; f < 3; ++f)
          for (int i = 0; i < n; ++i)
            rep.initial_rate = std::max(rep.initial_rate, std::abs(s.fields[f][i] - before.fields[f][i]) / sim.dt());
    }
    double dr = 0.0;
    for (int i = 0; i < n; ++i) {
      dr = std::max(dr, std::abs(kappa * s.fields[0][i] - t.u.us[i]));
      dr = std::max(dr, std::abs(kappa * s.fields[1][i] - t.v[i]));
      dr = std::max(dr, std::abs(s.fields[2][i] - t.w[i]));
    }
    rep.drift_history.push_back(dr);
    rep.drift = std::max(rep.drift, dr);
  }
  rep.mass_drift = std::abs(mass_mean(s) - m0) / m0;
  return rep;
}

}  // namespace mcrd
