// Command-line front end: one subcommand per library module.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcrd/config.hpp"
#include "mcrd/cubic.hpp"
#include "mcrd/equilibria.hpp"
#include "mcrd/multimode.hpp"
#include "mcrd/pdesim.hpp"
#include "mcrd/quadrature.hpp"
#include "mcrd/residual.hpp"
#include "mcrd/stability.hpp"
#include "mcrd/timemap.hpp"

using namespace mcrd;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

/// Thrown for bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// CSV writer: header row with units, 17 significant digits, '\n' endings.
class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw DomainError("cannot write " + path.string());
    row_text(header);
  }
  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(num(v));
    row_text(s);
  }

 private:
  void row_text(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::ofstream out_;
};

/// Options shared by every subcommand.
struct Globals {
  std::string config_path;
  std::string out_dir = ".";
  std::string manifest_path;
  int threads = 1;
};

/// Parameter flags; only flags given on the command line reach the config.
struct ParamFlags {
  std::map<std::string, double> values;

  void attach(CLI::App* app, bool physical) {
    for (const char* k : {"kappa", "tau", "d", "eps", "M", "ell"})
      app->add_option_function<double>(std::string("--") + k, [this, k](double v) { values[k] = v; },
                                       std::string("reduced parameter ") + k);
    if (physical)
      for (const char* k : {"k_N", "k_I", "D_N", "D_I", "A", "L"})
        app->add_option_function<double>(std::string("--") + k, [this, k](double v) { values[k] = v; },
                                         std::string("physical parameter ") + k);
  }
};

struct Run {
  std::string subcommand;
  json parameters = json::object();
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  json summary;
};

KeyValueConfig merged_config(const Globals& g, const ParamFlags& flags) {
  KeyValueConfig cfg;
  if (!g.config_path.empty()) cfg = KeyValueConfig::parse_file(g.config_path);
  KeyValueConfig cli;
  for (const auto& [k, v] : flags.values) cli.set(k, num(v));
  cfg.merge(cli);
  return cfg;
}

json reduced_json(const ReducedParams& r) {
  return {{"kappa", r.kappa}, {"tau", r.tau}, {"d", r.d}, {"eps", r.eps}, {"M", r.M}, {"ell", r.ell}};
}

json physical_json(const PhysicalParams& p) {
  return {{"k_N", p.k_N}, {"k_I", p.k_I}, {"D_N", p.D_N}, {"D_I", p.D_I}, {"A", p.A}, {"L", p.L}};
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(KeyValueConfig::to_double(item, flag));
    } catch (const DomainError&) {
      throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

// ---------------------------------------------------------------- equilibria

json state_json(const ConstantState& s) { return {{"u", s.u}, {"v", s.v}, {"w", s.w}}; }

void cmd_equilibria(const Globals& g, const ParamFlags& flags, std::optional<double> mu_flag,
                    const std::string& format, Run& run) {
  const auto r = reduced_from(merged_config(g, flags));
  run.parameters = reduced_json(r);
  const auto eq = constant_equilibria(r.M, r.kappa);
  const double mu = mu_flag ? *mu_flag : (eq.plus ? eq.plus->v + r.d * eq.plus->u : r.M);
  const auto ls = landscape(mu, r.d, r.kappa);
  json j;
  j["M_c"] = critical_mass(r.kappa);
  j["zero"] = state_json(eq.zero);
  j["u_plus"] = eq.plus ? json(eq.plus->u) : json(nullptr);
  j["u_minus"] = eq.minus ? json(eq.minus->u) : json(nullptr);
  j["plus"] = eq.plus ? state_json(*eq.plus) : json(nullptr);
  j["minus"] = eq.minus ? state_json(*eq.minus) : json(nullptr);
  j["mu"] = mu;
  j["mu_c"] = ls.mu_c;
  j["mu_bar"] = ls.mu_bar;
  j["mu_1"] = ls.mu_one;
  j["alpha"] = opt_json(ls.alpha);
  j["beta"] = opt_json(ls.beta);
  j["gamma"] = opt_json(ls.gamma);
  j["omega_star"] = opt_json(ls.omega_star);
  if (format != "json") {
    auto line = [](const char* name, const std::string& v) { std::printf("%-12s %s\n", name, v.c_str()); };
    auto optv = [](const std::optional<double>& v) { return v ? num(*v) : std::string("-"); };
    line("M_c", num(critical_mass(r.kappa)));
    line("zero", "(" + num(eq.zero.u) + ", " + num(eq.zero.v) + ", " + num(eq.zero.w) + ")");
    line("u_plus", eq.plus ? num(eq.plus->u) : "-");
    line("v_plus", eq.plus ? num(eq.plus->v) : "-");
    line("u_minus", eq.minus ? num(eq.minus->u) : "-");
    line("v_minus", eq.minus ? num(eq.minus->v) : "-");
    line("mu", num(mu));
    line("mu_c", num(ls.mu_c));
    line("mu_bar", num(ls.mu_bar));
    line("mu_1", num(ls.mu_one));
    line("alpha", optv(ls.alpha));
    line("beta", optv(ls.beta));
    line("gamma", optv(ls.gamma));
    line("omega_star", optv(ls.omega_star));
  }
  if (format != "text") std::cout << j.dump(2) << "\n";
  const auto path = out_path(g, "equilibria.json");
  std::ofstream(path) << j.dump(2) << "\n";
  run.outputs.push_back(path.string());
  run.summary = j;
}

// ---------------------------------------------------------------- dispersion

void cmd_dispersion(const Globals& g, const ParamFlags& flags, double sigma_max, int n_sigma, Run& run) {
  const auto r = reduced_from(merged_config(g, flags));
  run.parameters = reduced_json(r);
  const auto lin = linearize(r);
  const auto rep = dispersion_scan(lin, sigma_max, n_sigma, r.ell);
  const auto path = out_path(g, "dispersion.csv");
  {
    CsvFile csv(path, {"sigma [1/length^2]", "mode [index; -1 off-grid]", "re_lambda1 [1/time]", "re_lambda2 [1/time]",
                       "re_lambda3 [1/time]", "im_lambda1 [1/time]", "im_lambda2 [1/time]", "im_lambda3 [1/time]"});
    for (const auto& p : rep.points)
      csv.row({p.sigma, static_cast<double>(p.mode_index), p.eigenvalues[0].real(), p.eigenvalues[1].real(),
               p.eigenvalues[2].real(), p.eigenvalues[0].imag(), p.eigenvalues[1].imag(), p.eigenvalues[2].imag()});
  }
  run.outputs.push_back(path.string());
  json j;
  j["uniformStable"] = rep.uniform_stable;
  InstabilityKind kind = rep.kind;
  if (rep.uniform_stable) kind = subsystem_classification(lin).kind;
  j["kind"] = to_string(kind);
  j["spectrumKind"] = to_string(rep.kind);
  j["crossingSigma"] = opt_json(rep.crossing_sigma);
  j["crossingOscillatory"] = rep.crossing_oscillatory ? json(*rep.crossing_oscillatory) : json(nullptr);
  j["maxGrowth"] = rep.max_growth;
  j["argmaxSigma"] = rep.argmax_sigma;
  j["r_at_M_c"] = r_at_critical_mass(r.kappa, r.tau);
  j["M_star"] = opt_json(M_star(r.kappa, r.tau));
  std::cout << j.dump(2) << "\n";
  const auto jpath = out_path(g, "dispersion.json");
  std::ofstream(jpath) << j.dump(2) << "\n";
  run.outputs.push_back(jpath.string());
  run.summary = j;
}

// ---------------------------------------------------------------- stationary

struct StationaryFlags {
  std::string branch = "spike";
  std::optional<double> mu;
  int n = 1024;
  std::string out = "csv";
  bool mesa = false;
};

struct StationaryResult {
  std::vector<double> xs, us, vs, ws;
  json header;
};

StationaryResult solve_stationary(const ReducedParams& r, const StationaryFlags& f) {
  StationaryResult res;
  const double dx = r.ell / (f.n - 1);
  if (f.branch == "spike") {
    MassConstraintOptions opt;
    opt.n = f.n;
    const auto t = f.mesa ? solve_mesa_mass_constraint(r.M, r.ell, r.d, r.kappa, opt)
                          : solve_mass_constraint(r.M, r.ell, r.d, r.kappa, opt);
    res.xs = t.u.xs;
    res.us = t.u.us;
    res.vs = t.v;
    res.ws = t.w;
    const Nonlinearity nl(t.solution.portrait->nl.mu(), r.d, r.kappa);
    res.header = {{"branch", "spike"},
                  {"mu_star", t.mu_star},
                  {"mu_star_minus_mu_bar", t.solution.portrait->pinned() ? t.solution.portrait->mu_offset
                                                                         : t.mu_star - mu_bar(r.d, r.kappa)},
                  {"mean_u", t.mean_u},
                  {"mean_v", t.mean_v},
                  {"M", r.M},
                  {"mass_residual", t.mass_residual},
                  {"roots_seen", t.sign_changes},
                  {"u0", t.u.boundary_value},
                  {"u_ell", t.u.endpoint},
                  {"energy_spread", t.u.energy_spread},
                  {"residual_u_2nd", scalar_residual(t.u.us, dx, nl, 2)},
                  {"residual_u_4th", scalar_residual(t.u.us, dx, nl, 4)},
                  {"residual_system_4th", system_residual(t.u.us, t.v, t.w, dx, r.d, 0.0, r.tau, r.kappa, 4).max()}};
    return res;
  }
  if (f.branch != "increasing" && f.branch != "front") throw UsageError("--branch: expected spike, increasing or front");
  const bool front = f.branch == "front";
  if (!front && !f.mu) throw UsageError("--branch increasing needs --mu in (mu_c, mu_bar)");
  const double mu = front ? mu_bar(r.d, r.kappa) : *f.mu;
  const auto sol = solve_increasing(mu, r.ell, r.d, r.kappa, TimeMapScaling::physical, front);
  const auto p = profile_from_solution(sol, f.n);
  res.xs = p.xs;
  res.us = p.us;
  res.vs.resize(f.n);
  for (int i = 0; i < f.n; ++i) res.vs[i] = mu - r.d * p.us[i];
  res.ws = p.us;
  const Nonlinearity nl(mu, r.d, r.kappa);
  const double mean = sol.mean();
  res.header = {{"branch", f.branch},
                {"mu_star", mu},
                {"mean_u", mean},
                {"mean_u_trapezoid", mean_u(p)},
                {"mean_v", mu - r.d * mean},
                {"M", mu + (1.0 - r.d) * mean},
                {"u0", p.boundary_value},
                {"u_ell", p.endpoint},
                {"energy_spread", p.energy_spread},
                {"residual_u_2nd", scalar_residual(p.us, dx, nl, 2)},
                {"residual_u_4th", scalar_residual(p.us, dx, nl, 4)}};
  return res;
}

void write_profile(const Globals& g, const std::string& stem, const std::string& out, const StationaryResult& res,
                   Run& run) {
  if (out == "csv") {
    const auto path = out_path(g, stem + ".csv");
    CsvFile csv(path, {"x [length]", "u [1]", "v [1]", "w [1]"});
    for (std::size_t i = 0; i < res.xs.size(); ++i) csv.row({res.xs[i], res.us[i], res.vs[i], res.ws[i]});
    run.outputs.push_back(path.string());
  } else if (out == "json") {
    json j = res.header;
    j["x"] = res.xs;
    j["u"] = res.us;
    j["v"] = res.vs;
    j["w"] = res.ws;
    const auto path = out_path(g, stem + ".json");
    std::ofstream(path) << j.dump() << "\n";
    run.outputs.push_back(path.string());
  } else {
    throw UsageError("--out: expected csv or json");
  }
  std::cout << res.header.dump(2) << "\n";
  run.summary = res.header;
}

void cmd_stationary(const Globals& g, const ParamFlags& flags, const StationaryFlags& f, Run& run) {
  const auto r = reduced_from(merged_config(g, flags));
  run.parameters = reduced_json(r);
  run.parameters["branch"] = f.branch;
  run.parameters["n"] = f.n;
  if (f.mu) run.parameters["mu"] = *f.mu;
  write_profile(g, "stationary", f.out, solve_stationary(r, f), run);
}

// ---------------------------------------------------------------- multimode

void cmd_multimode(const Globals& g, const ParamFlags& flags, const std::string& pattern, int j, int n,
                   const std::string& out, bool partition, Run& run) {
  const auto r = reduced_from(merged_config(g, flags));
  run.parameters = reduced_json(r);
  if (partition) {
    const double lm = minimal_mass_length(r.M, r.d, r.kappa);
    const auto es = partition_for_mass(r.ell, lm);
    json arr = json::array();
    for (const auto& e : es) arr.push_back({{"pattern", to_string(e.pattern)}, {"j", e.j}, {"segment_length", e.segment_length}});
    json s = {{"ell_total", r.ell}, {"ell_M", lm}, {"n_M", static_cast<int>(std::floor(r.ell / lm))}, {"entries", arr}};
    std::cout << s.dump(2) << "\n";
    const auto path = out_path(g, "partition.json");
    std::ofstream(path) << s.dump(2) << "\n";
    run.outputs.push_back(path.string());
    run.summary = s;
    return;
  }
  const Pattern pat = parse_pattern(pattern);
  run.parameters["pattern"] = to_string(pat);
  run.parameters["j"] = j;
  run.parameters["n"] = n;
  MassConstraintOptions opt;
  opt.n = n;
  const auto base = solve_mass_constraint(r.M, r.ell, r.d, r.kappa, opt);
  const auto mm = assemble(base, pat, j);
  const Nonlinearity nl(base.mu_star, r.d, r.kappa);
  const double dx = r.ell / (n - 1);
  StationaryResult res;
  res.xs = mm.xs;
  res.us = mm.us;
  res.vs = mm.vs;
  res.ws = mm.ws;
  res.header = {{"pattern", to_string(pat)},
                {"j", j},
                {"segments", pattern_segments(pat, j).size()},
                {"segment_length", mm.segment_length},
                {"total_length", mm.total_length},
                {"mu_star", mm.mu_star},
                {"mean_u", trapezoid_mean(mm.us)},
                {"mean_v", trapezoid_mean(mm.vs)},
                {"base_residual_u", scalar_residual(base.u.us, dx, nl)},
                {"residual_u", scalar_residual(mm.us, dx, nl)}};
  write_profile(g, "multimode", out, res, run);
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::string model = "three";
  std::string init = "uniform-perturbed";
  std::string init_file;
  std::uint64_t seed = 1;
  int n = 1024;
  double dt = 0.0;
  double t_end = 100.0;
  double output_interval = 1.0;
  std::string snap;
  std::string scheme = "imex";
  bool run_to_end = false;
};

SimState read_state_csv(const std::string& path, const ModelSpec& m, int& n) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open initial-state file " + path);
  std::string line;
  std::getline(in, line);  // header
  SimState s;
  const int nf = m.field_count();
  s.fields.assign(nf, {});
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto vals = parse_list(line, "--init-file");
    if (static_cast<int>(vals.size()) < 1 + nf)
      throw DomainError(path + ":" + std::to_string(lineno) + ": expected x plus " + std::to_string(nf) + " fields");
    for (int f = 0; f < nf; ++f) s.fields[f].push_back(vals[1 + f]);
  }
  n = static_cast<int>(s.fields[0].size());
  return s;
}

void write_fields(const fs::path& path, const ModelSpec& m, const Grid1D& grid, const SimState& s) {
  std::vector<std::string> header{"x [length]"};
  for (const auto& name : m.names()) header.push_back(name + " [concentration]");
  CsvFile csv(path, header);
  for (int i = 0; i < grid.n; ++i) {
    std::vector<double> row{grid.x(i)};
    for (const auto& f : s.fields) row.push_back(f[i]);
    csv.row(row);
  }
}

void cmd_simulate(const Globals& g, const ParamFlags& flags, const SimulateFlags& f, Run& run) {
  const auto cfg = merged_config(g, flags);
  PhysicalParams p = physical_from(cfg);
  if (cfg.contains("kappa") || cfg.contains("M") || cfg.contains("tau") || cfg.contains("d") ||
      cfg.contains("eps") || cfg.contains("ell"))
    p = to_physical(reduced_from(cfg, to_reduced(p)));
  ModelSpec m;
  if (f.model == "three") m.model = Model::three;
  else if (f.model == "aux") m.model = Model::aux;
  else throw UsageError("--model: expected three or aux");
  m.p = p;
  SimConfig c;
  c.dt = f.dt;
  c.t_end = f.t_end;
  c.output_interval = f.output_interval;
  c.stop_when_steady = !f.run_to_end;
  if (f.scheme == "imex") c.scheme = Scheme::imex_cn;
  else if (f.scheme == "rk4") c.scheme = Scheme::explicit_rk4;
  else throw UsageError("--scheme: expected imex or rk4");
  if (!f.snap.empty()) c.snapshot_times = parse_list(f.snap, "--snap");
  int n = f.n;
  SimState init;
  if (f.init == "file") {
    if (f.init_file.empty()) throw UsageError("--init file needs --init-file PATH");
    init = read_state_csv(f.init_file, m, n);
  }
  const Grid1D grid(n, p.L);
  if (f.init == "fig8-step") init = step_initial_state(m, grid);
  else if (f.init == "uniform-perturbed") {
    init = perturbed_equilibrium_state(m, grid, f.seed);
    run.seed = f.seed;
  } else if (f.init != "file") throw UsageError("--init: expected fig8-step, uniform-perturbed or file");
  run.parameters = physical_json(p);
  run.parameters["model"] = f.model;
  run.parameters["init"] = f.init;
  run.parameters["n"] = n;
  run.parameters["t_end"] = f.t_end;
  run.parameters["scheme"] = f.scheme;
  run.parameters["output_interval"] = f.output_interval;
  Simulator sim(m, grid, c);
  run.parameters["dt"] = sim.dt();
  const auto tr = sim.run(init);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const auto path = out_path(g, "snapshot_" + std::to_string(k) + ".csv");
    write_fields(path, m, grid, tr.snapshots[k]);
    run.outputs.push_back(path.string());
  }
  const auto fpath = out_path(g, "final.csv");
  write_fields(fpath, m, grid, tr.final);
  run.outputs.push_back(fpath.string());
  const auto mpath = out_path(g, "mass.csv");
  {
    CsvFile csv(mpath, {"t [time]", "mean_N_plus_S [concentration]"});
    for (const auto& s : tr.mass) csv.row({s.t, s.mean});
  }
  run.outputs.push_back(mpath.string());
  json snaps = json::array();
  for (const auto& s : tr.snapshots) snaps.push_back(s.t);
  json j = {{"params", physical_json(p)},
            {"model", f.model},
            {"init", f.init},
            {"seed", run.seed ? json(*run.seed) : json(nullptr)},
            {"n", n},
            {"dt", tr.dt},
            {"steps", tr.steps},
            {"t_final", tr.final.t},
            {"snapshot_times", snaps},
            {"mass_drift", tr.max_mass_drift},
            {"negative_count", tr.negative_events},
            {"steady", tr.steady},
            {"steady_time", tr.steady ? json(tr.steady_time) : json(nullptr)},
            {"last_rate", tr.last_rate}};
  const auto jpath = out_path(g, "simulate.json");
  std::ofstream(jpath) << j.dump(2) << "\n";
  run.outputs.push_back(jpath.string());
  std::cout << j.dump(2) << "\n";
  run.summary = j;
}

// ---------------------------------------------------------------- asymptote

void cmd_asymptote(const Globals& g, const ParamFlags& flags, const std::string& branch, std::optional<double> mu_flag,
                   const std::string& ells_text, Run& run) {
  const auto r = reduced_from(merged_config(g, flags));
  const double mb = mu_bar(r.d, r.kappa);
  Branch b;
  double mu;
  if (branch == "spike") {
    b = Branch::spike;
    mu = mu_flag ? *mu_flag : mb + 1.0;
  } else if (branch == "increasing") {
    b = Branch::increasing;
    mu = mu_flag ? *mu_flag : 0.5 * (mu_threshold(r.d, r.kappa) + mb);
  } else if (branch == "front") {
    b = Branch::front;
    mu = mb;
  } else {
    throw UsageError("--branch: expected spike, increasing or front");
  }
  const auto ells = parse_list(ells_text, "--ells");
  if (ells.empty()) throw UsageError("--ells: need at least one length");
  run.parameters = {{"d", r.d}, {"kappa", r.kappa}, {"mu", mu}, {"branch", branch}, {"ells", ells}};
  const double limit = mean_limit(mu, r.d, r.kappa);
  const auto path = out_path(g, "asymptote.csv");
  json rows = json::array();
  {
    CsvFile csv(path, {"ell [length]", "mean_u [1]", "limit [1]", "difference [1]"});
    for (double ell : ells) {
      const double m = b == Branch::spike ? solve_spike(mu, ell, r.d, r.kappa).mean()
                                          : solve_increasing(mu, ell, r.d, r.kappa, TimeMapScaling::physical,
                                                             b == Branch::front)
                                                .mean();
      csv.row({ell, m, limit, m - limit});
      rows.push_back({{"ell", ell}, {"mean_u", m}, {"difference", m - limit}});
    }
  }
  run.outputs.push_back(path.string());
  json j = {{"branch", branch}, {"mu", mu}, {"limit", limit}, {"rows", rows}};
  std::cout << j.dump(2) << "\n";
  run.summary = j;
}

// ---------------------------------------------------------------- selftest

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
  const double dir = nl.g(u0) > 0.0 ? -1.0 : 1.0;
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

bool cmd_selftest(Run& run) {
  json checks = json::array();
  bool all = true;
  auto record = [&](const std::string& name, double err, double tol) {
    const bool ok = err < tol;
    all = all && ok;
    checks.push_back({{"check", name}, {"error", err}, {"tolerance", tol}, {"pass", ok}});
    std::printf("%-44s %s  error %.3e  tol %.1e\n", name.c_str(), ok ? "PASS" : "FAIL", err, tol);
  };
  {
    double worst = 0.0;
    for (double M : {12.0, 22.0, 40.0})
      for (double sigma : {0.0, 0.5, 5.0, 50.0}) {
        const ReducedParams p{2.5, 0.8, 0.01, 0.001, M, 100.0};
        const auto lin = linearize(p);
        const auto B = mode_matrix_B(sigma, lin);
        Eigen::Matrix3d E;
        for (int a = 0; a < 3; ++a)
          for (int c = 0; c < 3; ++c) E(a, c) = B[a][c];
        const Eigen::Vector3cd ev = E.eigenvalues();
        for (const auto& z : eig_B(sigma, lin)) {
          double best = 1e300;
          for (int k = 0; k < 3; ++k) best = std::min(best, std::abs(z - ev[k]));
          worst = std::max(worst, best / (1.0 + std::abs(z)));
        }
      }
    record("cubic roots vs dense eigenvalues", worst, 1e-9);
  }
  {
    const double d = 0.1, kappa = 2.0, mu = mu_bar(d, kappa) + 1.0;
    const Nonlinearity nl(mu, d, kappa);
    const double a = roots_alpha_beta(nl).first, gam = gamma_root(nl);
    double worst = 0.0;
    for (double f : {0.25, 0.5, 0.75}) {
      const double xi = a + f * (gam - a);
      const double rs = shoot_half_period(nl, xi, 1e-4);
      worst = std::max(worst, std::abs(rho(xi, mu, d, kappa) - rs) / rs);
    }
    record("time map vs shooting", worst, 1e-6);
  }
  {
    const double d = 0.1, kappa = 2.0, mu = mu_bar(d, kappa) + 1.0;
    const auto sol = solve_spike(mu, 2.5, d, kappa);
    const auto p = profile_from_solution(sol, 4097);
    record("mean by trapezoid vs quadrature", std::abs(mean_u(p) - sol.mean()) / sol.mean(), 1e-6);
    record("first-integral spread", p.energy_spread, 1e-6);
  }
  {
    const double d = 0.1, kappa = 2.0, mu = 6.3;
    const Nonlinearity nl(mu, d, kappa);
    double worst = 0.0;
    for (double u : {0.3, 2.0, 9.0}) {
      const double h = 1e-5 * (1.0 + u);
      const double fd = (nl.G(u + h) - nl.G(u - h)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - nl.g(u)) / (1.0 + std::abs(nl.g(u))));
    }
    record("potential derivative vs central difference", worst, 1e-7);
  }
  {
    PhysicalParams p;
    p.L = 10.0;
    const Grid1D grid(128, p.L);
    SimConfig c;
    c.t_end = 5.0;
    c.stop_when_steady = false;
    const ModelSpec m{Model::three, p};
    const auto tr = Simulator(m, grid, c).run(perturbed_equilibrium_state(m, grid, 1));
    record("simulator mass conservation", tr.max_mass_drift, 1e-12);
  }
  run.summary = {{"checks", checks}, {"pass", all}};
  return all;
}

void write_manifest(const Globals& g, const Run& run, double wall, const std::vector<std::string>& argv) {
  json m;
  m["subcommand"] = run.subcommand;
  m["tool_version"] = kVersion;
  m["parameters"] = run.parameters;
  m["seed"] = run.seed ? json(*run.seed) : json(nullptr);
  m["threads"] = g.threads;
  m["config_file"] = g.config_path.empty() ? json(nullptr) : json(g.config_path);
  m["argv"] = argv;
  m["wall_time_s"] = wall;
  m["outputs"] = run.outputs;
  m["summary"] = run.summary;
  const fs::path path = g.manifest_path.empty() ? out_path(g, run.subcommand + ".manifest.json") : fs::path(g.manifest_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << m.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary patterns, linear stability and simulation of a mass-conserved reaction-diffusion model"};
  app.name("mcrd");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key=value parameter file; command-line flags win")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "directory for output files");
  app.add_option("--manifest", g.manifest_path, "run manifest path (default <out-dir>/<subcommand>.manifest.json)");
  app.add_option("--threads", g.threads, "thread cap (computations are single-threaded)")->check(CLI::PositiveNumber);

  ParamFlags flags;
  Run run;

  auto* eq = app.add_subcommand("equilibria", "constant states and the stationary landscape");
  flags.attach(eq, true);
  std::optional<double> eq_mu;
  std::string eq_format = "both";
  eq->add_option("--mu", eq_mu, "mu for alpha, beta, gamma (default: v + d u at u_+)");
  eq->add_option("--format", eq_format, "json, text or both")->check(CLI::IsMember({"json", "text", "both"}));

  auto* disp = app.add_subcommand("dispersion", "growth rates of Neumann modes about u_+");
  flags.attach(disp, true);
  double sigma_max = 400.0;
  int n_sigma = 4001;
  disp->add_option("--sigma-max", sigma_max, "largest sigma = k^2 scanned")->check(CLI::PositiveNumber);
  disp->add_option("--n-sigma", n_sigma, "grid points in sigma")->check(CLI::Range(2, 10000000));

  auto* st = app.add_subcommand("stationary", "single-mode stationary profile");
  flags.attach(st, true);
  StationaryFlags sf;
  st->add_option("--branch", sf.branch, "spike, increasing or front")->check(CLI::IsMember({"spike", "increasing", "front"}));
  st->add_option("--mu", sf.mu, "mu for the increasing branch");
  st->add_option("--n", sf.n, "samples on [0, ell]")->check(CLI::Range(16, 100000000));
  st->add_option("--out", sf.out, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  st->add_flag("--mesa", sf.mesa, "spike branch: take the mass root closest to mu_bar");

  auto* mm = app.add_subcommand("multimode", "reflected multi-mode patterns");
  flags.attach(mm, true);
  std::string pattern = "Lambda";
  int mm_j = 1, mm_n = 1024;
  std::string mm_out = "csv";
  bool mm_partition = false;
  mm->add_option("--pattern", pattern, "Lambda, V, U or N");
  mm->add_option("--j", mm_j, "number of repeats")->check(CLI::PositiveNumber);
  mm->add_option("--n", mm_n, "samples per segment")->check(CLI::Range(16, 100000000));
  mm->add_option("--out", mm_out, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  mm->add_flag("--partition", mm_partition, "list admissible patterns for total length ell");

  auto* sim = app.add_subcommand("simulate", "time integration of the PDE");
  flags.attach(sim, true);
  SimulateFlags simf;
  sim->add_option("--model", simf.model, "three or aux")->check(CLI::IsMember({"three", "aux"}));
  sim->add_option("--init", simf.init, "fig8-step, uniform-perturbed or file")
      ->check(CLI::IsMember({"fig8-step", "uniform-perturbed", "file"}));
  sim->add_option("--init-file", simf.init_file, "CSV with x and one column per field")->check(CLI::ExistingFile);
  sim->add_option("--seed", simf.seed, "seed of the perturbation");
  sim->add_option("--n", simf.n, "grid points")->check(CLI::Range(16, 100000000));
  sim->add_option("--dt", simf.dt, "time step (0: automatic)")->check(CLI::NonNegativeNumber);
  sim->add_option("--t-end", simf.t_end, "final time")->check(CLI::PositiveNumber);
  sim->add_option("--output-interval", simf.output_interval, "spacing of mass and steadiness checks")
      ->check(CLI::PositiveNumber);
  sim->add_option("--snap", simf.snap, "snapshot times t1,t2,...");
  sim->add_option("--scheme", simf.scheme, "imex or rk4")->check(CLI::IsMember({"imex", "rk4"}));
  sim->add_flag("--run-to-end", simf.run_to_end, "do not stop at steady state");

  auto* as = app.add_subcommand("asymptote", "mean of u versus ell against the large-ell limit");
  flags.attach(as, true);
  std::string as_branch = "spike", as_ells = "10,20,40,80,160";
  std::optional<double> as_mu;
  as->add_option("--branch", as_branch, "spike, increasing or front")
      ->check(CLI::IsMember({"spike", "increasing", "front"}));
  as->add_option("--mu", as_mu, "mu (defaults: mu_bar + 1 or the middle of (mu_c, mu_bar))");
  as->add_option("--ells", as_ells, "comma-separated lengths");

  auto* self = app.add_subcommand("selftest", "oracle-equivalence checks");

  if (argc <= 1) {
    std::cerr << app.help() << "\n";
    return 2;
  }
  std::vector<std::string> args(argv, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;
  try {
    if (*eq) {
      run.subcommand = "equilibria";
      cmd_equilibria(g, flags, eq_mu, eq_format, run);
    } else if (*disp) {
      run.subcommand = "dispersion";
      cmd_dispersion(g, flags, sigma_max, n_sigma, run);
    } else if (*st) {
      run.subcommand = "stationary";
      cmd_stationary(g, flags, sf, run);
    } else if (*mm) {
      run.subcommand = "multimode";
      cmd_multimode(g, flags, pattern, mm_j, mm_n, mm_out, mm_partition, run);
    } else if (*sim) {
      run.subcommand = "simulate";
      cmd_simulate(g, flags, simf, run);
    } else if (*as) {
      run.subcommand = "asymptote";
      cmd_asymptote(g, flags, as_branch, as_mu, as_ells, run);
    } else if (*self) {
      run.subcommand = "selftest";
      status = cmd_selftest(run) ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    run.summary = {{"error", e.what()}};
    status = 1;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_manifest(g, run, wall, args);
  } catch (const std::exception& e) {
    std::cerr << "cannot write manifest: " << e.what() << "\n";
    return 1;
  }
  return status;
}
