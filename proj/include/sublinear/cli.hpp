// SPDX-License-Identifier: Apache-2.0
// Subcommand drivers behind the `sublinear` executable. Each runner
// reads a RunConfig, writes its artifacts plus manifest.json into the
// output directory and returns the process exit code (0 ok, 1 input
// error, 2 numerical non-convergence).
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sublinear/config.hpp"
#include "sublinear/io.hpp"
#include "sublinear/jko.hpp"
#include "sublinear/reference.hpp"
#include "sublinear/rng.hpp"
#include "sublinear/steady.hpp"

namespace sublinear::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitConvergence = 2;

struct RunContext {
  RunConfig config;
  std::filesystem::path out_dir = ".";
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

inline std::string fmt_ext(double v) { return std::isinf(v) ? (v > 0 ? "inf" : "-inf") : io::fmt(v); }

inline std::string fmt_ext(const ExtendedValue& v) {
  if (v.status == LimitStatus::undetermined) return "undetermined";
  return fmt_ext(v.value);
}

inline Potential build_potential(const RunConfig& c) {
  return make_potential(c.str("potential.name"), c.real("potential.alpha"), c.real("potential.coef"),
                        c.real("potential.center"));
}

inline Problem build_problem(const RunConfig& c, double mass) {
  const double eps = c.real("viscosity");
  if (!(eps >= 0.0)) throw InputError("viscosity: must be nonnegative");
  return Problem(make_law(c.str("law.name"), c.reals("law.params")), build_potential(c), mass, eps);
}

inline Problem build_problem(const RunConfig& c) { return build_problem(c, c.positive("mass")); }

//! `x:alpha` pairs separated by commas or semicolons.
inline AtomList parse_atoms(const RunConfig& c) {
  std::string s = c.str("initial.atoms");
  for (char& ch : s) {
    if (ch == ',' || ch == ';') ch = ' ';
  }
  std::istringstream is(s);
  AtomList atoms;
  std::string tok;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw InputError("initial.atoms: expected x:alpha, got '" + tok + "'");
    try {
      atoms.push_back({std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))});
    } catch (const std::exception&) {
      throw InputError("initial.atoms: expected x:alpha, got '" + tok + "'");
    }
    if (!(atoms.back().mass > 0.0)) throw InputError("initial.atoms: atom masses must be positive");
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  return atoms;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> w;
  std::string t;
  while (is >> t) w.push_back(t);
  return w;
}

inline double word_real(const std::vector<std::string>& w, std::size_t i, double fallback, const char* what) {
  if (i >= w.size()) {
    if (std::isnan(fallback)) throw InputError(std::string("initial: missing parameter ") + what);
    return fallback;
  }
  try {
    return std::stod(w[i]);
  } catch (const std::exception&) {
    throw InputError(std::string("initial: parameter ") + what + " is not a number");
  }
}

//! Cell averages of a Gaussian on the grid.
inline std::vector<double> gaussian_cells(Interval dom, std::size_t cells, double mu, double sigma, double mass) {
  std::vector<double> u(cells);
  const double dx = dom.length() / static_cast<double>(cells);
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); };
  double total = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    const double a = dom.a + static_cast<double>(j) * dx, b = dom.a + static_cast<double>(j + 1) * dx;
    u[j] = (cdf(b) - cdf(a)) / dx;
    total += u[j] * dx;
  }
  require(total > 0.0, "initial: gaussian has no mass inside the domain");
  for (double& x : u) x *= mass / total;
  return u;
}

//! Support hint [lo, hi] of the configured initial profile (for auto domains).
inline Interval initial_extent(const RunConfig& c) {
  const auto w = words(c.str("initial"));
  require(!w.empty(), "initial: empty profile");
  Interval e{kInf, -kInf};
  auto add = [&](double lo, double hi) {
    e.a = std::min(e.a, lo);
    e.b = std::max(e.b, hi);
  };
  if (w[0] == "dirac") {
    const double x0 = word_real(w, 1, NAN, "x0");
    add(x0, x0);
  } else if (w[0] == "uniform") {
    add(word_real(w, 1, NAN, "a"), word_real(w, 2, NAN, "b"));
  } else if (w[0] == "gaussian") {
    const double mu = word_real(w, 1, 0.0, "mu"), s = word_real(w, 2, 0.5, "sigma");
    add(mu - 8.0 * s, mu + 8.0 * s);
  } else if (w[0] == "minimizer-plus-bump") {
    const double mu = word_real(w, 2, 1.0, "mu"), s = word_real(w, 3, 0.25, "sigma");
    add(mu - 8.0 * s, mu + 8.0 * s);
  } else if (w[0] == "random") {
    add(-1.0 - 4.0, 1.0 + 4.0);
  }
  for (const auto& a : parse_atoms(c)) add(a.x, a.x);
  return e;
}

//! Simulation interval: `domain=a b`, or `auto` covering the initial datum
//! and the steady profile with a margin.
inline Interval resolve_domain(const RunConfig& c, const Problem& p) {
  const std::string s = c.str("domain");
  if (s != "auto") {
    const auto v = c.reals("domain");
    if (v.size() != 2 || !(v[1] > v[0])) throw InputError("domain: expected 'a b' with a < b, or auto");
    return {v[0], v[1]};
  }
  Interval d = initial_extent(c);
  try {
    const Interval s_dom = default_domain(p, level(p));
    d.a = std::min(d.a, s_dom.a);
    d.b = std::max(d.b, s_dom.b);
  } catch (const ConvergenceError&) {
  }
  if (!std::isfinite(d.a) || !std::isfinite(d.b)) d = {-5.0, 5.0};
  const double pad = std::max(0.5, 0.1 * (d.b - d.a));
  return {d.a - pad, d.b + pad};
}

//! Initial datum as a grid measure of total mass p.mass.
inline GridMeasure build_initial(const RunConfig& c, const Problem& p, Interval dom, std::size_t cells) {
  const auto w = words(c.str("initial"));
  require(!w.empty(), "initial: empty profile");
  const std::string& kind = w[0];
  AtomList atoms = parse_atoms(c);
  const double m = p.mass;

  if (kind == "from-file") {
    require(w.size() >= 2, "initial: from-file needs a path");
    const std::string path = w[1];
    GridMeasure g = [&] {
      const io::Table t = io::read_table(path);
      if (t.header == "w,Y") {
        const auto q = io::read_quantile(path);
        const Interval qd{q.front() - 1.0, q.back() + 1.0};
        const Interval gd = c.str("domain") == "auto" ? qd : dom;
        return grid_from_quantile(q, gd, cells, c.positive("atom_threshold"));
      }
      AtomList file_atoms = w.size() >= 3 ? io::read_atoms(w[2]) : AtomList{};
      file_atoms.insert(file_atoms.end(), atoms.begin(), atoms.end());
      std::sort(file_atoms.begin(), file_atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
      return io::read_density(path, file_atoms);
    }();
    if (std::abs(g.mass() - m) > 1e-9 * std::max(1.0, m)) {
      std::ostringstream os;
      os.precision(17);
      os << "mass: initial file carries mass " << g.mass() << " but mass=" << m;
      throw InputError(os.str());
    }
    return g;
  }

  if (kind == "minimizer") {
    require(atoms.empty(), "initial.atoms: not combinable with the minimizer profile");
    return minimizer(p, dom, cells, c.reals("steady.atom_split"));
  }
  for (const auto& a : atoms) {
    if (!dom.contains(a.x)) throw InputError("initial.atoms: atom outside the domain");
  }
  const double atom_mass = total_mass(atoms);
  if (kind == "dirac") {
    const double x0 = word_real(w, 1, NAN, "x0");
    require(dom.contains(x0), "initial: dirac position outside the domain");
    require(m - atom_mass > 0.0, "initial.atoms: atoms exceed the total mass");
    atoms.push_back({x0, m - atom_mass});
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    AtomList merged;
    for (const auto& a : atoms) {
      if (!merged.empty() && merged.back().x == a.x) merged.back().mass += a.mass;
      else merged.push_back(a);
    }
    return GridMeasure(dom, std::vector<double>(cells, 0.0), merged);
  }

  const double reg = m - atom_mass;
  require(reg > 0.0, "initial.atoms: atoms must carry less than the total mass");
  std::vector<double> u(cells, 0.0);
  const double dx = dom.length() / static_cast<double>(cells);
  if (kind == "uniform") {
    const double a = word_real(w, 1, NAN, "a"), b = word_real(w, 2, NAN, "b");
    require(b > a, "initial: uniform needs a < b");
    require(a >= dom.a && b <= dom.b, "initial: uniform support outside the domain");
    for (std::size_t j = 0; j < cells; ++j) {
      const double c0 = dom.a + static_cast<double>(j) * dx, c1 = c0 + dx;
      const double ov = std::max(0.0, std::min(b, c1) - std::max(a, c0));
      u[j] = reg / (b - a) * ov / dx;
    }
  } else if (kind == "gaussian") {
    const double mu = word_real(w, 1, 0.0, "mu"), s = word_real(w, 2, 0.5, "sigma");
    require(s > 0.0, "initial: gaussian sigma must be positive");
    u = gaussian_cells(dom, cells, mu, s, reg);
  } else if (kind == "random") {
    const auto k = static_cast<int>(word_real(w, 1, 3.0, "k"));
    require(k >= 1, "initial: random needs k >= 1");
    XorShift64Star rng(static_cast<std::uint64_t>(c.integer("seed", 0)));
    std::vector<double> weights(k);
    double wsum = 0.0;
    std::vector<std::vector<double>> parts;
    for (int i = 0; i < k; ++i) {
      const double mu = rng.uniform(-1.0, 1.0), s = rng.uniform(0.2, 0.5);
      weights[i] = rng.uniform(0.2, 1.0);
      wsum += weights[i];
      parts.push_back(gaussian_cells(dom, cells, mu, s, 1.0));
    }
    for (int i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < cells; ++j) u[j] += reg * weights[i] / wsum * parts[i][j];
    }
  } else if (kind == "minimizer-plus-bump") {
    const double frac = word_real(w, 1, 0.1, "fraction");
    const double mu = word_real(w, 2, 1.0, "mu"), s = word_real(w, 3, 0.25, "sigma");
    require(frac > 0.0 && frac < 1.0, "initial: minimizer-plus-bump fraction must lie in (0, 1)");
    const Problem pm(p.law, p.potential, (1.0 - frac) * reg, p.viscosity);
    const GridMeasure base = minimizer(pm, dom, cells, c.reals("steady.atom_split"));
    const auto bump = gaussian_cells(dom, cells, mu, s, frac * reg);
    for (std::size_t j = 0; j < cells; ++j) u[j] = base.density()[j] + bump[j];
    for (const auto& a : base.atoms()) atoms.push_back(a);
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    // the minimizer's atoms are part of the regular budget here: rescale
    const double have = dx * std::accumulate(u.begin(), u.end(), 0.0) + total_mass(atoms);
    const double fix = (m - total_mass(atoms)) / (have - total_mass(atoms));
    for (double& x : u) x *= fix;
  } else {
    throw InputError("initial: unknown profile '" + kind + "'");
  }
  return GridMeasure(dom, std::move(u), std::move(atoms), m);
}

inline JkoConfig build_jko(const RunConfig& c) {
  JkoConfig j;
  j.tau = c.positive("tau");
  j.inner_tol = c.str("inner_tol") == "auto" ? -1.0 : c.positive("inner_tol");
  j.inner_max_iter = static_cast<int>(c.integer("inner_max_iter", 1));
  return j;
}

inline void write_manifest(const RunContext& ctx, const std::string& sub, const std::vector<std::string>& outputs,
                           const nlohmann::json& extra = {}) {
  nlohmann::json j;
  j["subcommand"] = sub;
  j["config"] = ctx.config.resolved();
  j["outputs"] = outputs;
  if (!extra.is_null()) j["results"] = extra;
  auto os = io::open_out((ctx.out_dir / "manifest.json").string());
  os << j.dump(2) << '\n';
}

inline std::string out_path(const RunContext& ctx, const std::string& name) {
  return (ctx.out_dir / name).string();
}

// --- subcommands ------------------------------------------------------------

inline int run_simulate(const RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const Problem p = build_problem(c);
  const Interval dom = resolve_domain(c, p);
  const auto cells = static_cast<std::size_t>(c.integer("n_cells", 2));
  const auto n = static_cast<std::size_t>(c.integer("n_quantiles", 2));
  const GridMeasure g0 = build_initial(c, p, dom, cells);
  const QuantileMeasure q0 = quantile_from_grid(g0, n);
  const JkoConfig jc = build_jko(c);
  const double T = c.real("T");
  if (!(T >= 0.0)) throw InputError("T: must be nonnegative");
  EvolveOptions opt;
  opt.record_every = static_cast<int>(c.integer("record_every", 0));
  opt.diag_cells = cells;
  opt.atom_threshold = c.positive("atom_threshold");
  const Trajectory tr = evolve(p, q0, jc, T, opt);

  std::vector<std::string> outputs;
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "quantile_%06ld.csv", std::lround(tr.times[k] / jc.tau));
    io::write_quantile(out_path(ctx, name), tr.states[k]);
    outputs.emplace_back(name);
  }
  io::write_diagnostics(out_path(ctx, "diagnostics.csv"), tr.diagnostics);
  outputs.emplace_back("diagnostics.csv");
  const QuantileMeasure& qT = tr.states.back();
  Interval fd = dom;
  fd.a = std::min(fd.a, qT.front());
  fd.b = std::max(fd.b, qT.back());
  const GridMeasure gT = grid_from_quantile(qT, fd, cells, opt.atom_threshold);
  io::write_density(out_path(ctx, "density_final.csv"), gT);
  io::write_atoms(out_path(ctx, "atoms_final.csv"), gT.atoms());
  outputs.emplace_back("density_final.csv");
  outputs.emplace_back("atoms_final.csv");
  std::size_t failed = 0;
  for (bool ok : tr.step_converged) failed += ok ? 0 : 1;
  nlohmann::json res;
  res["domain"] = {dom.a, dom.b};
  res["steps"] = tr.step_converged.size();
  res["non_converged_steps"] = failed;
  res["F_initial"] = tr.diagnostics.front().F;
  res["F_final"] = tr.diagnostics.back().F;
  write_manifest(ctx, "simulate", outputs, res);
  *ctx.out << "steps=" << tr.step_converged.size() << "\nF_initial=" << io::fmt(tr.diagnostics.front().F)
           << "\nF_final=" << io::fmt(tr.diagnostics.back().F) << '\n';
  if (failed) {
    *ctx.err << "error: inner solver did not converge in " << failed << " step(s)\n";
    return kExitConvergence;
  }
  return kExitOk;
}

inline std::string support_string(const SteadyProfile& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.support.size(); ++i) {
    if (i) os << ' ';
    os << '[' << fmt_ext(s.support[i].a) << ',' << fmt_ext(s.support[i].b) << ']';
  }
  return os.str();
}

inline int run_steady(const RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const Problem p = build_problem(c);
  const SteadyProfile s = steady_profile(p);
  if (s.critical_mass.status == LimitStatus::undetermined) {
    *ctx.err << "error: critical mass undetermined (partial value " << io::fmt(s.critical_mass.value) << ")\n";
    return kExitConvergence;
  }
  Interval dom;
  if (c.str("domain") == "auto") {
    dom = default_domain(p, s.level);
  } else {
    dom = resolve_domain(c, p);
  }
  const auto cells = static_cast<std::size_t>(c.integer("n_cells", 2));
  const GridMeasure g = minimizer(p, dom, cells, c.reals("steady.atom_split"));
  std::ostringstream text;
  text << "d=" << fmt_ext(s.depth) << '\n'
       << "m_c=" << fmt_ext(s.critical_mass) << '\n'
       << "v_level=" << io::fmt(s.level) << '\n'
       << "atom_mass=" << io::fmt(s.atom_mass) << '\n'
       << "support=" << support_string(s) << '\n';
  *ctx.out << text.str();
  {
    auto os = io::open_out(out_path(ctx, "steady.txt"));
    os << text.str();
  }
  io::write_density(out_path(ctx, "density.csv"), g);
  io::write_atoms(out_path(ctx, "atoms.csv"), g.atoms());
  nlohmann::json res;
  res["d"] = fmt_ext(s.depth);
  res["m_c"] = fmt_ext(s.critical_mass);
  res["v_level"] = s.level;
  res["atom_mass"] = s.atom_mass;
  res["support"] = support_string(s);
  res["domain"] = {dom.a, dom.b};
  write_manifest(ctx, "steady", {"steady.txt", "density.csv", "atoms.csv"}, res);
  return kExitOk;
}

inline int run_critical_mass(const RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const double m = c.has("mass") ? c.positive("mass") : 1.0;
  const Problem p = build_problem(c, m);
  const ExtendedValue mc = critical_mass(p);
  std::ostringstream text;
  text << "d=" << fmt_ext(p.law.depth) << "\nm_c=" << fmt_ext(mc) << "\nstatus=" << to_string(mc.status) << '\n';
  *ctx.out << text.str();
  {
    auto os = io::open_out(out_path(ctx, "critical_mass.txt"));
    os << text.str();
  }
  nlohmann::json res;
  res["d"] = fmt_ext(p.law.depth);
  res["m_c"] = fmt_ext(mc);
  res["status"] = to_string(mc.status);
  write_manifest(ctx, "critical-mass", {"critical_mass.txt"}, res);
  if (mc.status == LimitStatus::undetermined) {
    *ctx.err << "error: critical mass undetermined\n";
    return kExitConvergence;
  }
  return kExitOk;
}

//! L1 distance between the JKO reconstruction and the FV density.
inline double jko_fv_distance(const GridMeasure& jko, const FvState& fv) {
  double d = 0.0;
  for (std::size_t j = 0; j < fv.cells(); ++j) d += std::abs(jko.density()[j] - fv.u[j]);
  return d * fv.dx() + jko.singular_mass();
}

inline int run_compare(const RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const Problem p = build_problem(c);
  const Problem p_jko(p.law, p.potential, p.mass, 0.0);
  const Interval dom = resolve_domain(c, p);
  const auto cells0 = static_cast<std::size_t>(c.integer("n_cells", 2));
  const auto n0 = static_cast<std::size_t>(c.integer("n_quantiles", 2));
  const auto levels = static_cast<int>(c.integer("compare.levels", 1));
  const JkoConfig jc0 = build_jko(c);
  const double T = c.real("T");
  if (!(T >= 0.0)) throw InputError("T: must be nonnegative");
  const double atom_threshold = c.positive("atom_threshold");
  std::vector<std::pair<std::size_t, double>> rows;
  GridMeasure last_jko(dom, std::vector<double>(2, 0.0), {{dom.a, 1.0}});
  FvState last_fv;
  bool any_failed = false;
  for (int l = 0; l < levels; ++l) {
    const std::size_t cells = cells0 << l, n = n0 << l;
    JkoConfig jc = jc0;
    jc.tau = jc0.tau / static_cast<double>(1 << l);
    const GridMeasure g0 = build_initial(c, p, dom, cells);
    if (!g0.atoms().empty()) throw InputError("initial: compare needs an initial datum without atoms");
    if (g0.domain().a != dom.a || g0.domain().b != dom.b || g0.cells() != cells) {
      throw InputError("initial: compare needs the file grid to match domain and n_cells");
    }
    const FvState s0 = fv_state_from_grid(p, g0);
    const FvRun fv = fv_evolve(p, s0, T, 0.9 * cfl_bound(p, s0));
    EvolveOptions opt;
    opt.record_every = 0;
    opt.fisher_diagnostics = false;
    opt.diag_cells = cells;
    const Trajectory tr = evolve(p_jko, quantile_from_grid(g0, n), jc, T, opt);
    any_failed = any_failed || !tr.all_converged;
    const GridMeasure gj = grid_from_quantile(tr.states.back(), dom, cells, atom_threshold);
    rows.emplace_back(cells, jko_fv_distance(gj, fv.state));
    last_jko = gj;
    last_fv = fv.state;
  }
  {
    auto os = io::open_out(out_path(ctx, "compare.csv"));
    os << "resolution,l1_distance\n";
    for (const auto& [r, d] : rows) os << r << ',' << io::fmt(d) << '\n';
  }
  io::write_density(out_path(ctx, "fv_density.csv"), to_grid(last_fv));
  io::write_density(out_path(ctx, "jko_density.csv"), last_jko);
  nlohmann::json res = nlohmann::json::array();
  for (const auto& [r, d] : rows) res.push_back({{"resolution", r}, {"l1_distance", d}});
  write_manifest(ctx, "compare", {"compare.csv", "fv_density.csv", "jko_density.csv"}, res);
  for (const auto& [r, d] : rows) *ctx.out << "resolution=" << r << " l1_distance=" << io::fmt(d) << '\n';
  if (any_failed) {
    *ctx.err << "error: inner solver did not converge\n";
    return kExitConvergence;
  }
  return kExitOk;
}

inline int run_flow(const RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const Potential pot = build_potential(c);
  const double T = c.real("T");
  if (!(T >= 0.0)) throw InputError("T: must be nonnegative");
  const double ode_dt = c.positive("ode_dt");
  const auto xs = c.reals("flow.x0");
  require(!xs.empty(), "flow.x0: need at least one starting point");
  std::vector<std::string> outputs{"flow.csv"};
  {
    auto os = io::open_out(out_path(ctx, "flow.csv"));
    os << "x0,t,x\n";
    for (double x0 : xs) {
      const double x = flow_map(pot, x0, T, ode_dt);
      os << io::fmt(x0) << ',' << io::fmt(T) << ',' << io::fmt(x) << '\n';
      *ctx.out << "x0=" << io::fmt(x0) << " t=" << io::fmt(T) << " x=" << io::fmt(x) << '\n';
    }
  }
  const AtomList atoms = parse_atoms(c);
  if (!atoms.empty()) {
    io::write_atoms(out_path(ctx, "atoms.csv"), transport_atoms(pot, atoms, T, ode_dt));
    outputs.emplace_back("atoms.csv");
  }
  write_manifest(ctx, "flow", outputs);
  return kExitOk;
}

inline int run_check(const RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const auto w = words(c.str("initial"));
  if (w.empty() || w[0] != "from-file") throw InputError("initial: check-stationary expects 'from-file path [atoms]'");
  // mass defaults to the file's own mass
  double m;
  if (c.has("mass")) {
    m = c.positive("mass");
  } else {
    const AtomList file_atoms = w.size() >= 3 ? io::read_atoms(w[2]) : AtomList{};
    m = io::read_density(w.at(1), file_atoms).mass();
  }
  const Problem p = build_problem(c, m);
  const GridMeasure g = build_initial(c, p, {0.0, 1.0}, 2);
  const StationarityReport rep = check_stationary(p, g, c.positive("stationary.tol"));
  std::ostringstream text;
  text << "verdict=" << to_string(rep.verdict) << '\n';
  for (std::size_t i = 0; i < rep.components.size(); ++i) {
    const auto& k = rep.components[i];
    text << "component " << i << ": support=[" << io::fmt(k.refined.a) << ',' << io::fmt(k.refined.b)
         << "] level=" << io::fmt(k.level) << " endpoint_mismatch=" << io::fmt(k.endpoint_mismatch)
         << " profile_mismatch=" << io::fmt(k.profile_mismatch) << " mass=" << io::fmt(k.mass) << '\n';
  }
  for (std::size_t k = 0; k < g.atoms().size(); ++k) {
    text << "atom " << k << ": x=" << io::fmt(g.atoms()[k].x) << " alpha=" << io::fmt(g.atoms()[k].mass)
         << " on_Q=" << (rep.atom_on_q[k] ? "yes" : "no") << '\n';
  }
  text << "singular_fisher=" << io::fmt(rep.singular_fisher) << '\n'
       << "mass_balance_error=" << io::fmt(rep.mass_balance_error) << '\n';
  for (const auto& f : rep.failures) text << "failure: " << f << '\n';
  *ctx.out << text.str();
  {
    auto os = io::open_out(out_path(ctx, "check.txt"));
    os << text.str();
  }
  nlohmann::json res;
  res["verdict"] = to_string(rep.verdict);
  res["failures"] = rep.failures;
  write_manifest(ctx, "check-stationary", {"check.txt"}, res);
  return kExitOk;
}

inline const std::map<std::string, int (*)(const RunContext&)>& subcommands() {
  static const std::map<std::string, int (*)(const RunContext&)> m = {
      {"simulate", run_simulate}, {"steady", run_steady}, {"critical-mass", run_critical_mass},
      {"compare", run_compare},   {"flow", run_flow},     {"check-stationary", run_check},
  };
  return m;
}

//! Runs a subcommand, mapping exceptions onto exit codes.
inline int dispatch(const std::string& sub, RunContext ctx) {
  const auto it = subcommands().find(sub);
  if (it == subcommands().end()) {
    *ctx.err << "error: unknown subcommand '" << sub << "'\n";
    return kExitInput;
  }
  try {
    std::filesystem::create_directories(ctx.out_dir);
    return it->second(ctx);
  } catch (const InputError& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConvergenceError& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::filesystem::filesystem_error& e) {
    *ctx.err << "error: out: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace sublinear::cli
