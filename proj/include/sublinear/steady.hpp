// SPDX-License-Identifier: Apache-2.0
// Steady states: the mass function M(v) = \int H(V(x) - v) dx, the
// critical mass m_c = M(V_min), the level v solving M(v) = m, minimizers
// H(V - v) plus (m - m_c)^+ condensed on argmin V, and a checker for
// stationary (zero-dissipation) measures.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sublinear/functionals.hpp"
#include "sublinear/measures.hpp"
#include "sublinear/model.hpp"
#include "sublinear/quadrature.hpp"

namespace sublinear {

namespace steady_detail {

//! Height c above which H(c) is negligible: d when finite, otherwise the
//! first c with H(c) < 1e-16.
inline double profile_cut(const DiffusionLaw& law) {
  if (law.depth.is_finite()) return law.depth.value;
  double c = 1.0;
  while (h_pseudo_inverse(law, c) >= 1e-16) {
    c *= 1.5;
    if (c > 1e6) throw ConvergenceError("profile_cut: H does not decay", c);
  }
  return c;
}

//! Outermost point beyond `from` (in direction dir) where V(x) - v reaches
//! `height`; requires coercivity.
inline double outer_crossing(const Potential& pot, double v, double height, double from, int dir) {
  auto f = [&](double x) { return pot.v(x) - v - height; };
  double step = 1.0;
  double x = from;
  while (f(x + dir * step) < 0.0) {
    step *= 2.0;
    if (step > 1e8) throw InputError("potential: not coercive (V stays below the profile cut)");
  }
  double lo = from, hi = from + dir * step;
  if (f(lo) >= 0.0) return lo;
  return quad::find_root(f, std::min(lo, hi), std::max(lo, hi), 50);
}

//! Region where H(V - v) is non-negligible, with all interior crossings
//! of V - v = cut and the minimum set as breakpoints.
struct Region {
  double left = 0.0;
  double right = 0.0;
  std::vector<double> crossings;
  MinimumSet minima;
};

inline Region relevant_region(const Problem& p, double v, double cut) {
  Region r;
  r.minima = minimum_set(p.potential);
  const auto& parts = r.minima.parts;
  require(!parts.empty(), "potential: no minimum located");
  const double q_lo = parts.front().a, q_hi = parts.back().b;
  r.left = outer_crossing(p.potential, v, cut, q_lo, -1);
  r.right = outer_crossing(p.potential, v, cut, q_hi, +1);
  auto f = [&](double x) { return p.potential.v(x) - v - cut; };
  const int samples = 4000;
  const double dx = (r.right - r.left) / samples;
  double x0 = r.left, f0 = f(x0);
  for (int i = 1; i <= samples; ++i) {
    const double x1 = r.left + i * dx;
    const double f1 = f(x1);
    if (i > 1 && i < samples && ((f0 < 0.0) != (f1 < 0.0))) {
      r.crossings.push_back(quad::find_root(f, x0, x1, 50));
    }
    x0 = x1;
    f0 = f1;
  }
  return r;
}

//! Integral of f over [lo, hi], treating points in `singular` (assumed
//! sorted) with dyadic panels so endpoint blow-ups are resolved.
template <class F>
ExtendedValue integrate_with_singular_points(const F& f, double lo, double hi,
                                             const std::vector<double>& singular,
                                             const std::vector<double>& breaks) {
  // singular points within rounding distance of an edge are moved onto it
  for (double q : singular) {
    const double snap = 1e-9 * (1.0 + std::abs(q));
    if (std::abs(q - lo) <= snap) lo = q;
    if (std::abs(q - hi) <= snap) hi = q;
  }
  std::vector<double> pts{lo, hi};
  for (double b : breaks) {
    const bool near_singular = std::any_of(singular.begin(), singular.end(), [&](double q) {
      return std::abs(q - b) <= 1e-9 * (1.0 + std::abs(q));
    });
    if (b > lo && b < hi && !near_singular) pts.push_back(b);
  }
  std::vector<double> sing;
  for (double q : singular) {
    if (q >= lo && q <= hi) sing.push_back(q);
  }
  std::sort(pts.begin(), pts.end());
  // Dyadic radius around each singular point, staying clear of breaks.
  std::vector<std::pair<double, double>> holes;
  for (double q : sing) {
    double r0 = 0.5;
    for (double b : pts) {
      if (b != q) r0 = std::min(r0, 0.9 * std::abs(b - q));
    }
    for (double s : sing) {
      if (s != q) r0 = std::min(r0, 0.45 * std::abs(s - q));
    }
    holes.emplace_back(q, r0);
    pts.push_back(q - r0);
    pts.push_back(q + r0);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  ExtendedValue total = ExtendedValue::finite(0.0);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = std::max(pts[i], lo), b = std::min(pts[i + 1], hi);
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const bool inside_hole = std::any_of(holes.begin(), holes.end(), [&](const auto& hr) {
      return std::abs(mid - hr.first) < hr.second;
    });
    if (inside_hole) continue;
    total.value += quad::integrate(f, a, b).value;
  }
  for (const auto& [q, r0] : holes) {
    for (int dir : {-1, +1}) {
      if ((dir < 0 && q - r0 < lo - 1e-15) || (dir > 0 && q + r0 > hi + 1e-15)) {
        // Hole clipped by the interval: integrate toward q from the edge.
        const double rr = dir < 0 ? q - lo : hi - q;
        if (!(rr > 0.0)) continue;
        const ExtendedValue part = quad::integrate_toward(f, q, rr, dir);
        if (!part.is_finite()) return part.is_infinite() ? part : ExtendedValue::undetermined(total.value);
        total.value += part.value;
        continue;
      }
      const ExtendedValue part = quad::integrate_toward(f, q, r0, dir);
      if (!part.is_finite()) {
        return part.is_infinite() ? part : ExtendedValue::undetermined(total.value + part.value);
      }
      total.value += part.value;
    }
  }
  return total;
}

//! \int H(V(x) - v) dx over the line, for v <= V_min.
inline ExtendedValue profile_mass(const Problem& p, double v) {
  const double cut = profile_cut(p.law);
  const Region r = relevant_region(p, v, cut);
  for (const auto& part : r.minima.parts) {
    if (part.b > part.a && v >= r.minima.v_min) return ExtendedValue::infinite();
  }
  auto f = [&](double x) {
    const double w = p.potential.v(x) - v;
    return w > 0.0 ? h_pseudo_inverse(p.law, w) : kInf;
  };
  std::vector<double> breaks = r.crossings;
  std::vector<double> singular;
  for (const auto& part : r.minima.parts) {
    breaks.push_back(part.a);
    breaks.push_back(part.b);
    if (part.a == part.b) singular.push_back(part.a);
  }
  return integrate_with_singular_points(f, r.left, r.right, singular, breaks);
}

}  // namespace steady_detail

inline double minimum_value(const Problem& p) { return minimum_set(p.potential).v_min; }

//! M(v) = \int H(V(x) - v) dx for v < V_min.
inline double mass_function(const Problem& p, double v) {
  require(p.potential.coercive, "mass_function: potential must be coercive");
  const double vmin = minimum_value(p);
  require(v < vmin, "mass_function: v must lie below V_min");
  const ExtendedValue m = steady_detail::profile_mass(p, v);
  if (!m.is_finite()) throw ConvergenceError("mass_function: quadrature did not converge", m.value);
  return m.value;
}

//! m_c = \int H(V(x) - V_min) dx, possibly +inf.
inline ExtendedValue critical_mass(const Problem& p) {
  require(p.potential.coercive, "critical_mass: potential must be coercive");
  return steady_detail::profile_mass(p, minimum_value(p));
}

//! v = M^{-1}(m) when m < m_c, V_min otherwise.
inline double level(const Problem& p, const ExtendedValue& mc) {
  const double vmin = minimum_value(p);
  if (mc.status == LimitStatus::undetermined) {
    throw ConvergenceError("level: critical mass undetermined", mc.value);
  }
  if (mc.is_finite() && p.mass >= mc.value) return vmin;
  auto g = [&](double v) { return mass_function(p, v) - p.mass; };
  double lo;
  if (p.law.depth.is_finite()) {
    lo = vmin - p.law.depth.value;
  } else {
    double step = 1.0;
    lo = vmin - step;
    while (g(lo) > 0.0) {
      step *= 2.0;
      lo = vmin - step;
      if (step > 1e6) throw ConvergenceError("level: cannot bracket from below", step);
    }
  }
  double gap = 1.0;
  double hi = vmin - gap;
  while (g(hi) < 0.0) {
    gap *= 0.5;
    hi = vmin - gap;
    // mass indistinguishable from m_c at quadrature accuracy
    if (gap < 1e-12 * (1.0 + std::abs(vmin))) return vmin;
  }
  if (hi < lo) lo = hi - gap;
  return quad::find_root(g, lo, hi, 52);
}

inline double level(const Problem& p) { return level(p, critical_mass(p)); }

//! Closed-form description of the minimizer.
struct SteadyProfile {
  ExtendedValue depth;
  ExtendedValue critical_mass;
  double level = 0.0;
  double atom_mass = 0.0;
  MinimumSet q_set;
  //! Components of {V < level + d} (whole real line when d = inf).
  std::vector<Interval> support;
};

inline SteadyProfile steady_profile(const Problem& p) {
  SteadyProfile s;
  s.depth = p.law.depth;
  s.critical_mass = critical_mass(p);
  s.level = level(p, s.critical_mass);
  s.q_set = minimum_set(p.potential);
  if (s.critical_mass.is_finite()) s.atom_mass = std::max(0.0, p.mass - s.critical_mass.value);
  if (s.depth.is_finite()) {
    const auto r = steady_detail::relevant_region(p, s.level, s.depth.value);
    std::vector<double> ends{r.left};
    ends.insert(ends.end(), r.crossings.begin(), r.crossings.end());
    ends.push_back(r.right);
    for (std::size_t i = 0; i + 1 < ends.size(); i += 2) s.support.push_back({ends[i], ends[i + 1]});
  } else {
    s.support.push_back({-kInf, kInf});
  }
  return s;
}

//! Interval holding all but ~1e-16 of the profile mass (or its compact
//! support), padded by 5%.
inline Interval default_domain(const Problem& p, double lvl) {
  const double cut = steady_detail::profile_cut(p.law);
  const auto r = steady_detail::relevant_region(p, lvl, cut);
  const double pad = 0.05 * (r.right - r.left);
  return {r.left - pad, r.right + pad};
}

//! Cell averages of H(V - v) on `domain` (singular points of the profile
//! resolved with dyadic panels; by default the isolated minimum points of V
//! when v reaches V_min).
inline std::vector<double> profile_cell_averages(const Problem& p, double v, Interval domain, std::size_t cells,
                                                 std::vector<double> singular = {}) {
  if (singular.empty()) {
    const MinimumSet qs = minimum_set(p.potential);
    if (v >= qs.v_min) {
      for (const auto& part : qs.parts) {
        if (part.a == part.b) singular.push_back(part.a);
      }
    }
  }
  const double dx = domain.length() / static_cast<double>(cells);
  auto f = [&](double x) {
    const double w = p.potential.v(x) - v;
    return w > 0.0 ? h_pseudo_inverse(p.law, w) : kInf;
  };
  std::vector<double> breaks;
  if (p.law.depth.is_finite()) {
    const auto r = steady_detail::relevant_region(p, v, p.law.depth.value);
    breaks = r.crossings;
    breaks.push_back(r.left);
    breaks.push_back(r.right);
  }
  std::vector<double> u(cells, 0.0);
  for (std::size_t j = 0; j < cells; ++j) {
    const double a = domain.a + static_cast<double>(j) * dx;
    const double b = (j + 1 == cells) ? domain.b : domain.a + static_cast<double>(j + 1) * dx;
    const ExtendedValue m = steady_detail::integrate_with_singular_points(f, a, b, singular, breaks);
    if (!m.is_finite()) throw ConvergenceError("profile_cell_averages: cell integral diverged", m.value);
    u[j] = std::max(0.0, m.value / (b - a));
  }
  return u;
}

//! Minimizer of F at the problem mass, sampled as cell averages plus atoms
//! (m - m_c)^+ on argmin V. `atom_split` distributes the excess over the
//! points of the minimum set (required when there is more than one).
inline GridMeasure minimizer(const Problem& p, Interval domain, std::size_t cells,
                             const std::vector<double>& atom_split = {}) {
  require(cells >= 2, "minimizer: need at least two cells");
  const ExtendedValue mc = critical_mass(p);
  const double v = level(p, mc);
  const MinimumSet qs = minimum_set(p.potential);
  auto u = profile_cell_averages(p, v, domain, cells);
  AtomList atoms;
  const double excess = mc.is_finite() ? std::max(0.0, p.mass - mc.value) : 0.0;
  if (excess > 0.0) {
    require(qs.is_finite_set(), "minimizer: minimum set is not finite; supply an explicit atom split");
    const auto pts = qs.points();
    std::vector<double> split = atom_split;
    if (split.empty()) {
      require(pts.size() == 1,
              "minimizer: m > m_c with several minimum points; the minimizer is not unique, supply atom_split");
      split = {1.0};
    }
    require(split.size() == pts.size(), "minimizer: atom_split must have one weight per minimum point");
    double wsum = 0.0;
    for (double w : split) {
      require(w >= 0.0, "minimizer: atom_split weights must be nonnegative");
      wsum += w;
    }
    require(wsum > 0.0, "minimizer: atom_split weights sum to zero");
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (split[k] > 0.0) {
        require(domain.contains(pts[k]), "minimizer: minimum point outside the grid domain");
        atoms.push_back({pts[k], excess * split[k] / wsum});
      }
    }
  }
  return GridMeasure(domain, std::move(u), std::move(atoms));
}

// --- stationarity -----------------------------------------------------------

enum class Stationarity { stationary_minimizer, stationary_non_minimizing, not_stationary };

inline const char* to_string(Stationarity s) {
  switch (s) {
    case Stationarity::stationary_minimizer: return "stationary-minimizer";
    case Stationarity::stationary_non_minimizing: return "stationary-non-minimizing";
    case Stationarity::not_stationary: return "not-stationary";
  }
  return "?";
}

struct ComponentReport {
  Interval cells_span;       // discrete support [edge(j0), edge(j1 + 1)]
  Interval refined;          // endpoints where V - v_I = d (when found)
  double level = 0.0;        // v_I
  double endpoint_mismatch = 0.0;  // |V(a) - V(b)| (0 for unbounded components)
  double profile_mismatch = 0.0;   // max |u - H(V - v_I)| / max H(V - v_I)
  std::vector<double> q_points;    // Q_I
  double mass = 0.0;               // M_I
};

struct StationarityReport {
  Stationarity verdict = Stationarity::not_stationary;
  std::vector<ComponentReport> components;
  std::vector<bool> atom_on_q;
  double singular_fisher = 0.0;
  double mass_balance_error = 0.0;
  std::vector<std::string> failures;
};

//! Tests the zero-dissipation characterization: every connected component
//! of {u > 0} is an admissible local sublevel carrying H(V - v_I), atoms
//! sit on Q(u), and the masses balance. `tol` applies to potential levels
//! (relative to 1 + |V|) and to the relative profile mismatch.
inline StationarityReport check_stationary(const Problem& p, const GridMeasure& g, double tol = 1e-3) {
  StationarityReport rep;
  const auto u = g.density();
  const std::size_t m = g.cells();
  const double dx = g.dx();
  const double umax = *std::max_element(u.begin(), u.end());
  const bool finite_depth = p.law.depth.is_finite();
  const double depth_value = p.law.depth.value;
  const auto& V = p.potential.v;
  auto fail = [&](const std::string& msg) { rep.failures.push_back(msg); };

  // Connected components of the positivity set (cells above a relative floor).
  const double thr = 1e-12 * umax;
  std::vector<std::pair<std::size_t, std::size_t>> comps;
  for (std::size_t j = 0; j < m;) {
    if (u[j] <= thr) {
      ++j;
      continue;
    }
    std::size_t k = j;
    while (k + 1 < m && u[k + 1] > thr) ++k;
    comps.emplace_back(j, k);
    j = k + 1;
  }
  if (comps.empty() && !g.atoms().empty()) fail("purely singular measure has no continuous density");

  const MinimumSet global_q = minimum_set(p.potential);
  std::vector<double> all_q;
  double regular_mass_expected = 0.0;
  for (const auto& [j0, j1] : comps) {
    ComponentReport c;
    c.cells_span = {g.edge(j0), g.edge(j1 + 1)};
    // v_I from the profile: H(V - v) = u  <=>  v = V + E'(u).
    std::vector<double> est;
    for (std::size_t j = j0; j <= j1; ++j) {
      if (u[j] > 1e-6 * umax) est.push_back(V(g.center(j)) + energy_slope(p.law, u[j]));
    }
    if (est.empty()) est.push_back(V(g.center((j0 + j1) / 2)) + energy_slope(p.law, u[(j0 + j1) / 2]));
    std::nth_element(est.begin(), est.begin() + static_cast<std::ptrdiff_t>(est.size() / 2), est.end());
    c.level = est[est.size() / 2];
    // Q_I when the level touches min_I V.
    const auto [xq, vq] = quad::minimize(V, c.cells_span.a, c.cells_span.b);
    const double scale = 1.0 + std::abs(vq);
    if (std::abs(vq - c.level) <= tol * scale) {
      c.level = vq;
      if (std::abs(vq - global_q.v_min) <= tol * scale) {
        c.level = std::min(vq, global_q.v_min);
        for (double q : global_q.points()) {
          if (q >= c.cells_span.a && q <= c.cells_span.b) c.q_points.push_back(q);
        }
      }
      if (c.q_points.empty()) c.q_points.push_back(xq);
    }
    if (c.level > vq + tol * scale) fail("component level above min V on the component");

    // Endpoints: admissible sublevel needs V(a) = V(b) = v_I + d.
    c.refined = c.cells_span;
    if (finite_depth) {
      auto f = [&](double x) { return V(x) - c.level - depth_value; };
      auto refine = [&](double edge, double& out) {
        const double lo = std::max(g.domain().a, edge - 1.5 * dx), hi = std::min(g.domain().b, edge + 1.5 * dx);
        if ((f(lo) < 0.0) != (f(hi) < 0.0)) {
          out = quad::find_root(f, lo, hi, 50);
          return true;
        }
        return false;
      };
      const bool ok_a = refine(c.cells_span.a, c.refined.a);
      const bool ok_b = refine(c.cells_span.b, c.refined.b);
      c.endpoint_mismatch = std::abs(V(c.refined.a) - V(c.refined.b));
      const double lvl_a = V(c.refined.a) - c.level - depth_value;
      const double lvl_b = V(c.refined.b) - c.level - depth_value;
      if (!ok_a || !ok_b || std::abs(lvl_a) > tol * (1.0 + std::abs(c.level)) ||
          std::abs(lvl_b) > tol * (1.0 + std::abs(c.level))) {
        fail("component endpoints are not at the level v_I + d");
      }
      if (c.endpoint_mismatch > tol * (1.0 + std::abs(V(c.refined.a)))) fail("V(a) != V(b) on a component");
    } else if (comps.size() > 1) {
      fail("infinite depth: the continuous density must be positive everywhere");
    }

    // Profile H(V - v_I) on the component.
    const Interval span{c.cells_span.a, c.cells_span.b};
    std::vector<double> sing;
    if (!c.q_points.empty()) sing = c.q_points;
    std::vector<double> ref;
    try {
      ref = profile_cell_averages(p, c.level, span, j1 - j0 + 1, sing);
    } catch (const ConvergenceError&) {
      fail("H(V - v_I) is not integrable on a component");
      rep.components.push_back(std::move(c));
      continue;
    }
    double refmax = 0.0, diff = 0.0;
    for (std::size_t j = j0; j <= j1; ++j) {
      const double r = ref[j - j0];
      const bool singular_cell = std::any_of(sing.begin(), sing.end(), [&](double q) {
        return std::abs(q - g.center(j)) <= dx;
      });
      if (singular_cell) continue;
      refmax = std::max(refmax, r);
      diff = std::max(diff, std::abs(u[j] - r));
    }
    c.profile_mismatch = refmax > 0.0 ? diff / refmax : diff;
    if (c.profile_mismatch > tol) fail("density differs from H(V - v_I) on a component");

    // M_I over the refined interval.
    auto hf = [&](double x) {
      const double w = V(x) - c.level;
      return w > 0.0 ? h_pseudo_inverse(p.law, w) : kInf;
    };
    const ExtendedValue mi =
        steady_detail::integrate_with_singular_points(hf, c.refined.a, c.refined.b, sing, {});
    c.mass = mi.is_finite() ? mi.value : kInf;
    regular_mass_expected += c.mass;
    all_q.insert(all_q.end(), c.q_points.begin(), c.q_points.end());
    rep.components.push_back(std::move(c));
  }

  // Atoms must sit on Q(u).
  const double atom_tol = 1.5 * dx;
  for (const auto& a : g.atoms()) {
    rep.singular_fisher += a.mass * sqr(p.potential.v_prime(a.x));
    const bool on_q = std::any_of(all_q.begin(), all_q.end(), [&](double q) { return std::abs(q - a.x) <= atom_tol; });
    rep.atom_on_q.push_back(on_q);
    if (!on_q) fail("atom outside Q(u)");
  }
  rep.mass_balance_error = std::abs(regular_mass_expected + g.singular_mass() - g.mass());
  if (!(rep.mass_balance_error <= tol * g.mass())) fail("mass balance m = sum M_I + atoms violated");

  if (!rep.failures.empty()) {
    rep.verdict = Stationarity::not_stationary;
    return rep;
  }

  // Stationary; minimizing iff it matches the global minimizer structure.
  const Problem pm(p.law, p.potential, g.mass(), p.viscosity);
  const ExtendedValue mc = critical_mass(pm);
  const double v_star = level(pm, mc);
  const double vmin = minimum_value(pm);
  bool minimizing = true;
  for (const auto& c : rep.components) {
    if (std::abs(c.level - v_star) > tol * (1.0 + std::abs(v_star))) minimizing = false;
  }
  for (const auto& a : g.atoms()) {
    if (std::abs(V(a.x) - vmin) > tol * (1.0 + std::abs(vmin)) + std::abs(p.potential.v_prime(a.x)) * atom_tol) {
      minimizing = false;
    }
  }
  const double regular_star = mc.is_finite() ? std::min(g.mass(), mc.value) : g.mass();
  if (std::abs(regular_mass_expected - regular_star) > tol * g.mass()) minimizing = false;
  rep.verdict = minimizing ? Stationarity::stationary_minimizer : Stationarity::stationary_non_minimizing;
  return rep;
}

}  // namespace sublinear
