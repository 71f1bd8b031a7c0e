// SPDX-License-Identifier: Apache-2.0
// Explicit conservative finite-volume solver for the viscous problem
// u_t = (beta_eps(u)_x + V' u)_x with no-flux walls, and the
// characteristic flow X' = -V'(X) used to transport atoms.
#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "sublinear/functionals.hpp"
#include "sublinear/measures.hpp"
#include "sublinear/model.hpp"

namespace sublinear {

struct FvState {
  Interval domain;
  std::vector<double> u;
  double t = 0.0;
  double viscosity = 0.0;

  std::size_t cells() const { return u.size(); }
  double dx() const { return domain.length() / static_cast<double>(u.size()); }
  double center(std::size_t j) const { return domain.a + (static_cast<double>(j) + 0.5) * dx(); }
  double face(std::size_t j) const { return domain.a + static_cast<double>(j) * dx(); }
  double mass() const {
    double s = 0.0;
    for (double x : u) s += x;
    return s * dx();
  }
  double sup() const { return *std::max_element(u.begin(), u.end()); }
};

inline FvState make_fv_state(const Problem& p, Interval domain, std::vector<double> u) {
  require(domain.b > domain.a, "fv: empty domain");
  require(u.size() >= 2, "fv: need at least two cells");
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!(u[j] >= 0.0) || !std::isfinite(u[j])) {
      std::ostringstream os;
      os << "fv: density must be finite and nonnegative (cell " << j << ")";
      throw InputError(os.str());
    }
  }
  return FvState{domain, std::move(u), 0.0, p.viscosity};
}

inline FvState fv_state_from_grid(const Problem& p, const GridMeasure& g) {
  require(g.atoms().empty(), "fv: the finite-volume state cannot carry atoms");
  return make_fv_state(p, g.domain(), std::vector<double>(g.density().begin(), g.density().end()));
}

inline GridMeasure to_grid(const FvState& s) { return GridMeasure(s.domain, s.u, {}); }

//! Largest admissible explicit time step for state s.
inline double cfl_bound(const Problem& p, const FvState& s) {
  // max beta' over [0, sup u] on a log-spaced sample (beta' is not assumed monotone)
  const double umax = std::max(s.sup(), 1e-300);
  double bp = p.law.beta_prime(0.0);
  for (int k = 0; k <= 200; ++k) {
    const double r = umax * std::pow(10.0, -12.0 + 12.0 * k / 200.0);
    bp = std::max(bp, p.law.beta_prime(r));
  }
  const double dx = s.dx();
  double vmax = 0.0;
  for (std::size_t j = 0; j <= s.cells(); ++j) vmax = std::max(vmax, std::abs(p.potential.v_prime(s.face(j))));
  return 0.4 * dx * dx / (bp + s.viscosity + dx * vmax);
}

struct FvStepInfo {
  double clipped = 0.0;  // negative mass removed before renormalization
};

//! One explicit Euler step; throws InputError when dt exceeds the CFL bound.
inline FvState fv_step(const Problem& p, const FvState& s, double dt, FvStepInfo* info = nullptr) {
  const double bound = cfl_bound(p, s);
  if (!(dt > 0.0) || dt > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "fv_step: dt = " << dt << " violates the CFL bound " << bound;
    throw InputError(os.str());
  }
  const std::size_t m = s.cells();
  const double dx = s.dx();
  const double eps = s.viscosity;
  std::vector<double> b(m);
  for (std::size_t j = 0; j < m; ++j) b[j] = p.law.beta(s.u[j]) + eps * s.u[j];
  // flux[j] lives on face j (between cells j-1 and j); faces 0 and m are walls
  std::vector<double> flux(m + 1, 0.0);
  for (std::size_t j = 1; j < m; ++j) {
    const double vp = p.potential.v_prime(s.face(j));
    const double up = vp > 0.0 ? s.u[j] : s.u[j - 1];
    flux[j] = (b[j] - b[j - 1]) / dx + vp * up;
  }
  FvState out = s;
  const double mass0 = s.mass();
  double neg = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    out.u[j] = s.u[j] + dt / dx * (flux[j + 1] - flux[j]);
    if (out.u[j] < 0.0) {
      neg -= out.u[j] * dx;
      out.u[j] = 0.0;
    }
  }
  if (neg > 0.0) {
    const double m1 = out.mass();
    if (m1 > 0.0) {
      for (double& x : out.u) x *= mass0 / m1;
    }
  }
  out.t = s.t + dt;
  if (info) info->clipped = neg;
  return out;
}

struct FvDiagnostics {
  std::vector<double> t;
  std::vector<double> mass;
  std::vector<double> sup;
  std::vector<double> F;
  double max_clipped = 0.0;
};

struct FvRun {
  FvState state;
  FvDiagnostics diagnostics;
};

//! Integrates to time T with steps of at most dt (the last step is
//! equalized so that T is hit exactly). Records diagnostics every
//! `record_every` steps (0: start and end only).
inline FvRun fv_evolve(const Problem& p, const FvState& s0, double T, double dt, std::size_t record_every = 0) {
  require(T >= 0.0, "fv_evolve: T must be nonnegative");
  require(dt > 0.0, "fv_evolve: dt must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
  const double h = steps ? T / static_cast<double>(steps) : 0.0;
  FvRun run{s0, {}};
  auto record = [&](const FvState& s) {
    run.diagnostics.t.push_back(s.t);
    run.diagnostics.mass.push_back(s.mass());
    run.diagnostics.sup.push_back(s.sup());
    run.diagnostics.F.push_back(entropy_grid(p, to_grid(s)));
  };
  record(run.state);
  for (std::size_t k = 1; k <= steps; ++k) {
    FvStepInfo info;
    run.state = fv_step(p, run.state, h, &info);
    run.diagnostics.max_clipped = std::max(run.diagnostics.max_clipped, info.clipped);
    if ((record_every && k % record_every == 0) || k == steps) record(run.state);
  }
  return run;
}

//! L1 distance between two cell densities on the same grid.
inline double l1_distance(const FvState& a, const FvState& b) {
  require(a.cells() == b.cells() && a.domain.a == b.domain.a && a.domain.b == b.domain.b,
          "l1_distance: grids differ");
  double s = 0.0;
  for (std::size_t j = 0; j < a.cells(); ++j) s += std::abs(a.u[j] - b.u[j]);
  return s * a.dx();
}

//! X_t(x0) for X' = -V'(X), classical RK4 with step <= ode_dt.
inline double flow_map(const Potential& pot, double x0, double t, double ode_dt = 1e-3) {
  require(t >= 0.0, "flow_map: t must be nonnegative");
  require(ode_dt > 0.0, "flow_map: ode_dt must be positive");
  if (t == 0.0) return x0;
  const auto n = static_cast<std::size_t>(std::ceil(t / ode_dt - 1e-12));
  const double h = t / static_cast<double>(n);
  double x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double k1 = -pot.v_prime(x);
    const double k2 = -pot.v_prime(x + 0.5 * h * k1);
    const double k3 = -pot.v_prime(x + 0.5 * h * k2);
    const double k4 = -pot.v_prime(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

//! Atoms pushed along the flow; masses are carried unchanged (an upper
//! bound for the true singular part).
inline AtomList transport_atoms(const Potential& pot, const AtomList& atoms, double t, double ode_dt = 1e-3) {
  return push_forward_atoms(atoms, [&](double x) { return flow_map(pot, x, t, ode_dt); });
}

}  // namespace sublinear
