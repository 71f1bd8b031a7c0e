// SPDX-License-Identifier: Apache-2.0
// Entropy F = E + V in both representations, the Fisher dissipation I
// with its velocity field, and a displacement-convexity probe.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "sublinear/measures.hpp"
#include "sublinear/model.hpp"

namespace sublinear {

//! Forward quantile slopes delta_i = (Y_{i+1} - Y_i) / h, last one repeated.
inline std::vector<double> quantile_slopes(const QuantileMeasure& q) {
  const std::size_t n = q.size();
  const double h = q.mass_step();
  std::vector<double> d(n);
  for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (q[i + 1] - q[i]) / h;
  d[n - 1] = d[n - 2];
  return d;
}

//! F in mass coordinates: h * sum [G(delta_i) + V(Y_i)].
inline double entropy_quantile(const Problem& p, const QuantileMeasure& q) {
  const auto d = quantile_slopes(q);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    s += perspective(p.law, d[i]) + p.potential.v(q[i]);
  }
  return q.mass_step() * s;
}

//! dx * sum [E(u_j) + V(x_j) u_j] + sum alpha_k V(x_k).
inline double entropy_grid(const Problem& p, const GridMeasure& g) {
  double s = 0.0;
  for (std::size_t j = 0; j < g.cells(); ++j) {
    const double u = g.density()[j];
    if (u > 0.0) s += energy_density(p.law, u) + p.potential.v(g.center(j)) * u;
  }
  s *= g.dx();
  for (const auto& a : g.atoms()) s += a.mass * p.potential.v(a.x);
  return s;
}

struct FisherReport {
  double total = 0.0;
  double regular_part = 0.0;
  double singular_part = 0.0;
  //! xi = d_x beta(u) / u + V' per cell; NaN where u <= threshold.
  std::vector<double> velocity_field;
  //! Set when beta(u) jumps by more than beta_inf / 2 between adjacent
  //! positive cells; a grid-scale proxy for beta(u) not in W^{1,1}_loc.
  bool infinite = false;
};

//! Fisher dissipation of a grid measure. Face fluxes use the harmonic mean
//! of the two adjacent cell densities; the per-cell velocity uses central
//! differences of beta(u). threshold < 0 selects 1e-10 * max u.
inline FisherReport fisher(const Problem& p, const GridMeasure& g, double threshold = -1.0) {
  FisherReport rep;
  const auto u = g.density();
  const std::size_t m = g.cells();
  const double dx = g.dx();
  const double umax = *std::max_element(u.begin(), u.end());
  if (threshold < 0.0) threshold = 1e-10 * umax;
  std::vector<double> b(m);
  for (std::size_t j = 0; j < m; ++j) b[j] = p.beta_eps(u[j]);
  auto positive = [&](std::size_t j) { return u[j] > threshold; };
  const double jump_cap = std::isfinite(p.law.beta_inf) ? 0.5 * p.law.beta_inf : kInf;

  for (std::size_t j = 0; j + 1 < m; ++j) {
    if (!positive(j) || !positive(j + 1)) continue;
    if (std::abs(b[j + 1] - b[j]) > jump_cap) rep.infinite = true;
    const double uh = 2.0 * u[j] * u[j + 1] / (u[j] + u[j + 1]);
    const double xi = (b[j + 1] - b[j]) / (dx * uh) + p.potential.v_prime(g.edge(j + 1));
    rep.regular_part += dx * xi * xi * uh;
  }
  rep.velocity_field.assign(m, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < m; ++j) {
    if (!positive(j)) continue;
    const std::size_t l = (j > 0 && positive(j - 1)) ? j - 1 : j;
    const std::size_t r = (j + 1 < m && positive(j + 1)) ? j + 1 : j;
    if (l == r) continue;
    const double grad = (b[r] - b[l]) / (dx * static_cast<double>(r - l));
    rep.velocity_field[j] = grad / u[j] + p.potential.v_prime(g.center(j));
  }
  for (const auto& a : g.atoms()) rep.singular_part += a.mass * sqr(p.potential.v_prime(a.x));
  rep.total = rep.infinite ? kInf : rep.regular_part + rep.singular_part;
  return rep;
}

struct ConvexityReport {
  std::vector<double> thetas;
  std::vector<double> defects;
  double min_defect = kInf;
};

//! Defect (1-t) F(q0) + t F(q1) - (lambda/2) t (1-t) W2^2 - F(q_t) along
//! the displacement interpolation; nonnegative for lambda-convex F.
inline ConvexityReport displacement_convexity_check(const Problem& p, const QuantileMeasure& q0,
                                                    const QuantileMeasure& q1,
                                                    std::span<const double> thetas) {
  ConvexityReport rep;
  const double f0 = entropy_quantile(p, q0), f1 = entropy_quantile(p, q1);
  const double w2 = sqr(wasserstein(q0, q1));
  const double lambda = p.potential.lambda;
  for (double t : thetas) {
    const double ft = entropy_quantile(p, displacement_interpolate(q0, q1, t));
    const double d = (1.0 - t) * f0 + t * f1 - 0.5 * lambda * t * (1.0 - t) * w2 - ft;
    rep.thetas.push_back(t);
    rep.defects.push_back(d);
    rep.min_defect = std::min(rep.min_defect, d);
  }
  return rep;
}

//! One row of the per-step diagnostics time series.
struct DiagnosticsRow {
  double t = 0.0;
  double F = 0.0;
  double I_grid = 0.0;
  double I_rate = 0.0;
  double W2_step = 0.0;
  double mom2 = 0.0;
  double atom_mass_total = 0.0;
};

inline constexpr const char* kDiagnosticsHeader = "t,F,I_grid,I_rate,W2_step,mom2,atom_mass_total";

}  // namespace sublinear
