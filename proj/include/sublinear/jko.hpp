// SPDX-License-Identifier: Apache-2.0
// Minimizing-movement (JKO) time stepping on quantile vectors.
//
// One step minimizes
//   Phi(Y) = h sum_i G(delta_i) + h sum_i V(Y_i) + |Y - Y_prev|^2_{L2(0,m)} / (2 tau)
// over nondecreasing Y. In these coordinates the monotone cone is the only
// constraint; its active faces are runs of equal quantiles, i.e. atoms.
//
// The inner solver is an active-set projected Newton method: runs of equal
// values are kept as blocks sharing one coordinate, the block Hessian is
// tridiagonal, a line search stops at the first gap that closes (blocks
// merge), and blocks whose KKT multipliers turn negative are split. The
// stopping test is the L2 norm of the projected-gradient map
// Y - P(Y - grad Phi), with P the isotonic projection (pool adjacent
// violators).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sublinear/functionals.hpp"
#include "sublinear/measures.hpp"
#include "sublinear/model.hpp"

namespace sublinear {

//! Euclidean projection onto nondecreasing vectors (pool adjacent violators).
inline std::vector<double> isotonic_projection(std::span<const double> v) {
  std::vector<double> level;
  std::vector<std::size_t> width;
  level.reserve(v.size());
  width.reserve(v.size());
  for (double x : v) {
    level.push_back(x);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w1 = static_cast<double>(width[width.size() - 2]);
      const double w2 = static_cast<double>(width.back());
      const double merged = (w1 * level[level.size() - 2] + w2 * level.back()) / (w1 + w2);
      const std::size_t wsum = width[width.size() - 2] + width.back();
      level.pop_back();
      width.pop_back();
      level.back() = merged;
      width.back() = wsum;
    }
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < level.size(); ++k) out.insert(out.end(), width[k], level[k]);
  return out;
}

struct JkoConfig {
  double tau = 1e-2;
  //! Projected-gradient tolerance; <= 0 selects 1e-9 (1 + |F(Y_prev)|).
  double inner_tol = -1.0;
  int inner_max_iter = 50000;
  double armijo = 1e-4;
  double backtrack = 0.5;
};

namespace jko_detail {

//! Strictly convex proximal objective on monotone quantile vectors.
struct ProxObjective {
  const Problem& problem;
  std::span<const double> anchor;  // Y_prev (ignored when inv_tau == 0)
  double h;
  double inv_tau;
  double curvature_floor;

  std::size_t n() const { return anchor.size(); }

  //! Gap k carries weight 2 for the last gap (final slope replicated).
  double gap_weight(std::size_t k) const { return k + 2 == n() ? 2.0 : 1.0; }

  double value(std::span<const double> y) const {
    const std::size_t nn = y.size();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < nn; ++k) {
      s += gap_weight(k) * perspective(problem.law, (y[k + 1] - y[k]) / h);
    }
    for (std::size_t i = 0; i < nn; ++i) {
      s += problem.potential.v(y[i]);
      if (inv_tau > 0.0) s += 0.5 * inv_tau * sqr(y[i] - anchor[i]);
    }
    return h * s;
  }

  //! Euclidean gradient; zero gaps use the one-sided slope G'(0+).
  void gradient(std::span<const double> y, std::vector<double>& g) const {
    const std::size_t nn = y.size();
    g.assign(nn, 0.0);
    for (std::size_t k = 0; k + 1 < nn; ++k) {
      const double gp = gap_weight(k) * perspective_slope(problem.law, (y[k + 1] - y[k]) / h);
      g[k] -= gp;
      g[k + 1] += gp;
    }
    for (std::size_t i = 0; i < nn; ++i) {
      g[i] += h * problem.potential.v_prime(y[i]);
      if (inv_tau > 0.0) g[i] += h * inv_tau * (y[i] - anchor[i]);
    }
  }

  double potential_curvature(double x) const {
    double c;
    if (problem.potential.v_second) {
      c = problem.potential.v_second(x);
    } else {
      const double e = 1e-6 * (1.0 + std::abs(x));
      c = (problem.potential.v_prime(x + e) - problem.potential.v_prime(x - e)) / (2.0 * e);
    }
    if (!std::isfinite(c)) c = 1e12;
    return std::clamp(c, curvature_floor, 1e12);
  }
};

inline double projected_gradient_norm(std::span<const double> y, std::span<const double> g, double h) {
  std::vector<double> trial(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) trial[i] = y[i] - g[i] / h;
  const auto proj = isotonic_projection(trial);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += sqr(y[i] - proj[i]);
  return std::sqrt(h * s);
}

struct InnerResult {
  std::vector<double> y;
  bool converged = false;
  int iterations = 0;
  double residual = kInf;
  double objective = 0.0;
};

//! Thomas algorithm for a symmetric tridiagonal system.
inline std::vector<double> solve_tridiagonal(std::vector<double> diag, const std::vector<double>& off,
                                             std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = off[i - 1] / diag[i - 1];
    diag[i] -= m * off[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - off[i] * x[i + 1]) / diag[i];
  return x;
}

inline InnerResult minimize_monotone(const ProxObjective& obj, std::span<const double> start, double tol,
                                     int max_iter, double armijo, double backtrack) {
  const std::size_t n = start.size();
  const double h = obj.h;
  InnerResult res;
  std::vector<double> y(start.begin(), start.end());
  for (std::size_t i = 1; i < n; ++i) y[i] = std::max(y[i], y[i - 1]);

  // Blocks: [first[b], first[b] + count[b]) share the value z[b].
  std::vector<std::size_t> first, count;
  std::vector<double> z;
  auto build_blocks = [&] {
    first.clear();
    count.clear();
    z.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && y[i] == y[i - 1]) {
        ++count.back();
      } else {
        first.push_back(i);
        count.push_back(1);
        z.push_back(y[i]);
      }
    }
  };
  auto expand = [&](const std::vector<double>& zz, std::vector<double>& out) {
    out.resize(n);
    for (std::size_t b = 0; b < zz.size(); ++b) {
      std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(first[b]), count[b], zz[b]);
    }
  };
  build_blocks();

  std::vector<double> g, g_trial, trial_y;
  double phi = obj.value(y);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    obj.gradient(y, g);
    const double pg = projected_gradient_norm(y, g, h);
    res.residual = pg;
    if (pg <= tol) {
      res.converged = true;
      break;
    }
    const std::size_t nb = z.size();
    std::vector<double> gb(nb, 0.0);
    double rb = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t i = first[b]; i < first[b] + count[b]; ++i) gb[b] += g[i];
      rb += gb[b] * gb[b] / (h * static_cast<double>(count[b]));
    }
    rb = std::sqrt(rb);

    // Split blocks whose multipliers went negative once the free part is
    // nearly optimal.
    if (rb < 0.5 * pg) {
      std::vector<std::size_t> nf, nc;
      std::vector<double> nz;
      bool split_any = false;
      for (std::size_t b = 0; b < nb; ++b) {
        std::size_t cut = 0;
        double best = 0.0, prefix = 0.0;
        const double cb = static_cast<double>(count[b]);
        for (std::size_t k = 0; k + 1 < count[b]; ++k) {
          prefix += g[first[b] + k];
          const double viol = prefix - (static_cast<double>(k + 1) / cb) * gb[b];
          if (viol > best) {
            best = viol;
            cut = k + 1;
          }
        }
        if (cut > 0) {
          split_any = true;
          nf.push_back(first[b]);
          nc.push_back(cut);
          nz.push_back(z[b]);
          nf.push_back(first[b] + cut);
          nc.push_back(count[b] - cut);
          nz.push_back(z[b]);
        } else {
          nf.push_back(first[b]);
          nc.push_back(count[b]);
          nz.push_back(z[b]);
        }
      }
      if (split_any) {
        first = std::move(nf);
        count = std::move(nc);
        z = std::move(nz);
        gb.assign(z.size(), 0.0);
        for (std::size_t b = 0; b < z.size(); ++b) {
          for (std::size_t i = first[b]; i < first[b] + count[b]; ++i) gb[b] += g[i];
        }
      }
    }

    // Newton direction on the block coordinates.
    const std::size_t m = z.size();
    std::vector<double> diag(m), off(m > 0 ? m - 1 : 0), rhs(m);
    for (std::size_t b = 0; b < m; ++b) {
      diag[b] = h * static_cast<double>(count[b]) * (obj.potential_curvature(z[b]) + obj.inv_tau);
      rhs[b] = -gb[b];
    }
    for (std::size_t b = 0; b + 1 < m; ++b) {
      const std::size_t k = first[b] + count[b] - 1;
      const double c = obj.gap_weight(k) * perspective_curvature(obj.problem.law, (z[b + 1] - z[b]) / h) / h;
      diag[b] += c;
      diag[b + 1] += c;
      off[b] = -c;
    }
    const std::vector<double> d = m == 1 ? std::vector<double>{rhs[0] / diag[0]}
                                         : solve_tridiagonal(diag, off, rhs);
    double slope = 0.0;
    for (std::size_t b = 0; b < m; ++b) slope += gb[b] * d[b];
    if (!(slope < 0.0)) {
      res.y = y;
      res.objective = phi;
      return res;  // no descent direction left: numerically stuck
    }

    double alpha_max = kInf;
    std::size_t closing = m;
    for (std::size_t b = 0; b + 1 < m; ++b) {
      const double rate = d[b + 1] - d[b];
      if (rate < 0.0) {
        const double a = (z[b + 1] - z[b]) / -rate;
        if (a < alpha_max) {
          alpha_max = a;
          closing = b;
        }
      }
    }
    double alpha = std::min(1.0, alpha_max);
    bool hit_boundary = alpha_max <= 1.0;
    std::vector<double> zt(m);
    double phi_t = phi;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t b = 0; b < m; ++b) zt[b] = z[b] + alpha * d[b];
      if (hit_boundary) zt[closing + 1] = zt[closing];
      for (std::size_t b = 1; b < m; ++b) zt[b] = std::max(zt[b], zt[b - 1]);
      expand(zt, trial_y);
      phi_t = obj.value(trial_y);
      if (phi_t <= phi + armijo * alpha * slope + 4e-16 * std::abs(phi)) {
        accepted = true;
        break;
      }
      // Values below rounding resolution: approximate Wolfe test on the
      // directional derivative at the trial point instead.
      if (std::abs(phi_t - phi) <= 1e-14 * (1.0 + std::abs(phi))) {
        obj.gradient(trial_y, g_trial);
        double dd = 0.0;
        for (std::size_t b = 0; b < m; ++b) {
          double gsum = 0.0;
          for (std::size_t i = first[b]; i < first[b] + count[b]; ++i) gsum += g_trial[i];
          dd += gsum * d[b];
        }
        if (dd <= (1.0 - 2.0 * armijo) * -slope) {
          accepted = true;
          break;
        }
      }
      alpha *= backtrack;
      hit_boundary = false;
    }
    if (!accepted) {
      res.y = y;
      res.objective = phi;
      return res;
    }
    z = zt;
    phi = phi_t;
    y = trial_y;
    // Merge blocks whose gap closed.
    std::vector<std::size_t> nf, nc;
    std::vector<double> nz;
    for (std::size_t b = 0; b < m; ++b) {
      if (!nz.empty() && z[b] <= nz.back()) {
        const double w1 = static_cast<double>(nc.back()), w2 = static_cast<double>(count[b]);
        nz.back() = (w1 * nz.back() + w2 * z[b]) / (w1 + w2);
        nc.back() += count[b];
      } else {
        nf.push_back(first[b]);
        nc.push_back(count[b]);
        nz.push_back(z[b]);
      }
    }
    first = std::move(nf);
    count = std::move(nc);
    z = std::move(nz);
    expand(z, y);
    phi = obj.value(y);
  }
  res.y = y;
  res.objective = phi;
  return res;
}

}  // namespace jko_detail

struct StepResult {
  QuantileMeasure state;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double objective = 0.0;
};

inline double default_inner_tol(const Problem& p, const QuantileMeasure& q) {
  return 1e-9 * (1.0 + std::abs(entropy_quantile(p, q)));
}

//! Value of the step objective Phi at `y` relative to the anchor `q_prev`.
inline double jko_objective(const Problem& p, const QuantileMeasure& q_prev, const QuantileMeasure& y,
                            double tau) {
  const jko_detail::ProxObjective obj{p, q_prev.values(), q_prev.mass_step(), 1.0 / tau, p.potential.lambda};
  return obj.value(y.values());
}

//! One minimizing-movement step from q_prev.
inline StepResult jko_step(const Problem& p, const QuantileMeasure& q_prev, const JkoConfig& cfg) {
  require(cfg.tau > 0.0, "tau: must be positive");
  require(1.0 + p.potential.lambda * cfg.tau > 0.0, "tau: 1 + lambda tau must be positive");
  require(std::abs(q_prev.mass() - p.mass) <= 1e-9 * p.mass, "jko_step: state mass differs from problem mass");
  const double tol = cfg.inner_tol > 0.0 ? cfg.inner_tol : default_inner_tol(p, q_prev);
  const double inv_tau = 1.0 / cfg.tau;
  const jko_detail::ProxObjective obj{p, q_prev.values(), q_prev.mass_step(), inv_tau,
                                      std::max(p.potential.lambda, -0.5 * inv_tau)};
  auto r = jko_detail::minimize_monotone(obj, q_prev.values(), tol, cfg.inner_max_iter, cfg.armijo,
                                         cfg.backtrack);
  return {QuantileMeasure(q_prev.mass(), std::move(r.y)), r.converged, r.iterations, r.residual, r.objective};
}

//! Minimizer of the discrete entropy over nondecreasing quantile vectors of
//! the same resolution as `start` (the fixed point of jko_step).
inline StepResult discrete_minimizer(const Problem& p, const QuantileMeasure& start, double tol = 1e-11,
                                     int max_iter = 200000) {
  // Small proximal anchor keeps Newton well posed for non-strictly convex V;
  // it is re-centred until the iterate stops moving.
  std::vector<double> y(start.values().begin(), start.values().end());
  StepResult out{start, false, 0, kInf, 0.0};
  for (int outer = 0; outer < 200; ++outer) {
    const jko_detail::ProxObjective obj{p, y, start.mass_step(), 1e-6, 1e-8};
    auto r = jko_detail::minimize_monotone(obj, y, 0.1 * tol, max_iter, 1e-4, 0.5);
    y = std::move(r.y);
    out.iterations += r.iterations;
    // Residual of the entropy alone.
    const jko_detail::ProxObjective bare{p, y, start.mass_step(), 0.0, 1e-8};
    std::vector<double> g;
    bare.gradient(y, g);
    out.residual = jko_detail::projected_gradient_norm(y, g, start.mass_step());
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
  }
  out.state = QuantileMeasure(start.mass(), y);
  out.objective = entropy_quantile(p, out.state);
  return out;
}

//! Padded interval around the quantile range, used to rebuild densities.
inline Interval support_window(const QuantileMeasure& q, std::size_t cells, double pad_cells = 3.0) {
  const double span = q.back() - q.front();
  if (!(span > 0.0)) return {q.front() - 1.0, q.back() + 1.0};
  const double dx = span / static_cast<double>(cells);
  return {q.front() - pad_cells * dx, q.back() + pad_cells * dx};
}

struct EvolveOptions {
  int record_every = 1;           // store every k-th state (0: only the final one)
  std::size_t diag_cells = 400;   // grid used for I_grid and atom detection
  double atom_threshold = 1e-3;
  bool fisher_diagnostics = true;
  std::function<void(int step, double t, const QuantileMeasure&, const DiagnosticsRow&)> observer;
};

struct Trajectory {
  double tau = 0.0;
  std::vector<double> times;              // recorded times
  std::vector<QuantileMeasure> states;    // recorded states
  std::vector<DiagnosticsRow> diagnostics;  // one row per step, including t = 0
  std::vector<bool> step_converged;
  bool all_converged = true;
};

inline DiagnosticsRow diagnostics_row(const Problem& p, double t, const QuantileMeasure& q,
                                      const QuantileMeasure* prev, double tau, const EvolveOptions& opt) {
  DiagnosticsRow row;
  row.t = t;
  row.F = entropy_quantile(p, q);
  row.mom2 = second_moment(q);
  if (prev != nullptr) {
    row.W2_step = wasserstein(*prev, q);
    row.I_rate = sqr(row.W2_step / tau);
  }
  const auto g = grid_from_quantile(q, support_window(q, opt.diag_cells), opt.diag_cells, opt.atom_threshold);
  row.atom_mass_total = g.singular_mass();
  if (opt.fisher_diagnostics) row.I_grid = fisher(p, g).total;
  return row;
}

//! K = T / tau applications of jko_step with diagnostics after each one.
inline Trajectory evolve(const Problem& p, const QuantileMeasure& q0, const JkoConfig& cfg, double T,
                         const EvolveOptions& opt = {}) {
  require(T >= 0.0, "T: must be nonnegative");
  const double kf = std::round(T / cfg.tau);
  require(std::abs(kf * cfg.tau - T) <= 1e-12 * std::max(1.0, T), "T: must be an integer multiple of tau");
  const int steps = static_cast<int>(kf);
  Trajectory traj;
  traj.tau = cfg.tau;
  traj.times.push_back(0.0);
  traj.states.push_back(q0);
  traj.diagnostics.push_back(diagnostics_row(p, 0.0, q0, nullptr, cfg.tau, opt));
  if (opt.observer) opt.observer(0, 0.0, q0, traj.diagnostics.back());
  QuantileMeasure q = q0;
  for (int n = 1; n <= steps; ++n) {
    StepResult r = jko_step(p, q, cfg);
    const double t = n * cfg.tau;
    traj.step_converged.push_back(r.converged);
    traj.all_converged = traj.all_converged && r.converged;
    traj.diagnostics.push_back(diagnostics_row(p, t, r.state, &q, cfg.tau, opt));
    q = std::move(r.state);
    if (opt.observer) opt.observer(n, t, q, traj.diagnostics.back());
    const bool record = (opt.record_every > 0 && n % opt.record_every == 0) || n == steps;
    if (record) {
      traj.times.push_back(t);
      traj.states.push_back(q);
    }
  }
  return traj;
}

//! State recorded at time t (nearest recorded time within tau/2).
inline const QuantileMeasure& state_at(const Trajectory& traj, double t) {
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    if (std::abs(traj.times[k] - t) <= 0.5 * traj.tau) return traj.states[k];
  }
  throw InputError("state_at: time not recorded");
}

struct DissipationAudit {
  //! F(t0) - F(t1) - sum tau I_rate over (t0, t1].
  double residual = 0.0;
  //! max over t in (t0, t1] of |R(t0, t)|.
  double max_abs_residual = 0.0;
  //! max of I_rate(t) / (I_rate(s) e^{-2 lambda (t - s)}) over t - s >= min_gap.
  double worst_decay_ratio = 0.0;
};

//! Discrete energy-dissipation balance and the exponential slope decay
//! over the window [t0, t1].
inline DissipationAudit dissipation_audit(const Trajectory& traj, double lambda, double t0, double t1,
                                          double min_gap = 0.2) {
  const auto& d = traj.diagnostics;
  require(d.size() >= 3, "dissipation_audit: need at least 3 steps");
  const double tau = traj.tau;
  auto index_of = [&](double t) {
    return static_cast<std::size_t>(std::clamp(std::round(t / tau), 0.0, double(d.size() - 1)));
  };
  const std::size_t i0 = index_of(t0), i1 = index_of(t1);
  DissipationAudit a;
  double acc = 0.0;
  for (std::size_t n = i0 + 1; n <= i1; ++n) {
    acc += tau * d[n].I_rate;
    const double r = d[i0].F - d[n].F - acc;
    a.max_abs_residual = std::max(a.max_abs_residual, std::abs(r));
    a.residual = r;
  }
  const std::size_t gap = static_cast<std::size_t>(std::ceil(min_gap / tau - 1e-9));
  for (std::size_t s = std::max<std::size_t>(i0, 1); s <= i1; ++s) {
    if (!(d[s].I_rate > 0.0)) continue;
    for (std::size_t n = s + gap; n <= i1; ++n) {
      const double bound = d[s].I_rate * std::exp(-2.0 * lambda * (d[n].t - d[s].t));
      a.worst_decay_ratio = std::max(a.worst_decay_ratio, d[n].I_rate / bound);
    }
  }
  return a;
}

}  // namespace sublinear
