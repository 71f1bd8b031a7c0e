// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sublinear;

namespace {

QuantileMeasure gaussian_q(double mu, double sg, double m, std::size_t n, Interval dom = {-8, 8}) {
  return quantile_from_grid(GridMeasure(dom, testutil::gaussian_cells(dom, 1600, mu, sg, m)), n);
}

EvolveOptions quiet(int record_every = 1) {
  EvolveOptions o;
  o.record_every = record_every;
  o.fisher_diagnostics = false;
  return o;
}

}  // namespace

TEST(JkoStep, RejectsBadConfig) {
  const Problem p(arctan_law(), double_well_potential(), 1.0);
  JkoConfig cfg;
  cfg.tau = 0.1;  // 1 + lambda tau < 0 for lambda = -4 pi
  EXPECT_THROW(jko_step(p, gaussian_q(0, 0.5, 1.0, 50), cfg), InputError);
  cfg.tau = -1.0;
  EXPECT_THROW(jko_step(p, gaussian_q(0, 0.5, 1.0, 50), cfg), InputError);
  cfg.tau = 0.01;
  EXPECT_THROW(jko_step(p, gaussian_q(0, 0.5, 2.0, 50), cfg), InputError);
}

TEST(JkoStep, DiscreteMinimizerIsFixedPoint) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  const auto qmin = discrete_minimizer(p, gaussian_q(0.3, 1.0, 1.0, 200));
  ASSERT_TRUE(qmin.converged);
  JkoConfig cfg;
  cfg.tau = 0.01;
  const auto step = jko_step(p, qmin.state, cfg);
  ASSERT_TRUE(step.converged);
  const double tol = 1e-9 * (1.0 + std::abs(entropy_quantile(p, qmin.state)));
  EXPECT_LE(wasserstein(step.state, qmin.state), 10.0 * tol);
}

TEST(JkoStep, SteadyMinimizerBarelyMoves) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  const std::size_t n = 400;
  const auto q = quantile_from_grid(minimizer(p, default_domain(p, level(p)), 1600), n);
  JkoConfig cfg;
  cfg.tau = 0.01;
  const auto step = jko_step(p, q, cfg);
  // sampling error of the continuous minimizer only
  EXPECT_LE(wasserstein(step.state, q), p.mass / n);
}

TEST(JkoStep, SubcriticalDiracSpreads) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  JkoConfig cfg;
  cfg.tau = 0.01;
  const auto step = jko_step(p, QuantileMeasure::dirac(1.0, 0.5, 100), cfg);
  ASSERT_TRUE(step.converged);
  EXPECT_GT(step.state.back() - step.state.front(), 1e-3);
  // centre of mass drifts toward 0 like x e^{-t}
  double c = 0.0;
  for (double y : step.state.values()) c += y / 100.0;
  EXPECT_NEAR(c, 0.5 / 1.01, 1e-9);
}

TEST(JkoStep, EnergyInequalityAndMonotonicity) {
  XorShift64Star rng(77);
  for (const auto& law : {arctan_law(), rational_law(), bose_einstein_law()}) {
    for (const auto& pot : {quadratic_potential(), power_potential(1.5), double_well_potential()}) {
      const Problem p(law, pot, 1.0);
      const auto q = quantile_from_grid(testutil::random_mixture(rng, {-6, 6}, 600, 1.0, 2.0), 150);
      JkoConfig cfg;
      cfg.tau = 0.02;
      const auto step = jko_step(p, q, cfg);
      EXPECT_TRUE(step.converged) << law.name << "/" << pot.name;
      const double f0 = entropy_quantile(p, q), f1 = entropy_quantile(p, step.state);
      const double tol = 1e-9 * (1.0 + std::abs(f0));
      EXPECT_LE(f1 + sqr(wasserstein(q, step.state)) / (2 * cfg.tau), f0 + tol) << law.name << "/" << pot.name;
      for (std::size_t i = 1; i < step.state.size(); ++i) EXPECT_LE(step.state[i - 1], step.state[i]);
    }
  }
}

TEST(Evolve, RequiresMultipleOfTau) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  JkoConfig cfg;
  cfg.tau = 0.03;
  try {
    evolve(p, gaussian_q(0, 0.5, 1.0, 50), cfg, 0.1);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("T:", 0), 0u) << e.what();
  }
}

TEST(Evolve, MassAndResolutionConstant) {
  const Problem p(rational_law(), quadratic_potential(), 1.7);
  JkoConfig cfg;
  cfg.tau = 0.05;
  const auto tr = evolve(p, gaussian_q(1, 0.5, 1.7, 80), cfg, 0.5, quiet());
  ASSERT_EQ(tr.states.size(), 11u);
  for (const auto& s : tr.states) {
    EXPECT_EQ(s.size(), 80u);
    EXPECT_EQ(s.mass(), tr.states.front().mass());
    EXPECT_NEAR(s.mass(), 1.7, 1e-12);
  }
  EXPECT_TRUE(tr.all_converged);
  ASSERT_EQ(tr.diagnostics.size(), 11u);
  for (std::size_t k = 1; k < tr.diagnostics.size(); ++k) {
    const auto& d = tr.diagnostics[k];
    EXPECT_LE(d.F + 0.5 * cfg.tau * d.I_rate, tr.diagnostics[k - 1].F + 1e-9 * (1 + std::abs(d.F)));
    EXPECT_NEAR(d.I_rate, sqr(d.W2_step / cfg.tau), 1e-12 * (1 + d.I_rate));
    EXPECT_NEAR(d.mom2, second_moment(tr.states[k]), 1e-12);
  }
}

TEST(Evolve, StationaryStartStaysPut) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  const auto qmin = discrete_minimizer(p, gaussian_q(0, 1, 1.0, 100)).state;
  JkoConfig cfg;
  cfg.tau = 0.05;
  const auto tr = evolve(p, qmin, cfg, 1.0, quiet());
  for (const auto& s : tr.states) EXPECT_LE(wasserstein(s, qmin), 1e-7);
  const auto audit = dissipation_audit(tr, 1.0, 0.2, 1.0);
  EXPECT_LE(audit.max_abs_residual, 1e-9);
}

TEST(Evolve, ObserverSeesEveryStep) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  JkoConfig cfg;
  cfg.tau = 0.1;
  int calls = 0;
  EvolveOptions opt = quiet(0);
  opt.observer = [&](int n, double t, const QuantileMeasure&, const DiagnosticsRow& row) {
    EXPECT_EQ(n, calls);
    EXPECT_NEAR(t, n * 0.1, 1e-12);
    EXPECT_EQ(row.t, t);
    ++calls;
  };
  const auto tr = evolve(p, gaussian_q(0, 0.5, 1.0, 40), cfg, 0.5, opt);
  EXPECT_EQ(calls, 6);
  EXPECT_EQ(tr.states.size(), 2u);  // start and end
  EXPECT_NO_THROW(state_at(tr, 0.5));
  EXPECT_THROW(state_at(tr, 0.3), InputError);
}

TEST(Evolve, WassersteinContraction) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  const auto a0 = gaussian_q(-1.0, 0.4, 1.0, 100), b0 = gaussian_q(1.5, 0.8, 1.0, 100);
  JkoConfig cfg;
  cfg.tau = 0.01;
  const auto a = evolve(p, a0, cfg, 2.0, quiet(50)), b = evolve(p, b0, cfg, 2.0, quiet(50));
  const double w0 = wasserstein(a0, b0);
  for (double t : {0.5, 1.0, 2.0}) {
    EXPECT_LE(wasserstein(state_at(a, t), state_at(b, t)), std::exp(-t) * w0 * 1.05) << t;
  }
}

TEST(Evolve, RegularizationEstimate) {
  // F + (E_l(t)/2) I <= m V(0) + Mom2(rho_0) / (2 E_l(t)), E_l(t) = (e^{lt} - 1)/l
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  const auto q0 = gaussian_q(1.5, 0.3, 1.0, 200);
  JkoConfig cfg;
  cfg.tau = 0.01;
  EvolveOptions opt = quiet(10);
  opt.fisher_diagnostics = true;
  opt.diag_cells = 400;
  const auto tr = evolve(p, q0, cfg, 1.0, opt);
  const double mom0 = second_moment(q0);
  for (std::size_t k = 10; k < tr.diagnostics.size(); k += 10) {
    const auto& d = tr.diagnostics[k];
    const double el = std::expm1(d.t);
    EXPECT_LE(d.F + 0.5 * el * d.I_grid, p.mass * 0.0 + mom0 / (2.0 * el) + 1e-2) << d.t;
  }
}

TEST(DissipationAudit, ResidualIsFirstOrder) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  const auto q0 = gaussian_q(0.7, 0.5, 1.0, 200);
  std::vector<double> r;
  for (double tau : {0.02, 0.01}) {
    JkoConfig cfg;
    cfg.tau = tau;
    r.push_back(std::abs(dissipation_audit(evolve(p, q0, cfg, 1.0, quiet(0)), 1.0, 0.2, 1.0).residual));
  }
  EXPECT_GE(r[0] / r[1], 1.5);
  EXPECT_LE(r[0] / r[1], 3.0);
}

TEST(DissipationAudit, SlopeDecaysExponentially) {
  const Problem p(arctan_law(), quadratic_potential(), 1.0);
  JkoConfig cfg;
  cfg.tau = 0.01;
  const auto tr = evolve(p, gaussian_q(1.0, 0.4, 1.0, 200), cfg, 1.5, quiet(0));
  EXPECT_LE(dissipation_audit(tr, 1.0, 0.1, 1.5).worst_decay_ratio, 1.1);
  EXPECT_THROW(dissipation_audit(evolve(p, gaussian_q(0, 1, 1, 20), cfg, 0.01, quiet(0)), 1.0, 0, 1), InputError);
}

TEST(Evolve, ComparisonPrinciple) {
  // rho_0 <= eta_0 with smaller mass: densities stay ordered after reconstruction
  const Problem pr(arctan_law(), quadratic_potential(), 0.6), pe(arctan_law(), quadratic_potential(), 1.0);
  const Interval dom{-6, 6};
  const std::size_t cells = 120;
  auto ur = testutil::gaussian_cells(dom, 2400, 0.5, 0.5, 0.6);
  auto ue = ur;
  const auto extra = testutil::gaussian_cells(dom, 2400, -0.5, 0.7, 0.4);
  for (std::size_t j = 0; j < ue.size(); ++j) ue[j] += extra[j];
  JkoConfig cfg;
  cfg.tau = 0.01;
  const auto tr = evolve(pr, quantile_from_grid(GridMeasure(dom, ur), 600), cfg, 0.5, quiet(10));
  const auto te = evolve(pe, quantile_from_grid(GridMeasure(dom, ue), 1000), cfg, 0.5, quiet(10));
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const auto gr = grid_from_quantile(tr.states[k], dom, cells), ge = grid_from_quantile(te.states[k], dom, cells);
    double worst = 0.0;
    for (std::size_t j = 0; j < cells; ++j) worst = std::max(worst, gr.density()[j] - ge.density()[j]);
    EXPECT_LE(worst, 0.02) << "t=" << tr.times[k];
  }
}

TEST(Evolve, SupercriticalAtomPersists) {
  const double mc = critical_mass(Problem(rational_law(), quadratic_potential(), 1.0)).value;
  const Interval dom{-3, 3};
  const Problem pmin(rational_law(), quadratic_potential(), mc + 0.4);
  const GridMeasure gmin = minimizer(pmin, dom, 1200);
  ASSERT_EQ(gmin.atoms().size(), 1u);
  std::vector<double> u(gmin.density().begin(), gmin.density().end());
  const auto bump = testutil::gaussian_cells(dom, 1200, 0.8, 0.3, 0.3);
  for (std::size_t j = 0; j < u.size(); ++j) u[j] += bump[j];
  const GridMeasure g0(dom, u, gmin.atoms());
  const Problem p(rational_law(), quadratic_potential(), g0.mass());
  const std::size_t n = 400;
  JkoConfig cfg;
  cfg.tau = 0.01;
  const auto tr = evolve(p, quantile_from_grid(g0, n), cfg, 0.5, quiet(10));
  EXPECT_TRUE(tr.all_converged);
  // Exact runs shed edge quantiles at finite N; count quantiles within 2 cells of Q.
  const double window = 2.0 * dom.length() / 600.0;
  for (const auto& s : tr.states) {
    double near0 = 0.0;
    for (double y : s.values()) {
      if (std::abs(y) < window) near0 += s.mass_step();
    }
    EXPECT_GE(near0, 0.4 - p.mass / n);
  }
}
