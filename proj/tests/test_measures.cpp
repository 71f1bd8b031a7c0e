// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"

using namespace sublinear;

namespace {

void expect_values(const QuantileMeasure& q, std::vector<double> want, double tol = 1e-14) {
  ASSERT_EQ(q.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(q[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(QuantileFromGrid, SingleAtomIsConstant) {
  const GridMeasure g({0.0, 4.0}, std::vector<double>(8, 0.0), {{2.0, 1.0}});
  expect_values(quantile_from_grid(g, 4), {2, 2, 2, 2});
}

TEST(QuantileFromGrid, UniformDensityGivesMidpoints) {
  const GridMeasure g({0.0, 1.0}, std::vector<double>(10, 1.0));
  expect_values(quantile_from_grid(g, 4), {0.125, 0.375, 0.625, 0.875});
}

TEST(QuantileFromGrid, TwoAtoms) {
  const GridMeasure g({-1.0, 2.0}, std::vector<double>(3, 0.0), {{0.0, 0.5}, {1.0, 0.5}});
  expect_values(quantile_from_grid(g, 4), {0, 0, 1, 1});
}

TEST(QuantileFromGrid, RejectsZeroMassAndTinyResolution) {
  const GridMeasure empty({0.0, 1.0}, std::vector<double>(4, 0.0));
  EXPECT_THROW(quantile_from_grid(empty, 4), InputError);
  const GridMeasure g({0.0, 1.0}, std::vector<double>(4, 1.0));
  EXPECT_THROW(quantile_from_grid(g, 1), InputError);
}

TEST(QuantileMeasure, RejectsDecreasingValues) {
  EXPECT_THROW(QuantileMeasure(1.0, {0.0, 1.0, 0.5}), InputError);
  EXPECT_THROW(QuantileMeasure(0.0, {0.0, 1.0}), InputError);
}

TEST(GridMeasure, DeclaredMassMustMatch) {
  EXPECT_NO_THROW(GridMeasure({0.0, 1.0}, std::vector<double>(4, 1.0), {{0.5, 0.25}}, 1.25));
  EXPECT_THROW(GridMeasure({0.0, 1.0}, std::vector<double>(4, 1.0), {}, 1.1), InputError);
}

TEST(GridMeasure, AtomsMustBeOrderedAndPositive) {
  EXPECT_THROW(GridMeasure({0.0, 1.0}, std::vector<double>(2, 0.0), {{0.6, 0.5}, {0.4, 0.5}}), InputError);
  EXPECT_THROW(GridMeasure({0.0, 1.0}, std::vector<double>(2, 0.0), {{0.6, -0.5}}), InputError);
  EXPECT_THROW(GridMeasure({0.0, 1.0}, std::vector<double>{1.0, -1.0}), InputError);
}

TEST(GridFromQuantile, ConstantVectorIsOneAtom) {
  const GridMeasure g = grid_from_quantile(QuantileMeasure(1.0, {2, 2, 2, 2}), {0.0, 4.0}, 8);
  ASSERT_EQ(g.atoms().size(), 1u);
  EXPECT_DOUBLE_EQ(g.atoms()[0].x, 2.0);
  EXPECT_NEAR(g.atoms()[0].mass, 1.0, 1e-14);
  EXPECT_NEAR(g.regular_mass(), 0.0, 1e-14);
}

TEST(GridFromQuantile, UniformQuantilesGiveFlatDensity) {
  const GridMeasure src({0.0, 1.0}, std::vector<double>(100, 1.0));
  const GridMeasure g = grid_from_quantile(quantile_from_grid(src, 1000), {-0.5, 1.5}, 40);
  EXPECT_TRUE(g.atoms().empty());
  for (std::size_t j = 0; j < g.cells(); ++j) {
    const double x = g.center(j);
    if (x > 0.1 && x < 0.9) {
      EXPECT_NEAR(g.density()[j], 1.0, 1e-9) << x;
    }
    if (x < -0.05 || x > 1.05) {
      EXPECT_EQ(g.density()[j], 0.0) << x;
    }
  }
}

TEST(GridFromQuantile, TwoAtomsRecovered) {
  const GridMeasure g = grid_from_quantile(QuantileMeasure(1.0, {0, 0, 1, 1}), {-1.0, 2.0}, 30);
  ASSERT_EQ(g.atoms().size(), 2u);
  EXPECT_NEAR(g.atoms()[0].x, 0.0, 1e-15);
  EXPECT_NEAR(g.atoms()[0].mass, 0.5, 1e-15);
  EXPECT_NEAR(g.atoms()[1].x, 1.0, 1e-15);
  EXPECT_NEAR(g.atoms()[1].mass, 0.5, 1e-15);
}

TEST(GridFromQuantile, DomainTooSmallNamesTheValue) {
  try {
    grid_from_quantile(QuantileMeasure(1.0, {0.0, 3.0}), {0.0, 2.0}, 4);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
  }
}

TEST(GridFromQuantile, RoundTripErrorScalesWithResolution) {
  // density 2x on [0,1] plus an atom of mass 0.3 at 0.5
  std::vector<double> errs;
  for (std::size_t k : {1u, 2u, 4u}) {
    const std::size_t cells = 100 * k, n = 200 * k;
    std::vector<double> u(cells, 0.0);
    const Interval dom{-0.5, 1.5};
    const double dx = dom.length() / cells;
    for (std::size_t j = 0; j < cells; ++j) {
      const double x = dom.a + (j + 0.5) * dx;
      if (x > 0.0 && x < 1.0) u[j] = 2.0 * x;
    }
    const GridMeasure g(dom, u, {{0.5, 0.3}});
    const GridMeasure back = grid_from_quantile(quantile_from_grid(g, n), dom, cells);
    ASSERT_EQ(back.atoms().size(), 1u);
    EXPECT_NEAR(back.atoms()[0].mass, 0.3, g.mass() / n);
    EXPECT_NEAR(back.atoms()[0].x, 0.5, dx);
    errs.push_back(testutil::l1(g, back));
    EXPECT_LE(errs.back(), 4.0 * (dx + g.mass() / n));
  }
  EXPECT_LT(errs[2], errs[0]);
}

TEST(Wasserstein, BasicIdentities) {
  const QuantileMeasure q(1.0, {0.0, 0.3, 0.7, 2.0});
  EXPECT_EQ(wasserstein(q, q), 0.0);
  const double m = 2.5;
  EXPECT_NEAR(wasserstein(QuantileMeasure::dirac(m, -1.0, 8), QuantileMeasure::dirac(m, 2.0, 8)),
              std::sqrt(m) * 3.0, 1e-14);
}

TEST(Wasserstein, RejectsMismatch) {
  EXPECT_THROW(wasserstein(QuantileMeasure::dirac(1.0, 0.0, 4), QuantileMeasure::dirac(1.0, 0.0, 5)), InputError);
  EXPECT_THROW(wasserstein(QuantileMeasure::dirac(1.0, 0.0, 4), QuantileMeasure::dirac(2.0, 0.0, 4)), InputError);
}

TEST(Wasserstein, SymmetricAndTriangle) {
  XorShift64Star rng(5);
  auto random_q = [&] {
    std::vector<double> y(50);
    for (double& v : y) v = rng.uniform(-3.0, 3.0);
    std::sort(y.begin(), y.end());
    return QuantileMeasure(1.5, y);
  };
  for (int t = 0; t < 50; ++t) {
    const auto a = random_q(), b = random_q(), c = random_q();
    EXPECT_DOUBLE_EQ(wasserstein(a, b), wasserstein(b, a));
    EXPECT_LE(wasserstein(a, c), wasserstein(a, b) + wasserstein(b, c) + 1e-14);
  }
}

TEST(WassersteinBruteforce, HandExamples) {
  EXPECT_EQ(wasserstein_bruteforce({{0.0, 0.5}, {1.0, 0.5}}, {{0.0, 0.5}, {1.0, 0.5}}), 0.0);
  EXPECT_NEAR(wasserstein_bruteforce({{0.0, 1.0}}, {{3.0, 1.0}}), 3.0, 1e-15);
  EXPECT_NEAR(wasserstein_bruteforce({{0.0, 0.5}, {1.0, 0.5}}, {{0.5, 1.0}}), 0.5, 1e-15);
  EXPECT_THROW(wasserstein_bruteforce({{0.0, 1.0}}, {{0.0, 2.0}}), InputError);
}

// Optimal coupling cost by enumerating vertices of the transport polytope
// for 2x2 problems: one free parameter, cost is linear in it.
TEST(WassersteinBruteforce, MatchesLinearProgramOnTwoByTwo) {
  XorShift64Star rng(17);
  for (int t = 0; t < 200; ++t) {
    const double a1 = rng.uniform(0.1, 0.9), b1 = rng.uniform(0.1, 0.9);
    const AtomList a{{rng.uniform(-2, 0), a1}, {rng.uniform(0, 2), 1 - a1}};
    const AtomList b{{rng.uniform(-2, 0), b1}, {rng.uniform(0, 2), 1 - b1}};
    // pi11 ranges over [max(0, a1 + b1 - 1), min(a1, b1)]
    auto cost = [&](double p11) {
      const double p12 = a1 - p11, p21 = b1 - p11, p22 = 1 - a1 - b1 + p11;
      return p11 * sqr(a[0].x - b[0].x) + p12 * sqr(a[0].x - b[1].x) + p21 * sqr(a[1].x - b[0].x) +
             p22 * sqr(a[1].x - b[1].x);
    };
    const double best = std::min(cost(std::max(0.0, a1 + b1 - 1)), cost(std::min(a1, b1)));
    EXPECT_NEAR(wasserstein_bruteforce(a, b), std::sqrt(best), 1e-12);
  }
}

TEST(Wasserstein, AgreesWithBruteforceOnAtomicPairs) {
  XorShift64Star rng(23);
  const std::size_t n = 60;
  for (int t = 0; t < 200; ++t) {
    auto atoms = [&] {
      const std::size_t k = 1 + rng.below(5);
      std::vector<std::size_t> cuts{0, n};
      while (cuts.size() < k + 1) {
        const std::size_t c = 1 + rng.below(n - 1);
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
      }
      std::sort(cuts.begin(), cuts.end());
      std::vector<double> xs;
      for (std::size_t i = 0; i < k; ++i) xs.push_back(rng.uniform(-4, 4) + 10.0 * i);
      AtomList a;
      for (std::size_t i = 0; i < k; ++i) a.push_back({xs[i], 2.0 * double(cuts[i + 1] - cuts[i]) / n});
      return a;
    };
    const AtomList a = atoms(), b = atoms();
    const Interval dom{-10.0, 60.0};
    EXPECT_NEAR(wasserstein(quantile_from_atoms(a, dom, n), quantile_from_atoms(b, dom, n)),
                wasserstein_bruteforce(a, b), 1e-10);
  }
}

TEST(DisplacementInterpolate, Endpoints) {
  const QuantileMeasure q0(1.0, {0.0, 1.0, 2.0}), q1(1.0, {-1.0, 0.0, 5.0});
  expect_values(displacement_interpolate(q0, q1, 0.0), {0, 1, 2});
  expect_values(displacement_interpolate(q0, q1, 1.0), {-1, 0, 5});
  expect_values(displacement_interpolate(QuantileMeasure::dirac(1, 0, 3), QuantileMeasure::dirac(1, 1, 3), 0.5),
                {0.5, 0.5, 0.5});
  EXPECT_THROW(displacement_interpolate(q0, q1, 1.5), InputError);
  EXPECT_THROW(displacement_interpolate(q0, q1, -0.1), InputError);
}

TEST(DisplacementInterpolate, ConstantSpeedGeodesic) {
  XorShift64Star rng(3);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> a(40), b(40);
    for (double& v : a) v = rng.uniform(-2, 2);
    for (double& v : b) v = rng.uniform(-1, 4);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const QuantileMeasure q0(0.7, a), q1(0.7, b);
    const double theta = rng.uniform();
    const auto qt = displacement_interpolate(q0, q1, theta);
    EXPECT_NEAR(wasserstein(qt, q0), theta * wasserstein(q0, q1), 1e-12);
    for (std::size_t i = 1; i < qt.size(); ++i) EXPECT_LE(qt[i - 1], qt[i]);
  }
}

TEST(SecondMoment, Examples) {
  EXPECT_NEAR(second_moment(QuantileMeasure::dirac(3.0, 2.0, 7)), 12.0, 1e-13);
  const QuantileMeasure u = quantile_from_grid(GridMeasure({0.0, 1.0}, std::vector<double>(10, 1.0)), 1000);
  // midpoint rule error for x^2 is exactly h^2/12 over [0,1]
  EXPECT_NEAR(second_moment(u), 1.0 / 3.0, 1.0 / (12.0 * 1000 * 1000) + 1e-14);
  const auto mid = displacement_interpolate(QuantileMeasure::dirac(1.0, 0.0, 4), QuantileMeasure::dirac(1.0, 2.0, 4), 0.5);
  EXPECT_NEAR(second_moment(mid), 1.0, 1e-15);
}

TEST(PushForwardAtoms, Examples) {
  const AtomList a{{0.0, 0.5}, {1.0, 0.5}};
  const auto id = push_forward_atoms(a, [](double x) { return x; });
  ASSERT_EQ(id.size(), 2u);
  EXPECT_EQ(id[1].x, 1.0);
  const auto scaled = push_forward_atoms({{1.0, 2.0}}, [](double x) { return x * std::exp(-1.0); });
  EXPECT_NEAR(scaled[0].x, std::exp(-1.0), 1e-16);
  EXPECT_EQ(scaled[0].mass, 2.0);
  const auto flipped = push_forward_atoms(a, [](double x) { return -x; });
  ASSERT_EQ(flipped.size(), 2u);
  EXPECT_EQ(flipped[0].x, -1.0);
  EXPECT_EQ(flipped[1].x, 0.0);
  EXPECT_EQ(flipped[0].mass, 0.5);
}
