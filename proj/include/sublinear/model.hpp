// SPDX-License-Identifier: Apache-2.0
// Problem data: the bounded diffusion nonlinearity beta with its energy
// density E, the confining potential V, and the built-in catalogs.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "sublinear/core.hpp"
#include "sublinear/quadrature.hpp"
#include "sublinear/rng.hpp"

namespace sublinear {

using RealFn = std::function<double(double)>;

//! Increasing beta with beta(0) = 0 and finite (or, for bose_einstein,
//! infinite) limit beta_inf. Optional closed forms replace quadrature.
struct DiffusionLaw {
  std::string name;
  RealFn beta;
  RealFn beta_prime;
  double beta_inf = kInf;
  RealFn energy;        // E(r)
  RealFn energy_slope;  // E'(r)
  RealFn h_inverse;     // H(v)
  ExtendedValue depth = ExtendedValue::undetermined(0.0);
};

namespace detail {

inline double generic_energy_slope(const DiffusionLaw& law, double r) {
  auto f = [&](double s) { return law.beta_prime(s) / s; };
  const quad::Result res = quad::integrate(f, r, kInf, 1e-12);
  if (!std::isfinite(res.value)) {
    throw ConvergenceError("energy_slope: quadrature failed", res.error);
  }
  return -res.value;
}

//! Inner integral \int_c^1 beta'(s)/s ds for shrinking c; infinite when it
//! keeps growing without saturating.
inline ExtendedValue generic_depth(const DiffusionLaw& law) {
  auto f = [&](double s) { return law.beta_prime(s) / s; };
  const double outer = quad::integrate(f, 1.0, kInf, 1e-12).value;
  quad::SingularOptions opt;
  opt.max_halvings = 60;
  ExtendedValue inner = quad::integrate_toward(f, 0.0, 1.0, +1, opt);
  if (inner.is_finite() && inner.value + outer > 1e6) return ExtendedValue::infinite();
  if (!inner.is_finite()) return inner.is_infinite() ? inner : ExtendedValue::undetermined(inner.value + outer);
  return ExtendedValue::finite(inner.value + outer);
}

}  // namespace detail

//! E(r) = -beta(r) - r \int_r^inf beta'(s)/s ds; E(0) = 0.
inline double energy_density(const DiffusionLaw& law, double r) {
  require(r >= 0.0, "energy_density: r must be nonnegative");
  if (r == 0.0) return 0.0;
  if (std::isinf(r)) return -law.beta_inf;
  if (law.energy) return law.energy(r);
  return -law.beta(r) + r * detail::generic_energy_slope(law, r);
}

//! E'(r) = -\int_r^inf beta'(s)/s ds < 0.
inline double energy_slope(const DiffusionLaw& law, double r) {
  require(r > 0.0, "energy_slope: r must be positive");
  if (std::isinf(r)) return 0.0;
  if (law.energy_slope) return law.energy_slope(r);
  return detail::generic_energy_slope(law, r);
}

//! Perspective G(s) = s E(1/s), G(0) = 0. With E = -beta + r E' this is
//! E'(1/s) - s beta(1/s).
inline double perspective(const DiffusionLaw& law, double s) {
  require(s >= 0.0, "perspective: s must be nonnegative");
  if (s == 0.0) return 0.0;
  const double r = 1.0 / s;
  if (std::isinf(r)) return 0.0;
  if (law.energy) return s * law.energy(r);
  return energy_slope(law, r) - s * law.beta(r);
}

//! Surrogate slope used for G'(0+) when beta is unbounded.
inline constexpr double kPerspectiveClamp = 1e-12;

//! G'(s) = E(1/s) - E'(1/s)/s, which reduces to -beta(1/s). At s = 0 the
//! one-sided limit is -beta_inf; for unbounded beta the value at
//! kPerspectiveClamp is used instead.
inline double perspective_slope(const DiffusionLaw& law, double s) {
  if (s <= 0.0) {
    return std::isfinite(law.beta_inf) ? -law.beta_inf : -law.beta(1.0 / kPerspectiveClamp);
  }
  const double r = 1.0 / s;
  if (std::isinf(r)) return -law.beta_inf;
  return -law.beta(r);
}

//! G''(s) = E''(1/s) / s^3 = beta'(1/s) / s^2.
inline double perspective_curvature(const DiffusionLaw& law, double s) {
  const double se = std::max(s, kPerspectiveClamp);
  const double r = 1.0 / se;
  return law.beta_prime(r) * r * r;
}

//! d = -lim_{r->0+} E'(r) = \int_0^inf beta'(s)/s ds.
inline ExtendedValue depth(const DiffusionLaw& law) { return law.depth; }

//! H(v) = (E')^{-1}(-v) on (0, d), 0 on [d, inf).
inline double h_pseudo_inverse(const DiffusionLaw& law, double v) {
  require(v > 0.0, "h_pseudo_inverse: v must be positive");
  if (law.depth.is_finite() && v >= law.depth.value) return 0.0;
  if (std::isinf(v)) return 0.0;
  if (law.h_inverse) return law.h_inverse(v);
  // E' is increasing from -d to 0; bracket in log r.
  auto f = [&](double t) { return energy_slope(law, std::exp(t)) + v; };
  double lo = -1.0, hi = 1.0;
  while (f(lo) > 0.0) {
    lo *= 2.0;
    if (lo < -700.0) return 0.0;
  }
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 700.0) throw ConvergenceError("h_pseudo_inverse: cannot bracket root", hi);
  }
  return std::exp(quad::find_root(f, lo, hi, 52));
}

// --- law catalog -----------------------------------------------------------

//! beta(r) = arctan r.
inline DiffusionLaw arctan_law() {
  DiffusionLaw law;
  law.name = "arctan";
  law.beta = [](double r) { return std::atan(r); };
  law.beta_prime = [](double r) { return 1.0 / (1.0 + r * r); };
  law.beta_inf = kPi / 2;
  law.energy_slope = [](double r) {
    return r <= 1.0 ? std::log(r) - 0.5 * std::log1p(r * r) : -0.5 * std::log1p(1.0 / (r * r));
  };
  law.energy = [f = law.energy_slope](double r) { return r * f(r) - std::atan(r); };
  law.h_inverse = [](double v) { return 1.0 / std::sqrt(std::expm1(2.0 * v)); };
  law.depth = ExtendedValue::infinite();
  return law;
}

namespace detail {

// arctan(s) - s / (1 + s^2) = d + E'(1/s) for the rational law
inline double rational_tail(double s) {
  if (s > 1.0 / 3.0) return std::atan(s) - s / (1.0 + s * s);
  // sum_k (-1)^(k+1) 2k/(2k+1) s^(2k+1)
  const double s2 = s * s;
  double term = s * s2, sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 60 && term > 1e-18 * sum; ++k) {
    sum += sign * (2.0 * k / (2.0 * k + 1.0)) * term;
    term *= s2;
    sign = -sign;
  }
  return sum;
}

}  // namespace detail

//! beta(r) = r^2 / (1 + r^2).
inline DiffusionLaw rational_law() {
  DiffusionLaw law;
  law.name = "rational";
  law.beta = [](double r) { return r * r / (1.0 + r * r); };
  law.beta_prime = [](double r) { return 2.0 * r / sqr(1.0 + r * r); };
  law.beta_inf = 1.0;
  law.energy = [](double r) { return -r * std::atan2(1.0, r); };
  law.energy_slope = [](double r) { return -detail::rational_tail(1.0 / r); };
  // E'(r) = -v solved in whichever variable avoids cancellation
  law.h_inverse = [](double v) {
    const double d = kPi / 2;
    if (v > 0.5 * d) {
      auto g = [&](double r) { return std::atan(r) + r / (1.0 + r * r) - (d - v); };
      return quad::find_root(g, 0.0, 1.0, 52);
    }
    auto t = [&](double s) { return detail::rational_tail(s) - v; };
    double hi = 1.0;
    while (t(hi) < 0.0) hi *= 2.0;
    return 1.0 / quad::find_root(t, 0.0, hi, 52);
  };
  law.depth = ExtendedValue::finite(kPi / 2);
  return law;
}

//! beta(r) = log(1 + r); unbounded, used through the clamped surrogate.
inline DiffusionLaw bose_einstein_law() {
  DiffusionLaw law;
  law.name = "bose_einstein";
  law.beta = [](double r) { return std::log1p(r); };
  law.beta_prime = [](double r) { return 1.0 / (1.0 + r); };
  law.beta_inf = kInf;
  law.energy = [](double r) { return r * std::log(r) - (1.0 + r) * std::log1p(r); };
  law.energy_slope = [](double r) { return -std::log1p(1.0 / r); };
  law.h_inverse = [](double v) { return 1.0 / std::expm1(v); };
  law.depth = ExtendedValue::infinite();
  return law;
}

//! User law from beta, beta' and beta_inf; E, E', H and d by quadrature.
inline DiffusionLaw generic_law(std::string name, RealFn beta, RealFn beta_prime, double beta_inf) {
  DiffusionLaw law;
  law.name = std::move(name);
  law.beta = std::move(beta);
  law.beta_prime = std::move(beta_prime);
  law.beta_inf = beta_inf;
  require(law.beta(0.0) == 0.0, "diffusion law: beta(0) must be 0");
  law.depth = detail::generic_depth(law);
  return law;
}

//! beta'(r) = 1 / (1 + r^a), a > 1. With u = s^a / (1 + s^a) the integral
//! of beta' is an incomplete beta function; a = 2 is arctan.
inline DiffusionLaw saturating_law(double a) {
  require(a > 1.0, "saturating law: exponent must exceed 1");
  const double p = 1.0 / a, q = 1.0 - 1.0 / a;
  const double binf = (kPi / a) / std::sin(kPi / a);
  auto bp = [a](double r) { return 1.0 / (1.0 + std::pow(r, a)); };
  auto b = [=](double r) {
    if (r <= 0.0) return 0.0;
    const double ra = std::pow(r, a);
    if (r <= 1.0) return binf * boost::math::ibeta(p, q, ra / (1.0 + ra));
    return binf * (1.0 - boost::math::ibeta(q, p, 1.0 / (1.0 + ra)));
  };
  return generic_law("saturating", b, bp, binf);
}

//! Sampled check of the law hypotheses on a log-spaced grid.
inline void validate_law(const DiffusionLaw& law) {
  require(law.beta && law.beta_prime, "diffusion law: beta and beta' required");
  require(law.beta(0.0) == 0.0, "diffusion law: beta(0) must be 0");
  double prev = 0.0;
  for (double t = -8.0; t <= 8.0; t += 0.25) {
    const double r = std::pow(10.0, t);
    require(law.beta_prime(r) > 0.0, "diffusion law: beta' must be positive");
    const double b = law.beta(r);
    require(b >= prev, "diffusion law: beta must increase");
    require(b <= law.beta_inf * (1.0 + 1e-12), "diffusion law: beta exceeds beta_inf");
    prev = b;
  }
}

inline DiffusionLaw make_law(const std::string& name, const std::vector<double>& params = {}) {
  if (name == "arctan") return arctan_law();
  if (name == "rational") return rational_law();
  if (name == "bose_einstein") return bose_einstein_law();
  if (name == "saturating") {
    require(params.size() == 1, "law.params: saturating law takes one exponent");
    return saturating_law(params[0]);
  }
  throw InputError("law.name: unknown law '" + name + "'");
}

// --- potentials ------------------------------------------------------------

//! Set where V attains its minimum: points and/or closed intervals.
struct MinimumSet {
  double v_min = 0.0;
  std::vector<Interval> parts;  // a == b for isolated points

  bool is_finite_set() const {
    return std::all_of(parts.begin(), parts.end(), [](const Interval& i) { return i.a == i.b; });
  }
  std::vector<double> points() const {
    std::vector<double> p;
    for (const auto& i : parts) p.push_back(0.5 * (i.a + i.b));
    return p;
  }
};

//! C^1 lambda-convex potential.
struct Potential {
  std::string name;
  RealFn v;
  RealFn v_prime;
  RealFn v_second;  // optional
  double lambda = 0.0;
  bool coercive = true;
  bool quadratic_growth = true;
  std::optional<MinimumSet> minima;  // analytic when known

  double operator()(double x) const { return v(x); }
};

//! coef * |x - center|^alpha, alpha > 1.
inline Potential power_potential(double alpha, double coef = 1.0, double center = 0.0) {
  require(alpha > 1.0, "potential.alpha: power potential needs alpha > 1");
  require(coef > 0.0, "potential.coef: must be positive");
  Potential p;
  p.name = "power";
  p.v = [=](double x) { return coef * std::pow(std::abs(x - center), alpha); };
  p.v_prime = [=](double x) {
    const double d = x - center;
    if (d == 0.0) return 0.0;
    return coef * alpha * std::pow(std::abs(d), alpha - 1.0) * (d > 0 ? 1.0 : -1.0);
  };
  p.v_second = [=](double x) {
    const double d = std::abs(x - center);
    if (alpha == 2.0) return 2.0 * coef;
    if (d == 0.0) return alpha < 2.0 ? kInf : 0.0;
    return coef * alpha * (alpha - 1.0) * std::pow(d, alpha - 2.0);
  };
  p.lambda = alpha == 2.0 ? 2.0 * coef : 0.0;
  p.minima = MinimumSet{0.0, {{center, center}}};
  return p;
}

//! coef * |x - center|: convex and Lipschitz but not C^1 at the center.
inline Potential abs_potential(double coef = 1.0, double center = 0.0) {
  require(coef > 0.0, "potential.coef: must be positive");
  Potential p;
  p.name = "abs";
  p.v = [=](double x) { return coef * std::abs(x - center); };
  p.v_prime = [=](double x) { return x > center ? coef : (x < center ? -coef : 0.0); };
  p.v_second = [](double) { return 0.0; };
  p.lambda = 0.0;
  p.minima = MinimumSet{0.0, {{center, center}}};
  return p;
}

//! (x - center)^2 / 2.
inline Potential quadratic_potential(double center = 0.0) {
  Potential p;
  p.name = "quadratic";
  p.v = [=](double x) { return 0.5 * sqr(x - center); };
  p.v_prime = [=](double x) { return x - center; };
  p.v_second = [](double) { return 1.0; };
  p.lambda = 1.0;
  p.minima = MinimumSet{0.0, {{center, center}}};
  return p;
}

//! pi (x - 1)^2 (x + 1)^2; lambda = inf V'' located numerically.
inline Potential double_well_potential() {
  Potential p;
  p.name = "double_well";
  p.v = [](double x) { return kPi * sqr((x - 1.0) * (x + 1.0)); };
  p.v_prime = [](double x) { return 4.0 * kPi * x * (x - 1.0) * (x + 1.0); };
  p.v_second = [](double x) { return kPi * (12.0 * x * x - 4.0); };
  p.lambda = quad::minimize(p.v_second, -3.0, 3.0).second;
  p.minima = MinimumSet{0.0, {{-1.0, -1.0}, {1.0, 1.0}}};
  return p;
}

//! Generic potential; minima located numerically on demand.
inline Potential generic_potential(std::string name, RealFn v, RealFn v_prime, double lambda,
                                   RealFn v_second = {}) {
  Potential p;
  p.name = std::move(name);
  p.v = std::move(v);
  p.v_prime = std::move(v_prime);
  p.v_second = std::move(v_second);
  p.lambda = lambda;
  return p;
}

inline Potential make_potential(const std::string& name, double alpha = 2.0, double coef = 1.0,
                                double center = 0.0) {
  if (name == "power") return power_potential(alpha, coef, center);
  if (name == "abs") return abs_potential(coef, center);
  if (name == "quadratic") return quadratic_potential(center);
  if (name == "double_well") return double_well_potential();
  throw InputError("potential.name: unknown potential '" + name + "'");
}

//! Sampled lambda-convexity check (V'(x) - V'(y))(x - y) >= lambda |x - y|^2.
inline bool check_lambda_convexity(const Potential& p, std::uint64_t seed = 7, int samples = 2000,
                                   double range = 5.0) {
  XorShift64Star rng(seed);
  for (int k = 0; k < samples; ++k) {
    const double x = rng.uniform(-range, range), y = rng.uniform(-range, range);
    const double lhs = (p.v_prime(x) - p.v_prime(y)) * (x - y);
    const double rhs = p.lambda * sqr(x - y);
    if (lhs < rhs - 1e-9 * (1.0 + std::abs(rhs))) return false;
  }
  return true;
}

//! Scan [-range, range] for the global minimum of V, refine each local
//! minimum by Brent's method, and merge contiguous flat samples (within
//! 1e-12 of the minimum) into intervals.
inline MinimumSet locate_minima(const Potential& p, double range = 10.0, std::size_t samples = 20001) {
  std::vector<double> xs(samples), vs(samples);
  const double step = 2.0 * range / static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    xs[i] = -range + step * static_cast<double>(i);
    vs[i] = p.v(xs[i]);
  }
  std::vector<std::pair<double, double>> cands;
  for (std::size_t i = 0; i < samples; ++i) {
    const bool left_ok = i == 0 || vs[i] <= vs[i - 1];
    const bool right_ok = i + 1 == samples || vs[i] <= vs[i + 1];
    if (left_ok && right_ok) {
      const double lo = xs[i > 0 ? i - 1 : i], hi = xs[i + 1 < samples ? i + 1 : i];
      const auto [x, val] = quad::minimize(p.v, lo, hi);
      cands.emplace_back(x, val);
    }
  }
  MinimumSet out;
  out.v_min = kInf;
  for (const auto& c : cands) out.v_min = std::min(out.v_min, c.second);
  const double flat = 1e-12 * std::max(1.0, std::abs(out.v_min));
  for (const auto& c : cands) {
    if (c.second > out.v_min + flat) continue;
    Interval iv{c.first, c.first};
    // extend over flat samples
    std::size_t i = static_cast<std::size_t>(std::clamp((c.first + range) / step, 0.0, double(samples - 1)));
    std::size_t l = i, r = i;
    while (l > 0 && vs[l - 1] <= out.v_min + flat) --l;
    while (r + 1 < samples && vs[r + 1] <= out.v_min + flat) ++r;
    if (r > l + 1) iv = {xs[l], xs[r]};
    const bool dup = std::any_of(out.parts.begin(), out.parts.end(), [&](const Interval& o) {
      return std::abs(o.a - iv.a) <= 2 * step && std::abs(o.b - iv.b) <= 2 * step;
    });
    if (!dup) out.parts.push_back(iv);
  }
  std::sort(out.parts.begin(), out.parts.end(), [](const Interval& l, const Interval& r) { return l.a < r.a; });
  return out;
}

inline MinimumSet minimum_set(const Potential& p) {
  return p.minima ? *p.minima : locate_minima(p);
}

// --- problem ---------------------------------------------------------------

struct Problem {
  DiffusionLaw law;
  Potential potential;
  double mass = 1.0;
  double viscosity = 0.0;

  Problem(DiffusionLaw l, Potential p, double m, double eps = 0.0)
      : law(std::move(l)), potential(std::move(p)), mass(m), viscosity(eps) {
    require(mass > 0.0 && std::isfinite(mass), "mass: must be positive");
    require(viscosity >= 0.0, "viscosity: must be nonnegative");
  }

  //! beta^eps(r) = beta(r) + eps r
  double beta_eps(double r) const { return law.beta(r) + viscosity * r; }
  double beta_eps_prime(double r) const { return law.beta_prime(r) + viscosity; }
};

}  // namespace sublinear
