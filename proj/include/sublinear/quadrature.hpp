// SPDX-License-Identifier: Apache-2.0
// Adaptive Gauss-Kronrod integration, dyadic integration toward an
// endpoint singularity with divergence detection, bracketed root finding.
#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "sublinear/core.hpp"

namespace sublinear::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

//! Adaptive 31-point Gauss-Kronrod on [a, b]; either bound may be infinite.
template <class F>
Result integrate(F&& f, double a, double b, double rel_tol = 1e-12,
                 unsigned max_depth = 12) {
  if (a == b) return {};
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double err = 0.0;
  // shallow pass; tiny pieces are done once the error is negligible in absolute terms
  const double v0 = GK::integrate(f, a, b, std::min(max_depth, 3u), rel_tol, &err);
  if (err <= 1e-15 || max_depth <= 3) return {v0, err};
  const double v = GK::integrate(f, a, b, max_depth, rel_tol, &err);
  return {v, err};
}

//! Integral over [a, b] split at sorted interior breakpoints.
template <class F>
Result integrate_pieces(const F& f, std::vector<double> points,
                        double rel_tol = 1e-12) {
  Result total;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) continue;
    const Result r = integrate(f, points[i], points[i + 1], rel_tol);
    total.value += r.value;
    total.error += r.error;
  }
  return total;
}

//! Settings for integrating toward a point where the integrand may blow up.
struct SingularOptions {
  int max_halvings = 40;           // finest annulus radius r0 * 2^-40
  double growth_per_decade = 1e-3; // divergence threshold on decade increments
  int decades_checked = 3;
  double rel_tol = 1e-12;
};

//! \int over the segment between q and q + dir*r0 of f, where f may be
//! singular at q. The segment is cut into dyadic panels |x-q| in
//! [r0 2^-(k+1), r0 2^-k]; the geometric tail left below the finest panel
//! is extrapolated (Aitken). Divergence is declared when the partial sums
//! keep growing by more than growth_per_decade per decade, without
//! decaying, over the finest decades_checked decades.
template <class F>
ExtendedValue integrate_toward(const F& f, double q, double r0, int dir,
                               const SingularOptions& opt = {}) {
  std::vector<double> partial{0.0};
  std::vector<double> incs;
  double sum = 0.0;
  double r_hi = r0;
  // finite -> done, infinite -> diverges, undetermined -> inconclusive so far
  auto verdict = [&]() -> ExtendedValue {
    const int n = static_cast<int>(incs.size());
    // Decade increments evaluated at dyadic radii nearest to powers of ten.
    std::vector<double> decade;
    for (int j = 0;; ++j) {
      const int k0 = static_cast<int>(std::lround(j * 3.321928094887362));
      const int k1 = static_cast<int>(std::lround((j + 1) * 3.321928094887362));
      if (k1 > n) break;
      // normalized to a full decade (3 or 4 panels fall in each)
      decade.push_back((partial[k1] - partial[k0]) * 3.321928094887362 / (k1 - k0));
    }
    const int nd = static_cast<int>(decade.size());
    if (nd >= opt.decades_checked + 1) {
      bool diverging = true;
      for (int j = nd - opt.decades_checked; j < nd; ++j) {
        const bool big = decade[j] > opt.growth_per_decade;
        const bool not_decaying = decade[j] >= 0.9 * decade[j - 1];
        diverging = diverging && big && not_decaying;
      }
      if (diverging) return ExtendedValue::infinite();
    }
    // Geometric tail: S_inf = S_n + inc_n * rho / (1 - rho).
    const double a = incs[n - 3], b = incs[n - 2], c = incs[n - 1];
    if (std::abs(c) <= 1e-15 * (1.0 + std::abs(sum))) return ExtendedValue::finite(sum);
    const double rho1 = b / a, rho2 = c / b;
    if (rho2 > 0.0 && rho2 < 0.999 && std::abs(rho2 - rho1) <= 1e-3 * rho2) {
      return ExtendedValue::finite(sum + c * rho2 / (1.0 - rho2));
    }
    return ExtendedValue::undetermined(sum);
  };
  for (int k = 0; k < 4 * opt.max_halvings; ++k) {
    const double r_lo = 0.5 * r_hi;
    // panel mapped to s in [1/2, 1] so the rule never sees a tiny interval
    const double inc =
        r_hi * integrate([&](double s) { return f(q + dir * r_hi * s); }, 0.5, 1.0, opt.rel_tol, 4).value;
    if (!std::isfinite(inc)) return ExtendedValue::infinite();
    incs.push_back(inc);
    sum += inc;
    partial.push_back(sum);
    r_hi = r_lo;
    // Bounded integrand: increments halve geometrically and vanish quickly.
    if (k >= 6 && std::abs(inc) <= 1e-17 * (1.0 + std::abs(sum))) {
      return ExtendedValue::finite(sum);
    }
    if (k + 1 >= opt.max_halvings) {
      const ExtendedValue v = verdict();
      if (v.status != LimitStatus::undetermined) return v;
      // keep refining only while panels stay resolvable next to q
      if (r_hi <= 1e3 * std::numeric_limits<double>::epsilon() * std::abs(q)) return v;
    }
  }
  return ExtendedValue::undetermined(sum);
}

//! Root of f in [a, b] (f(a), f(b) of opposite sign) by TOMS 748.
template <class F>
double find_root(F&& f, double a, double b, int digits = 50,
                 std::uintmax_t max_iter = 400) {
  const double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) {
    std::ostringstream os;
    os.precision(17);
    os << "root not bracketed in [" << a << ", " << b << "] (f = " << fa
       << ", " << fb << ")";
    throw ConvergenceError(os.str(), std::abs(b - a));
  }
  std::uintmax_t it = max_iter;
  const auto r = boost::math::tools::toms748_solve(
      f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(digits), it);
  if (it >= max_iter) {
    std::ostringstream os;
    os.precision(17);
    os << "root finder exhausted iterations, bracket [" << r.first << ", "
       << r.second << "]";
    throw ConvergenceError(os.str(), r.second - r.first);
  }
  return 0.5 * (r.first + r.second);
}

//! Local minimizer of f on [a, b] (Brent / golden section).
template <class F>
std::pair<double, double> minimize(F&& f, double a, double b) {
  std::uintmax_t it = 500;
  return boost::math::tools::brent_find_minima(std::forward<F>(f), a, b, 52, it);
}

}  // namespace sublinear::quad
