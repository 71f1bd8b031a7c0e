// SPDX-License-Identifier: Apache-2.0
// Finite nonnegative measures on the line in two representations:
//
//  - QuantileMeasure: the monotone rearrangement Y(w) sampled at the mass
//    midpoints w_i = (i + 1/2) m / N. One-dimensional optimal transport is
//    linear in this coordinate.
//  - GridMeasure: cell-averaged density on a uniform grid plus a finite
//    list of atoms (the singular part).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sublinear/core.hpp"

namespace sublinear {

struct Atom {
  double x = 0.0;
  double mass = 0.0;
};
using AtomList = std::vector<Atom>;

inline double total_mass(const AtomList& atoms) {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  return m;
}

struct Interval {
  double a = 0.0;
  double b = 1.0;
  double length() const { return b - a; }
  bool contains(double x) const { return x >= a && x <= b; }
};

class QuantileMeasure {
 public:
  QuantileMeasure(double mass, std::vector<double> values)
      : mass_(mass), values_(std::move(values)) {
    require(mass_ > 0.0 && std::isfinite(mass_), "quantile measure: mass must be positive");
    require(values_.size() >= 2, "quantile measure: need at least 2 quantile values");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      require(std::isfinite(values_[i]), "quantile measure: non-finite value");
      if (i > 0 && values_[i] < values_[i - 1]) {
        std::ostringstream os;
        os.precision(17);
        os << "quantile measure: values not nondecreasing at index " << i << " ("
           << values_[i - 1] << " > " << values_[i] << ")";
        throw InputError(os.str());
      }
    }
  }

  //! Quantile vector of `n` points all at `x` (a single atom).
  static QuantileMeasure dirac(double mass, double x, std::size_t n) {
    return {mass, std::vector<double>(n, x)};
  }

  double mass() const { return mass_; }
  std::size_t size() const { return values_.size(); }
  double mass_step() const { return mass_ / static_cast<double>(values_.size()); }
  double midpoint(std::size_t i) const { return (static_cast<double>(i) + 0.5) * mass_step(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

 private:
  double mass_;
  std::vector<double> values_;
};

class GridMeasure {
 public:
  //! Declared mass is the sum of the parts.
  GridMeasure(Interval domain, std::vector<double> density, AtomList atoms = {})
      : domain_(domain), density_(std::move(density)), atoms_(std::move(atoms)) {
    validate_shape();
    mass_ = regular_mass() + total_mass(atoms_);
  }

  //! Declared mass must match the parts to 1e-12 (relative to max(1, mass)).
  GridMeasure(Interval domain, std::vector<double> density, AtomList atoms, double declared_mass)
      : domain_(domain), density_(std::move(density)), atoms_(std::move(atoms)),
        mass_(declared_mass) {
    validate_shape();
    const double actual = regular_mass() + total_mass(atoms_);
    if (std::abs(actual - mass_) > 1e-12 * std::max(1.0, std::abs(mass_))) {
      std::ostringstream os;
      os.precision(17);
      os << "grid measure: parts carry mass " << actual << ", declared " << mass_;
      throw InputError(os.str());
    }
  }

  const Interval& domain() const { return domain_; }
  std::size_t cells() const { return density_.size(); }
  double dx() const { return domain_.length() / static_cast<double>(density_.size()); }
  double edge(std::size_t j) const { return domain_.a + static_cast<double>(j) * dx(); }
  double center(std::size_t j) const { return domain_.a + (static_cast<double>(j) + 0.5) * dx(); }
  std::span<const double> density() const { return density_; }
  const AtomList& atoms() const { return atoms_; }
  double mass() const { return mass_; }
  double regular_mass() const {
    return dx() * std::accumulate(density_.begin(), density_.end(), 0.0);
  }
  double singular_mass() const { return total_mass(atoms_); }
  //! Index of the cell containing x (clamped to the grid).
  std::size_t cell_of(double x) const {
    const double s = (x - domain_.a) / dx();
    if (s <= 0.0) return 0;
    return std::min(cells() - 1, static_cast<std::size_t>(s));
  }

 private:
  void validate_shape() const {
    require(domain_.b > domain_.a, "grid measure: empty domain");
    require(!density_.empty(), "grid measure: no cells");
    for (double u : density_) {
      require(std::isfinite(u) && u >= 0.0, "grid measure: density must be finite and nonnegative");
    }
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
      require(atoms_[k].mass > 0.0, "grid measure: atom masses must be positive");
      require(domain_.contains(atoms_[k].x), "grid measure: atom outside the domain");
      if (k > 0) {
        require(atoms_[k].x > atoms_[k - 1].x, "grid measure: atom positions must increase strictly");
      }
    }
  }

  Interval domain_;
  std::vector<double> density_;
  AtomList atoms_;
  double mass_ = 0.0;
};

//! Pseudo-inverse of the cumulative distribution of `g`, sampled at mass
//! midpoints. Within a cell the density is uniform; at a jump the smallest
//! x with M(x) >= w is taken.
inline QuantileMeasure quantile_from_grid(const GridMeasure& g, std::size_t n) {
  require(n >= 2, "quantile_from_grid: need n >= 2");
  const double mass = g.mass();
  require(mass > 0.0, "quantile_from_grid: zero total mass");

  struct Piece {
    double lo, hi, mass;
  };
  std::vector<Piece> pieces;
  pieces.reserve(g.cells() + 2 * g.atoms().size());
  const auto& atoms = g.atoms();
  std::size_t k = 0;
  for (std::size_t j = 0; j < g.cells(); ++j) {
    const double right = (j + 1 == g.cells()) ? g.domain().b : g.edge(j + 1);
    const bool last = j + 1 == g.cells();
    double left = g.edge(j);
    const double u = g.density()[j];
    while (k < atoms.size() && (atoms[k].x < right || (last && atoms[k].x <= right))) {
      pieces.push_back({left, atoms[k].x, u * (atoms[k].x - left)});
      pieces.push_back({atoms[k].x, atoms[k].x, atoms[k].mass});
      left = atoms[k].x;
      ++k;
    }
    pieces.push_back({left, right, u * (right - left)});
  }

  const double h = mass / static_cast<double>(n);
  std::vector<double> y(n);
  std::size_t i = 0;
  double cum = 0.0;
  double last_pos = g.domain().a;
  for (const auto& p : pieces) {
    if (!(p.mass > 0.0)) continue;
    while (i < n && (static_cast<double>(i) + 0.5) * h <= cum + p.mass) {
      const double w = (static_cast<double>(i) + 0.5) * h;
      const double frac = std::clamp((w - cum) / p.mass, 0.0, 1.0);
      y[i] = p.lo + frac * (p.hi - p.lo);
      ++i;
    }
    cum += p.mass;
    last_pos = p.hi;
  }
  for (; i < n; ++i) y[i] = last_pos;  // rounding at the top end
  for (std::size_t t = 1; t < n; ++t) y[t] = std::max(y[t], y[t - 1]);
  return {mass, std::move(y)};
}

//! Rebuilds a grid measure from quantiles. Runs of consecutive quantile
//! gaps below atom_threshold * dx collapse into atoms at the run mean; each
//! remaining point spreads its mass uniformly between the midpoints to its
//! neighbours.
inline GridMeasure grid_from_quantile(const QuantileMeasure& q, Interval domain,
                                      std::size_t cells, double atom_threshold = 1e-3) {
  require(cells >= 1, "grid_from_quantile: need at least one cell");
  require(domain.b > domain.a, "grid_from_quantile: empty domain");
  const auto y = q.values();
  const std::size_t n = y.size();
  for (double v : {y.front(), y.back()}) {
    if (!domain.contains(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "grid_from_quantile: quantile value " << v << " outside domain [" << domain.a << ", "
         << domain.b << "]";
      throw InputError(os.str());
    }
  }
  const double dx = domain.length() / static_cast<double>(cells);
  const double h = q.mass_step();
  const double merge_gap = atom_threshold * dx;

  std::vector<double> density(cells, 0.0);
  AtomList atoms;
  auto deposit = [&](double lo, double hi) {
    lo = std::clamp(lo, domain.a, domain.b);
    hi = std::clamp(hi, domain.a, domain.b);
    if (!(hi > lo)) {
      const auto j = std::min(cells - 1, static_cast<std::size_t>(std::max(0.0, (lo - domain.a) / dx)));
      density[j] += h / dx;
      return;
    }
    const double rate = h / (hi - lo);
    auto j = std::min(cells - 1, static_cast<std::size_t>(std::max(0.0, (lo - domain.a) / dx)));
    for (; j < cells; ++j) {
      const double c0 = domain.a + static_cast<double>(j) * dx;
      const double c1 = (j + 1 == cells) ? domain.b : c0 + dx;
      if (c0 >= hi) break;
      const double overlap = std::min(hi, c1) - std::max(lo, c0);
      if (overlap > 0.0) density[j] += rate * overlap / dx;
    }
  };

  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] - y[j] < merge_gap) ++j;
    if (j > i) {
      double pos = 0.0;
      for (std::size_t t = i; t <= j; ++t) pos += y[t];
      pos /= static_cast<double>(j - i + 1);
      atoms.push_back({pos, static_cast<double>(j - i + 1) * h});
    } else {
      const double lo = i > 0 ? 0.5 * (y[i - 1] + y[i]) : y[0] - 0.5 * (y[1] - y[0]);
      const double hi = i + 1 < n ? 0.5 * (y[i] + y[i + 1]) : y[n - 1] + 0.5 * (y[n - 1] - y[n - 2]);
      deposit(lo, hi);
    }
    i = j + 1;
  }
  return GridMeasure(domain, std::move(density), std::move(atoms));
}

//! L2 distance of quantile functions.
inline double wasserstein(const QuantileMeasure& q1, const QuantileMeasure& q2) {
  require(q1.size() == q2.size(), "wasserstein: resolution mismatch");
  require(std::abs(q1.mass() - q2.mass()) <= 1e-12 * std::max(1.0, q1.mass()),
          "wasserstein: mass mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < q1.size(); ++i) s += sqr(q1[i] - q2[i]);
  return std::sqrt(q1.mass_step() * s);
}

//! Exact W2 between two atomic measures through the monotone
//! (north-west corner) coupling.
inline double wasserstein_bruteforce(AtomList a, AtomList b) {
  require(a.size() <= 16 && b.size() <= 16, "wasserstein_bruteforce: at most 16 atoms per side");
  const double ma = total_mass(a), mb = total_mass(b);
  require(std::abs(ma - mb) <= 1e-12 * std::max(1.0, ma), "wasserstein_bruteforce: mass mismatch");
  auto by_x = [](const Atom& l, const Atom& r) { return l.x < r.x; };
  std::sort(a.begin(), a.end(), by_x);
  std::sort(b.begin(), b.end(), by_x);
  std::size_t i = 0, j = 0;
  double ra = a.empty() ? 0.0 : a[0].mass;
  double rb = b.empty() ? 0.0 : b[0].mass;
  double cost = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(ra, rb);
    cost += t * sqr(a[i].x - b[j].x);
    ra -= t;
    rb -= t;
    if (ra <= 1e-15 * ma) {
      if (++i < a.size()) ra = a[i].mass;
    }
    if (rb <= 1e-15 * ma) {
      if (++j < b.size()) rb = b[j].mass;
    }
  }
  return std::sqrt(cost);
}

//! Displacement interpolation (1 - theta) Y0 + theta Y1.
inline QuantileMeasure displacement_interpolate(const QuantileMeasure& q0, const QuantileMeasure& q1,
                                                double theta) {
  require(theta >= 0.0 && theta <= 1.0, "displacement_interpolate: theta outside [0, 1]");
  require(q0.size() == q1.size(), "displacement_interpolate: resolution mismatch");
  require(std::abs(q0.mass() - q1.mass()) <= 1e-12 * std::max(1.0, q0.mass()),
          "displacement_interpolate: mass mismatch");
  std::vector<double> y(q0.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (1.0 - theta) * q0[i] + theta * q1[i];
  for (std::size_t i = 1; i < y.size(); ++i) y[i] = std::max(y[i], y[i - 1]);
  return {q0.mass(), std::move(y)};
}

inline double second_moment(const QuantileMeasure& q) {
  double s = 0.0;
  for (double y : q.values()) s += y * y;
  return q.mass_step() * s;
}

//! Push-forward of an atom list; positions are re-sorted and coincident
//! atoms merged.
inline AtomList push_forward_atoms(const AtomList& atoms, const std::function<double(double)>& map) {
  AtomList out;
  out.reserve(atoms.size());
  for (const auto& a : atoms) out.push_back({map(a.x), a.mass});
  std::stable_sort(out.begin(), out.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
  AtomList merged;
  for (const auto& a : out) {
    if (!merged.empty() && merged.back().x == a.x) {
      merged.back().mass += a.mass;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
}

//! Quantiles of a purely atomic measure.
inline QuantileMeasure quantile_from_atoms(const AtomList& atoms, Interval domain, std::size_t n) {
  return quantile_from_grid(GridMeasure(domain, std::vector<double>(1, 0.0), atoms), n);
}

}  // namespace sublinear
