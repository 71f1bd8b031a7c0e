// SPDX-License-Identifier: Apache-2.0
// CSV dumps for quantile vectors (w,Y), cell densities (x,u), atoms
// (x,alpha) and diagnostics rows. Floats use 17 significant digits.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sublinear/functionals.hpp"
#include "sublinear/measures.hpp"

namespace sublinear::io {

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw InputError("out: cannot write " + path);
  return os;
}

inline void write_quantile(const std::string& path, const QuantileMeasure& q) {
  auto os = open_out(path);
  os << "w,Y\n";
  for (std::size_t i = 0; i < q.size(); ++i) os << fmt(q.midpoint(i)) << ',' << fmt(q[i]) << '\n';
}

inline void write_density(const std::string& path, const GridMeasure& g) {
  auto os = open_out(path);
  os << "x,u\n";
  for (std::size_t j = 0; j < g.cells(); ++j) os << fmt(g.center(j)) << ',' << fmt(g.density()[j]) << '\n';
}

inline void write_atoms(const std::string& path, const AtomList& atoms) {
  auto os = open_out(path);
  os << "x,alpha\n";
  for (const auto& a : atoms) os << fmt(a.x) << ',' << fmt(a.mass) << '\n';
}

inline void write_diagnostics(const std::string& path, const std::vector<DiagnosticsRow>& rows) {
  auto os = open_out(path);
  os << kDiagnosticsHeader << '\n';
  for (const auto& r : rows) {
    os << fmt(r.t) << ',' << fmt(r.F) << ',' << fmt(r.I_grid) << ',' << fmt(r.I_rate) << ',' << fmt(r.W2_step)
       << ',' << fmt(r.mom2) << ',' << fmt(r.atom_mass_total) << '\n';
  }
}

//! Two-column numeric CSV; returns the header and the rows.
struct Table {
  std::string header;
  std::vector<double> a;
  std::vector<double> b;
};

inline Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("initial: cannot read " + path);
  Table t;
  std::string line;
  if (!std::getline(is, t.header)) throw InputError("initial: empty file " + path);
  while (!t.header.empty() && (t.header.back() == '\r' || t.header.back() == ' ')) t.header.pop_back();
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InputError("initial: " + path + " line " + std::to_string(lineno) + " is not 'a,b'");
    }
    try {
      t.a.push_back(std::stod(line.substr(0, comma)));
      t.b.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw InputError("initial: " + path + " line " + std::to_string(lineno) + " is not numeric");
    }
  }
  return t;
}

//! Cell density from an `x,u` file (uniform centers).
inline GridMeasure read_density(const std::string& path, const AtomList& atoms = {}) {
  const Table t = read_table(path);
  require(t.header == "x,u", "initial: " + path + " must have header x,u");
  require(t.a.size() >= 2, "initial: " + path + " needs at least two cells");
  const double dx = (t.a.back() - t.a.front()) / static_cast<double>(t.a.size() - 1);
  for (std::size_t j = 1; j < t.a.size(); ++j) {
    require(std::abs(t.a[j] - t.a[j - 1] - dx) <= 1e-9 * (1.0 + std::abs(dx)),
            "initial: " + path + " cell centers are not uniform");
  }
  const Interval dom{t.a.front() - 0.5 * dx, t.a.back() + 0.5 * dx};
  return GridMeasure(dom, t.b, atoms);
}

inline AtomList read_atoms(const std::string& path) {
  const Table t = read_table(path);
  require(t.header == "x,alpha", "initial: " + path + " must have header x,alpha");
  AtomList atoms;
  for (std::size_t k = 0; k < t.a.size(); ++k) atoms.push_back({t.a[k], t.b[k]});
  return atoms;
}

//! Quantile vector from a `w,Y` file; the mass is N times the first
//! midpoint spacing.
inline QuantileMeasure read_quantile(const std::string& path) {
  const Table t = read_table(path);
  require(t.header == "w,Y", "initial: " + path + " must have header w,Y");
  require(t.a.size() >= 2, "initial: " + path + " needs at least two rows");
  const double h = t.a[1] - t.a[0];
  return QuantileMeasure(h * static_cast<double>(t.a.size()), t.b);
}

}  // namespace sublinear::io
