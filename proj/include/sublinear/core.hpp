// SPDX-License-Identifier: Apache-2.0
// Error types and small numeric helpers shared by every module.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sublinear {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

//! Rejected input: a precondition or invariant of an argument failed.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

//! A numerical procedure (quadrature, root finder, inner solver) did not
//! reach its tolerance. `achieved` carries the best error estimate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

//! Outcome of a limit computation that may diverge.
enum class LimitStatus { finite, infinite, undetermined };

inline const char* to_string(LimitStatus s) {
  switch (s) {
    case LimitStatus::finite: return "finite";
    case LimitStatus::infinite: return "infinite";
    case LimitStatus::undetermined: return "undetermined";
  }
  return "?";
}

//! A value that is either a finite number, +inf, or could not be decided.
struct ExtendedValue {
  double value = 0.0;
  LimitStatus status = LimitStatus::finite;

  bool is_finite() const { return status == LimitStatus::finite; }
  bool is_infinite() const { return status == LimitStatus::infinite; }
  static ExtendedValue finite(double v) { return {v, LimitStatus::finite}; }
  static ExtendedValue infinite() { return {kInf, LimitStatus::infinite}; }
  static ExtendedValue undetermined(double best) {
    return {best, LimitStatus::undetermined};
  }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

inline double sqr(double x) { return x * x; }

}  // namespace sublinear
