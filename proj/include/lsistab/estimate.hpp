#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>

#include "lsistab/linalg.hpp"

namespace lsistab {

enum class Method { closed_form, quadrature, monte_carlo };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed_form";
    case Method::quadrature: return "quadrature";
    case Method::monte_carlo: return "monte_carlo";
  }
  return "?";
}

/// A scalar with an error bar. For Monte Carlo the error is one standard
/// error; for quadrature it is the integrator's bound; closed forms carry 0.
struct Estimate {
  double value = 0.0;
  double abs_error = 0.0;
  Method method = Method::closed_form;
  long n = 0;  // samples or integrand evaluations

  static Estimate exact(double v) { return {v, 0.0, Method::closed_form, 0}; }
};

struct MatrixEstimate {
  MatrixXd value;
  double abs_error = 0.0;  // entrywise bound
  Method method = Method::closed_form;
  long n = 0;
};

/// Worst of two methods, used when an estimate mixes constituents.
inline Method combine_methods(Method a, Method b) {
  if (a == Method::monte_carlo || b == Method::monte_carlo) return Method::monte_carlo;
  if (a == Method::quadrature || b == Method::quadrature) return Method::quadrature;
  return Method::closed_form;
}

enum class Direction { LessEqual, GreaterEqual };

inline std::string_view to_string(Direction d) { return d == Direction::LessEqual ? "<=" : ">="; }

/// One instance of an inequality lhs <= rhs or lhs >= rhs.
/// slack is rhs - lhs for <= and lhs - rhs for >=, so a positive slack always
/// means the inequality holds with room to spare.
inline constexpr double kRoundingSlack = 1e-12;

struct BoundReport {
  std::string name;
  Estimate lhs;
  Estimate rhs;
  Direction direction = Direction::LessEqual;
  double slack = 0.0;
  bool holds = true;
  bool preconditions_met = true;
  std::string notes;
  std::map<std::string, double> extras;

  double tolerance() const { return lhs.abs_error + rhs.abs_error; }
};

inline BoundReport make_report(std::string name, const Estimate& lhs, const Estimate& rhs, Direction dir,
                               std::string notes = {}) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.direction = dir;
  r.slack = dir == Direction::LessEqual ? rhs.value - lhs.value : lhs.value - rhs.value;
  // equality cases evaluated in closed form tie up to rounding
  const double rounding = kRoundingSlack * (1.0 + std::max(std::abs(lhs.value), std::abs(rhs.value)));
  r.holds = r.slack >= -(lhs.abs_error + rhs.abs_error + rounding);
  r.notes = std::move(notes);
  return r;
}

}  // namespace lsistab
