#pragma once

#include <gmpxx.h>

#include <limits>
#include <vector>

namespace convexorder::lp {

enum class Sense { Minimize, Maximize };
enum class Rel { LessEqual, Equal, GreaterEqual };

struct Constraint {
  std::vector<double> coeffs;
  Rel rel = Rel::LessEqual;
  double rhs = 0.0;
};

/// Dense linear program over structural variables x:
///   optimize  c^T x   s.t.  a_i^T x {<=,=,>=} b_i,   lower <= x <= upper.
/// Bound defaults are [0, +inf); +-infinity is allowed in either bound.
struct LinearProgram {
  Sense sense = Sense::Minimize;
  std::vector<double> objective;
  std::vector<Constraint> constraints;
  std::vector<double> lower;  // empty => all 0
  std::vector<double> upper;  // empty => all +inf

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return constraints.size(); }

  double lower_bound(std::size_t j) const { return lower.empty() ? 0.0 : lower[j]; }
  double upper_bound(std::size_t j) const {
    return upper.empty() ? std::numeric_limits<double>::infinity() : upper[j];
  }

  static LinearProgram feasibility(std::size_t n_vars) {
    LinearProgram p;
    p.objective.assign(n_vars, 0.0);
    return p;
  }
};

enum class Status { Optimal, Infeasible, Unbounded };

/// Result of a solve. Which fields are populated depends on `status`:
///  - Optimal:    primal, dual, objective, residuals
///  - Infeasible: farkas (one multiplier per row, see below)
///  - Unbounded:  primal (a feasible point) and ray (improving direction)
///
/// The Farkas certificate y satisfies y_i <= 0 on <= rows, y_i >= 0 on
/// >= rows, and  sup_{l<=x<=u} (y^T A) x  <  y^T b, so no feasible x exists.
struct Outcome {
  Status status = Status::Optimal;
  std::vector<double> primal;
  std::vector<double> dual;
  double objective = 0.0;
  std::vector<double> farkas;
  std::vector<double> ray;
  double feasibility_residual = 0.0;
  double complementarity_residual = 0.0;
  int iterations = 0;
};

/// Tolerances used by the double-precision engine. The exact engine pivots
/// with zero tolerances.
constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-8;
constexpr double kCompTol = 1e-7;

/// Two-phase bounded-variable primal simplex with Bland's rule.
/// Rows are prescaled to unit max coefficient. Throws NumericalFailure when
/// the pivot budget is exhausted or a certificate fails its residual check.
Outcome solve(const LinearProgram& prog);

/// Phase-one only: feasibility plus a certificate (feasible point or Farkas ray).
std::pair<bool, Outcome> check_feasible(const LinearProgram& prog);

/// solve() with an exact-rational fallback: when the double engine refuses
/// with NumericalFailure, the instance is re-solved exactly and the exact
/// answer is rounded into the outcome (duals stay empty on that path).
/// Meant for the small programs the order and geometry layers generate.
Outcome solve_robust(const LinearProgram& prog);
std::pair<bool, Outcome> check_feasible_robust(const LinearProgram& prog);

/// Exact-rational outcome; primal/farkas entries are exact.
struct ExactOutcome {
  Status status = Status::Optimal;
  std::vector<mpq_class> primal;
  std::vector<mpq_class> farkas;
  mpq_class objective = 0;
};

/// Same algorithm over GMP rationals; double data converts exactly. Intended
/// for small instances (certificate re-validation), not performance.
ExactOutcome solve_exact(const LinearProgram& prog);

/// Max violation of rows and bounds at x, after no scaling (original data).
double feasibility_residual(const LinearProgram& prog, const std::vector<double>& x);

/// Validity margin of a Farkas certificate: positive means infeasibility is
/// certified (sign pattern respected and y^T b exceeds the box supremum).
double farkas_margin(const LinearProgram& prog, const std::vector<double>& y);

}  // namespace convexorder::lp
