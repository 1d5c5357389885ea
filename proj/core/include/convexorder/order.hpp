#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convexorder/measure.hpp"
#include "convexorder/psd.hpp"

namespace convexorder::order {

/// cx: all convex test functions; cxp: nonnegative convex; cxpi: nonnegative
/// nondecreasing convex (both measures must live in the closed nonnegative
/// orthant for cxpi).
enum class Relation { cx, cxp, cxpi };

std::string_view relation_name(Relation r);
Relation relation_from_name(std::string_view name);

/// Primal certificate: nonnegative transport masses over Supp(mu) x Supp(nu).
/// Row sums equal the mu masses for every relation. Column sums equal the nu
/// masses (cx) or stay below them (cxp, cxpi). Row barycenters reproduce the
/// mu atoms (cx, cxp) or dominate them componentwise (cxpi).
struct Coupling {
  std::vector<Vec> row_points;
  std::vector<Vec> col_points;
  std::vector<std::vector<double>> pi;
};

/// Dual certificate: values and subgradients of a discrete convex function on
/// Supp(mu) u Supp(nu) whose integral against mu exceeds the one against nu.
struct ConvexSeparator {
  std::vector<Vec> points;
  std::vector<double> values;
  std::vector<Vec> subgradients;
  double gap = 0.0;
};

struct Verdict {
  bool ordered = false;
  std::optional<Coupling> coupling;
  std::optional<ConvexSeparator> separator;
};

struct CouplingCheck {
  bool ok = false;
  double negativity = 0.0;
  double row_residual = 0.0;
  double col_residual = 0.0;
  double barycenter_residual = 0.0;
};

struct SeparatorCheck {
  bool ok = false;
  double convexity_violation = 0.0;
  double positivity_violation = 0.0;
  double monotonicity_violation = 0.0;
  double gap = 0.0;
};

/// Direct-arithmetic re-validation of certificates (no LP involved).
CouplingCheck validate_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                Relation rel, const Coupling& c, double tol = 1e-8);
SeparatorCheck validate_separator(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  Relation rel, const ConvexSeparator& s, double tol = 1e-8);

/// Exact-rational re-validation: replays the certificate inequalities in
/// rational arithmetic with the stated tolerances as exact constants, so the
/// checking path itself introduces no rounding.
bool validate_coupling_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel,
                             const Coupling& c);
bool validate_separator_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel,
                              const ConvexSeparator& s);

/// Exact-rational feasibility of the coupling program itself (the double
/// data reinterpreted as exact rationals). Used as the tie-breaker when the
/// floating-point primal/dual pair is inconclusive.
bool exact_coupling_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel);

/// Feasible transport plan for the relation, or nullopt when none exists.
std::optional<Coupling> build_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       Relation rel);

/// Best normalized separating discrete convex function, or nullopt when the
/// optimal gap is below 1e-7. Values are capped at 1 and subgradients at the
/// support diameter scale, so any genuinely positive gap survives scaling.
std::optional<ConvexSeparator> find_separator(const DiscreteMeasure& mu,
                                              const DiscreteMeasure& nu, Relation rel);

/// Decides mu <= nu for the relation. Exactly one certificate is attached and
/// has been validated. Near-degenerate instances are settled by an exact
/// rational solve, with ties resolved in favor of ordering.
Verdict check_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel);

/// Necessary condition: every mu atom lies in the convex hull of Supp(nu).
bool check_support_hull(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Row-stochastic kernel with mu K = nu (within transport_residual_l1) and
/// every row barycentrically centered at its source point.
struct Kernel {
  std::vector<Vec> row_points;
  std::vector<Vec> col_points;
  std::vector<std::vector<double>> weights;
  bool used_lp_fallback = false;
  int rounds = 0;
  double transport_residual_l1 = 0.0;
  double max_row_barycenter_residual = 0.0;
};

/// Iterative one-point-transfer construction: repeatedly moves an epsilon of
/// the heaviest excess atom onto a witness simplex, re-checking cx order by
/// LP after each tentative transfer. Falls back to the direct coupling kernel
/// pi/mu when the greedy schedule stalls or the round budget is exhausted.
/// Requires mu cx-dominated by nu.
Kernel build_kernel_iterative(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              int max_rounds = 200, double eps_floor = 1e-6);

/// Mixed diffusion/jump comparison for a fixed quadratic test function with
/// Hessian 2Q:  Tr(QH) + int <x,Qx> nu_t(dx)  <=  Tr(QH*) + int <x,Qx> nu*_t(dx)
/// within 1e-10.
bool check_mixed_local_condition(const psd::SymMatrix& q, const psd::SymMatrix& h,
                                 const psd::SymMatrix& hstar, const DiscreteMeasure& nu_t,
                                 const DiscreteMeasure& nustar_t);

}  // namespace convexorder::order
