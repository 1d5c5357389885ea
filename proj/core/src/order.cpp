#include "convexorder/order.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convexorder/errors.hpp"
#include "convexorder/geometry.hpp"
#include "convexorder/lp.hpp"

namespace convexorder::order {

namespace {

constexpr double kSeparatorGapTol = 1e-7;

void require_compatible(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel) {
  if (mu.dimension() != nu.dimension())
    throw DimensionMismatch("order: measures have different dimensions");
  if (rel == Relation::cxpi) {
    for (const DiscreteMeasure* m : {&mu, &nu})
      for (const Atom& a : m->atoms())
        for (double c : a.point)
          if (c < -1e-12)
            throw OrthantViolation("cxpi requires supports in the nonnegative orthant");
  }
}

/// Feasibility program over transport masses pi_ij, i over mu atoms, j over
/// nu atoms. Row order: mass rows (one per mu atom), column rows (one per nu
/// atom), then d barycenter rows per mu atom.
lp::LinearProgram coupling_program(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   Relation rel) {
  const std::size_t nr = mu.size(), nc = nu.size(), d = mu.dimension();
  lp::LinearProgram prog = lp::LinearProgram::feasibility(nr * nc);

  for (std::size_t i = 0; i < nr; ++i) {
    lp::Constraint row;
    row.coeffs.assign(nr * nc, 0.0);
    for (std::size_t j = 0; j < nc; ++j) row.coeffs[i * nc + j] = 1.0;
    row.rel = lp::Rel::Equal;
    row.rhs = mu.atoms()[i].mass;
    prog.constraints.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < nc; ++j) {
    lp::Constraint col;
    col.coeffs.assign(nr * nc, 0.0);
    for (std::size_t i = 0; i < nr; ++i) col.coeffs[i * nc + j] = 1.0;
    col.rel = rel == Relation::cx ? lp::Rel::Equal : lp::Rel::LessEqual;
    col.rhs = nu.atoms()[j].mass;
    prog.constraints.push_back(std::move(col));
  }
  for (std::size_t i = 0; i < nr; ++i) {
    const Vec& x = mu.atoms()[i].point;
    for (std::size_t k = 0; k < d; ++k) {
      lp::Constraint bc;
      bc.coeffs.assign(nr * nc, 0.0);
      if (rel == Relation::cxpi) {
        for (std::size_t j = 0; j < nc; ++j) bc.coeffs[i * nc + j] = nu.atoms()[j].point[k];
        bc.rel = lp::Rel::GreaterEqual;
        bc.rhs = mu.atoms()[i].mass * x[k];
      } else {
        for (std::size_t j = 0; j < nc; ++j)
          bc.coeffs[i * nc + j] = nu.atoms()[j].point[k] - x[k];
        bc.rel = lp::Rel::Equal;
        bc.rhs = 0.0;
      }
      prog.constraints.push_back(std::move(bc));
    }
  }
  return prog;
}

Coupling coupling_from_values(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const std::vector<double>& x) {
  Coupling c;
  for (const Atom& a : mu.atoms()) c.row_points.push_back(a.point);
  for (const Atom& a : nu.atoms()) c.col_points.push_back(a.point);
  const std::size_t nc = nu.size();
  c.pi.assign(mu.size(), std::vector<double>(nc, 0.0));
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nc; ++j) c.pi[i][j] = std::max(0.0, x[i * nc + j]);
  return c;
}

/// Union of the two supports, deduplicated within the measure merge tolerance,
/// in canonical (lexicographic) order, with both mass assignments.
struct MergedSupport {
  std::vector<Vec> points;
  std::vector<double> mu_mass;
  std::vector<double> nu_mass;
};

MergedSupport merged_support(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<Atom> all;
  for (const Atom& a : mu.atoms()) all.push_back({a.point, 1.0});
  for (const Atom& a : nu.atoms()) all.push_back({a.point, 1.0});
  DiscreteMeasure merged(mu.dimension(), std::move(all));
  MergedSupport out;
  for (const Atom& a : merged.atoms()) {
    out.points.push_back(a.point);
    out.mu_mass.push_back(mu.mass_at(a.point));
    out.nu_mass.push_back(nu.mass_at(a.point));
  }
  return out;
}

double support_diameter(const std::vector<Vec>& pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, norm2(sub(pts[i], pts[j])));
  return d;
}

/// Converts an exact Farkas certificate of the coupling program into a
/// separating discrete convex function: the dual ray yields one affine piece
/// per mu atom; their max (clamped at zero for cxp/cxpi) separates.
ConvexSeparator separator_from_farkas(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      Relation rel, const std::vector<mpq_class>& y) {
  const std::size_t nr = mu.size(), nc = nu.size(), d = mu.dimension();
  std::vector<mpq_class> alpha(nr);
  std::vector<std::vector<mpq_class>> gamma(nr, std::vector<mpq_class>(d));
  for (std::size_t i = 0; i < nr; ++i) {
    alpha[i] = y[i];
    for (std::size_t k = 0; k < d; ++k) gamma[i][k] = y[nr + nc + i * d + k];
  }

  MergedSupport sup = merged_support(mu, nu);
  const bool clamp = rel != Relation::cx;
  ConvexSeparator s;
  s.points = sup.points;
  for (const Vec& p : sup.points) {
    mpq_class best = 0;
    std::size_t best_i = nr;  // nr encodes the zero piece
    bool have = false;
    for (std::size_t i = 0; i < nr; ++i) {
      mpq_class piece = alpha[i];
      for (std::size_t k = 0; k < d; ++k) {
        mpq_class z(p[k]);
        if (rel != Relation::cxpi) z -= mpq_class(mu.atoms()[i].point[k]);
        piece += gamma[i][k] * z;
      }
      if (!have || piece > best) {
        best = piece;
        best_i = i;
        have = true;
      }
    }
    if (clamp && (!have || best < 0)) {
      best = 0;
      best_i = nr;
    }
    s.values.push_back(best.get_d());
    Vec g(d, 0.0);
    if (best_i < nr)
      for (std::size_t k = 0; k < d; ++k) g[k] = gamma[best_i][k].get_d();
    s.subgradients.push_back(std::move(g));
  }
  double gap = 0.0;
  for (std::size_t p = 0; p < sup.points.size(); ++p)
    gap += (sup.mu_mass[p] - sup.nu_mass[p]) * s.values[p];
  s.gap = gap;
  return s;
}

/// Exact decision for instances the floating-point pair left ambiguous.
Verdict decide_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel) {
  lp::LinearProgram prog = coupling_program(mu, nu, rel);
  lp::ExactOutcome exact = lp::solve_exact(prog);
  Verdict v;
  if (exact.status != lp::Status::Infeasible) {
    std::vector<double> x(exact.primal.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = exact.primal[i].get_d();
    Coupling c = coupling_from_values(mu, nu, x);
    CouplingCheck chk = validate_coupling(mu, nu, rel, c);
    if (!chk.ok) throw NumericalFailure("order: exact coupling failed double re-validation");
    v.ordered = true;
    v.coupling = std::move(c);
    return v;
  }
  ConvexSeparator s = separator_from_farkas(mu, nu, rel, exact.farkas);
  if (!validate_separator_exact(mu, nu, rel, s))
    throw NumericalFailure("order: Farkas separator failed exact re-validation");
  v.ordered = false;
  v.separator = std::move(s);
  return v;
}

}  // namespace

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::cx:
      return "cx";
    case Relation::cxp:
      return "cxp";
    default:
      return "cxpi";
  }
}

Relation relation_from_name(std::string_view name) {
  if (name == "cx") return Relation::cx;
  if (name == "cxp") return Relation::cxp;
  if (name == "cxpi") return Relation::cxpi;
  throw BadSpec("unknown relation: " + std::string(name));
}

CouplingCheck validate_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel,
                                const Coupling& c, double tol) {
  CouplingCheck out;
  const std::size_t nr = mu.size(), nc = nu.size(), d = mu.dimension();
  if (c.pi.size() != nr || c.row_points.size() != nr || c.col_points.size() != nc) return out;
  for (const auto& row : c.pi)
    if (row.size() != nc) return out;

  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j)
      out.negativity = std::max(out.negativity, -c.pi[i][j]);

  for (std::size_t i = 0; i < nr; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < nc; ++j) rs += c.pi[i][j];
    out.row_residual = std::max(out.row_residual, std::abs(rs - mu.atoms()[i].mass));
  }
  for (std::size_t j = 0; j < nc; ++j) {
    double cs = 0.0;
    for (std::size_t i = 0; i < nr; ++i) cs += c.pi[i][j];
    const double excess = rel == Relation::cx ? std::abs(cs - nu.atoms()[j].mass)
                                              : std::max(0.0, cs - nu.atoms()[j].mass);
    out.col_residual = std::max(out.col_residual, excess);
  }
  for (std::size_t i = 0; i < nr; ++i) {
    const Vec& x = mu.atoms()[i].point;
    const double mi = mu.atoms()[i].mass;
    for (std::size_t k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < nc; ++j) s += c.pi[i][j] * nu.atoms()[j].point[k];
      const double dev = rel == Relation::cxpi ? std::max(0.0, mi * x[k] - s)
                                               : std::abs(s - mi * x[k]);
      out.barycenter_residual = std::max(out.barycenter_residual, dev);
    }
  }
  out.ok = out.negativity <= tol && out.row_residual <= tol && out.col_residual <= tol &&
           out.barycenter_residual <= tol;
  return out;
}

SeparatorCheck validate_separator(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  Relation rel, const ConvexSeparator& s, double tol) {
  SeparatorCheck out;
  const std::size_t np = s.points.size();
  if (s.values.size() != np || s.subgradients.size() != np) return out;

  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t q = 0; q < np; ++q) {
      if (p == q) continue;
      const double lin = s.values[p] + dot(s.subgradients[p], sub(s.points[q], s.points[p]));
      out.convexity_violation = std::max(out.convexity_violation, lin - s.values[q]);
    }
  if (rel != Relation::cx)
    for (double v : s.values) out.positivity_violation = std::max(out.positivity_violation, -v);
  if (rel == Relation::cxpi)
    for (const Vec& g : s.subgradients)
      for (double gk : g) out.monotonicity_violation = std::max(out.monotonicity_violation, -gk);

  // Every support atom must carry a value; integrate by point lookup.
  auto value_at = [&](const Vec& x, bool& found) -> double {
    for (std::size_t p = 0; p < np; ++p)
      if (norm_inf(sub(s.points[p], x)) <= 1e-9) {
        found = true;
        return s.values[p];
      }
    found = false;
    return 0.0;
  };
  double gap = 0.0;
  for (const Atom& a : mu.atoms()) {
    bool found = false;
    gap += a.mass * value_at(a.point, found);
    if (!found) return out;
  }
  for (const Atom& a : nu.atoms()) {
    bool found = false;
    gap -= a.mass * value_at(a.point, found);
    if (!found) return out;
  }
  out.gap = gap;
  out.ok = out.convexity_violation <= tol && out.positivity_violation <= tol &&
           out.monotonicity_violation <= tol && gap > 0.0;
  return out;
}

bool exact_coupling_feasible(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel) {
  require_compatible(mu, nu, rel);
  lp::ExactOutcome exact = lp::solve_exact(coupling_program(mu, nu, rel));
  return exact.status != lp::Status::Infeasible;
}

bool validate_coupling_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel,
                             const Coupling& c) {
  const std::size_t nr = mu.size(), nc = nu.size(), d = mu.dimension();
  if (c.pi.size() != nr || c.col_points.size() != nc) return false;
  const mpq_class tol(1e-8);

  for (std::size_t i = 0; i < nr; ++i) {
    if (c.pi[i].size() != nc) return false;
    mpq_class row_sum = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      if (mpq_class(c.pi[i][j]) < 0) return false;
      row_sum += mpq_class(c.pi[i][j]);
    }
    if (abs(row_sum - mpq_class(mu.atoms()[i].mass)) > tol) return false;
  }
  for (std::size_t j = 0; j < nc; ++j) {
    mpq_class col_sum = 0;
    for (std::size_t i = 0; i < nr; ++i) col_sum += mpq_class(c.pi[i][j]);
    const mpq_class dev = col_sum - mpq_class(nu.atoms()[j].mass);
    if (rel == Relation::cx ? abs(dev) > tol : dev > tol) return false;
  }
  for (std::size_t i = 0; i < nr; ++i) {
    const mpq_class mi(mu.atoms()[i].mass);
    for (std::size_t k = 0; k < d; ++k) {
      mpq_class s = 0;
      for (std::size_t j = 0; j < nc; ++j)
        s += mpq_class(c.pi[i][j]) * mpq_class(nu.atoms()[j].point[k]);
      const mpq_class dev = s - mi * mpq_class(mu.atoms()[i].point[k]);
      if (rel == Relation::cxpi ? -dev > tol : abs(dev) > tol) return false;
    }
  }
  return true;
}

bool validate_separator_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel,
                              const ConvexSeparator& s) {
  const std::size_t np = s.points.size();
  if (s.values.size() != np || s.subgradients.size() != np) return false;
  const mpq_class tol(1e-8);

  auto qpoint = [&](const Vec& v) {
    std::vector<mpq_class> q(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) q[k] = mpq_class(v[k]);
    return q;
  };

  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t q = 0; q < np; ++q) {
      if (p == q) continue;
      mpq_class lin(s.values[p]);
      for (std::size_t k = 0; k < s.points[p].size(); ++k)
        lin += mpq_class(s.subgradients[p][k]) *
               (mpq_class(s.points[q][k]) - mpq_class(s.points[p][k]));
      if (lin - mpq_class(s.values[q]) > tol) return false;
    }
  if (rel != Relation::cx)
    for (double v : s.values)
      if (mpq_class(v) < -tol) return false;
  if (rel == Relation::cxpi)
    for (const Vec& g : s.subgradients)
      for (double gk : g)
        if (mpq_class(gk) < -tol) return false;

  mpq_class gap = 0;
  auto accumulate = [&](const DiscreteMeasure& m, int sign) -> bool {
    for (const Atom& a : m.atoms()) {
      bool found = false;
      std::vector<mpq_class> ap = qpoint(a.point);
      for (std::size_t p = 0; p < np && !found; ++p) {
        if (norm_inf(sub(s.points[p], a.point)) <= 1e-9) {
          gap += sign * mpq_class(a.mass) * mpq_class(s.values[p]);
          found = true;
        }
      }
      if (!found) return false;
    }
    return true;
  };
  if (!accumulate(mu, +1) || !accumulate(nu, -1)) return false;
  return gap > 0;
}

std::optional<Coupling> build_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       Relation rel) {
  require_compatible(mu, nu, rel);
  lp::LinearProgram prog = coupling_program(mu, nu, rel);
  auto [feasible, outcome] = lp::check_feasible_robust(prog);
  if (!feasible) return std::nullopt;
  Coupling c = coupling_from_values(mu, nu, outcome.primal);
  CouplingCheck chk = validate_coupling(mu, nu, rel, c);
  if (!chk.ok) throw NumericalFailure("order: coupling failed re-validation");
  return c;
}

std::optional<ConvexSeparator> find_separator(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              Relation rel) {
  require_compatible(mu, nu, rel);
  MergedSupport sup = merged_support(mu, nu);
  const std::size_t np = sup.points.size();
  if (np == 0) return std::nullopt;
  const std::size_t d = mu.dimension();
  const double diameter = std::max(1.0, support_diameter(sup.points));

  // Variables: values v_p, then subgradient blocks g_p.
  lp::LinearProgram prog;
  prog.sense = lp::Sense::Maximize;
  prog.objective.assign(np + np * d, 0.0);
  prog.lower.assign(np + np * d, 0.0);
  prog.upper.assign(np + np * d, 0.0);
  for (std::size_t p = 0; p < np; ++p) {
    prog.objective[p] = sup.mu_mass[p] - sup.nu_mass[p];
    prog.lower[p] = rel == Relation::cx ? -1.0 : 0.0;
    prog.upper[p] = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      prog.lower[np + p * d + k] = rel == Relation::cxpi ? 0.0 : -diameter;
      prog.upper[np + p * d + k] = diameter;
    }
  }
  // Every convexity row passes through the origin, so the feasible cone has
  // a fully degenerate tip (v constant, g = 0) that can stall the simplex.
  // Tiny deterministic right-hand-side shifts split that tip into generic
  // vertices; they are two orders below the validation tolerances, so the
  // returned certificate still passes every check.
  std::size_t row_index = 0;
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t q = 0; q < np; ++q) {
      if (p == q) continue;
      lp::Constraint con;  // v_q - v_p - <g_p, q - p> >= 0
      con.coeffs.assign(np + np * d, 0.0);
      con.coeffs[q] += 1.0;
      con.coeffs[p] -= 1.0;
      for (std::size_t k = 0; k < d; ++k)
        con.coeffs[np + p * d + k] = -(sup.points[q][k] - sup.points[p][k]);
      con.rel = lp::Rel::GreaterEqual;
      con.rhs = -1e-11 * (1.0 + static_cast<double>(row_index++ % 127) / 127.0);
      prog.constraints.push_back(std::move(con));
    }

  lp::Outcome out = lp::solve_robust(prog);
  if (out.status != lp::Status::Optimal)
    throw NumericalFailure("order: separator program not optimal");
  if (out.objective <= kSeparatorGapTol) return std::nullopt;

  ConvexSeparator s;
  s.points = sup.points;
  s.values.assign(np, 0.0);
  s.subgradients.assign(np, Vec(d, 0.0));
  for (std::size_t p = 0; p < np; ++p) {
    s.values[p] = out.primal[p];
    for (std::size_t k = 0; k < d; ++k) s.subgradients[p][k] = out.primal[np + p * d + k];
  }
  s.gap = out.objective;
  SeparatorCheck chk = validate_separator(mu, nu, rel, s);
  if (!chk.ok) throw NumericalFailure("order: separator failed re-validation");
  return s;
}

Verdict check_order(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Relation rel) {
  require_compatible(mu, nu, rel);

  // Support-hull containment is necessary for cx/cxp; a clear failure lets us
  // skip the coupling program.
  bool try_coupling = true;
  if (rel != Relation::cxpi && !check_support_hull(mu, nu)) try_coupling = false;

  if (try_coupling) {
    if (auto c = build_coupling(mu, nu, rel)) {
      Verdict v;
      v.ordered = true;
      v.coupling = std::move(c);
      return v;
    }
  }
  if (auto s = find_separator(mu, nu, rel)) {
    Verdict v;
    v.ordered = false;
    v.separator = std::move(s);
    return v;
  }
  // Floating point produced neither certificate: settle exactly.
  return decide_exact(mu, nu, rel);
}

bool check_support_hull(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dimension() != nu.dimension())
    throw DimensionMismatch("check_support_hull: dimension mismatch");
  if (mu.empty()) return true;
  if (nu.empty()) return false;
  const std::size_t nc = nu.size(), d = nu.dimension();
  for (const Atom& a : mu.atoms()) {
    lp::LinearProgram prog = lp::LinearProgram::feasibility(nc);
    lp::Constraint sum;
    sum.coeffs.assign(nc, 1.0);
    sum.rel = lp::Rel::Equal;
    sum.rhs = 1.0;
    prog.constraints.push_back(std::move(sum));
    for (std::size_t k = 0; k < d; ++k) {
      lp::Constraint coord;
      coord.coeffs.resize(nc);
      for (std::size_t j = 0; j < nc; ++j) coord.coeffs[j] = nu.atoms()[j].point[k];
      coord.rel = lp::Rel::Equal;
      coord.rhs = a.point[k];
      prog.constraints.push_back(std::move(coord));
    }
    auto [feasible, outcome] = lp::check_feasible_robust(prog);
    (void)outcome;
    if (!feasible) return false;
  }
  return true;
}

Kernel build_kernel_iterative(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int max_rounds,
                              double eps_floor) {
  require_compatible(mu, nu, Relation::cx);

  MergedSupport sup = merged_support(mu, nu);
  const std::size_t nu_pts = sup.points.size();
  auto index_of = [&](const Vec& p) -> std::size_t {
    for (std::size_t u = 0; u < nu_pts; ++u)
      if (norm_inf(sub(sup.points[u], p)) <= 1e-9) return u;
    throw NumericalFailure("kernel: point outside merged support");
  };

  Kernel ker;
  for (const Atom& a : mu.atoms()) ker.row_points.push_back(a.point);
  ker.col_points = sup.points;
  ker.weights.assign(mu.size(), std::vector<double>(nu_pts, 0.0));
  for (std::size_t i = 0; i < mu.size(); ++i) ker.weights[i][index_of(mu.atoms()[i].point)] = 1.0;

  std::vector<double> cur = sup.mu_mass;
  auto cur_measure = [&]() {
    std::vector<Atom> atoms;
    for (std::size_t u = 0; u < nu_pts; ++u)
      if (cur[u] > 0.0) atoms.push_back({sup.points[u], cur[u]});
    return DiscreteMeasure(mu.dimension(), std::move(atoms));
  };
  auto l1_to_nu = [&]() {
    double r = 0.0;
    for (std::size_t u = 0; u < nu_pts; ++u) r += std::abs(cur[u] - sup.nu_mass[u]);
    return r;
  };

  bool converged = false, needs_fallback = false;
  double residual = l1_to_nu();
  int stalled = 0;

  for (int round = 0; round < max_rounds; ++round) {
    if (residual <= 1e-6) {
      converged = true;
      break;
    }
    ker.rounds = round + 1;

    // Heaviest excess atom; canonical order breaks ties.
    std::size_t xi = nu_pts;
    double best_excess = 0.0;
    for (std::size_t u = 0; u < nu_pts; ++u) {
      const double e = cur[u] - sup.nu_mass[u];
      if (e > best_excess + 1e-15) {
        best_excess = e;
        xi = u;
      }
    }
    if (xi == nu_pts) {
      needs_fallback = true;
      break;
    }

    DiscreteMeasure cm = cur_measure();
    geometry::WitnessSimplex w;
    try {
      w = geometry::find_witness(cm, nu, sup.points[xi]);
    } catch (const Error&) {
      needs_fallback = true;
      break;
    }

    // Largest admissible transfer fraction in {1/2, 1/4, ...}.
    bool applied = false;
    for (double eps = 0.5; eps >= eps_floor; eps *= 0.5) {
      std::vector<double> cand = cur;
      const double moved = eps * cur[xi];
      cand[xi] -= moved;
      for (std::size_t t = 0; t < w.points.size(); ++t)
        cand[index_of(w.points[t])] += moved * w.weights[t];

      std::vector<Atom> atoms;
      for (std::size_t u = 0; u < nu_pts; ++u)
        if (cand[u] > 0.0) atoms.push_back({sup.points[u], cand[u]});
      DiscreteMeasure next(mu.dimension(), std::move(atoms));
      auto [feasible, oc] =
          lp::check_feasible_robust(coupling_program(next, nu, Relation::cx));
      (void)oc;
      if (!feasible) continue;

      // Compose the one-point kernel into the running product.
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const double wxi = ker.weights[i][xi];
        if (wxi <= 0.0) continue;
        ker.weights[i][xi] = wxi * (1.0 - eps);
        for (std::size_t t = 0; t < w.points.size(); ++t)
          ker.weights[i][index_of(w.points[t])] += wxi * eps * w.weights[t];
      }
      cur = std::move(cand);
      applied = true;
      break;
    }
    if (!applied) {
      needs_fallback = true;
      break;
    }

    const double next_residual = l1_to_nu();
    if (next_residual > residual - 1e-4 * residual - 1e-12)
      ++stalled;
    else
      stalled = 0;
    residual = next_residual;
    if (stalled >= 5) {
      needs_fallback = true;
      break;
    }
  }
  if (!converged && !needs_fallback && residual > 1e-6) needs_fallback = true;

  if (!converged && needs_fallback) {
    auto c = build_coupling(mu, nu, Relation::cx);
    if (!c) throw Stalled("kernel: greedy schedule stalled and measures are not cx-ordered");
    ker.used_lp_fallback = true;
    ker.col_points = c->col_points;
    ker.weights.assign(mu.size(), std::vector<double>(nu.size(), 0.0));
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double mi = mu.atoms()[i].mass;
      for (std::size_t j = 0; j < nu.size(); ++j) ker.weights[i][j] = c->pi[i][j] / mi;
    }
  }

  // Final residuals, reported for every path.
  const std::size_t ncols = ker.col_points.size();
  std::vector<double> pushed(ncols, 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double mi = mu.atoms()[i].mass;
    double rowsum = 0.0;
    Vec bary(mu.dimension(), 0.0);
    for (std::size_t j = 0; j < ncols; ++j) {
      rowsum += ker.weights[i][j];
      pushed[j] += mi * ker.weights[i][j];
      axpy(bary, ker.weights[i][j], ker.col_points[j]);
    }
    // Row-stochastic within rounding.
    if (std::abs(rowsum - 1.0) > 1e-9)
      for (std::size_t j = 0; j < ncols; ++j) ker.weights[i][j] /= rowsum;
    const Vec diff = sub(bary, ker.row_points[i]);
    ker.max_row_barycenter_residual =
        std::max(ker.max_row_barycenter_residual, norm_inf(diff));
  }
  double l1 = 0.0;
  for (std::size_t j = 0; j < ncols; ++j) l1 += std::abs(pushed[j] - nu.mass_at(ker.col_points[j]));
  // Account for nu atoms that the kernel columns missed entirely.
  for (const Atom& a : nu.atoms()) {
    bool present = false;
    for (const Vec& p : ker.col_points)
      if (norm_inf(sub(p, a.point)) <= 1e-9) {
        present = true;
        break;
      }
    if (!present) l1 += a.mass;
  }
  ker.transport_residual_l1 = l1;
  return ker;
}

bool check_mixed_local_condition(const psd::SymMatrix& q, const psd::SymMatrix& h,
                                 const psd::SymMatrix& hstar, const DiscreteMeasure& nu_t,
                                 const DiscreteMeasure& nustar_t) {
  if (h.size() != q.size() || hstar.size() != q.size())
    throw DimensionMismatch("check_mixed_local_condition: matrix size mismatch");
  if (nu_t.dimension() != q.size() || nustar_t.dimension() != q.size())
    throw DimensionMismatch("check_mixed_local_condition: measure dimension mismatch");
  auto jump_term = [&](const DiscreteMeasure& m) {
    double s = 0.0;
    for (const Atom& a : m.atoms()) s += a.mass * q.quad_form(a.point);
    return s;
  };
  const double lhs = psd::trace_inner(q, h) + jump_term(nu_t);
  const double rhs = psd::trace_inner(q, hstar) + jump_term(nustar_t);
  return lhs <= rhs + 1e-10;
}

}  // namespace convexorder::order
