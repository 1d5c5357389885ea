#pragma once

#include <vector>

#include "convexorder/measure.hpp"

namespace convexorder::geometry {

/// Closed half-space { y : <normal, y> <= offset } with a unit normal.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;
};

/// Intersection of half-spaces. Vertices are computed for d <= 2 (in 1-D the
/// interval endpoints, in 2-D the polygon corners in counterclockwise order;
/// degenerate sets collapse to collinear or coincident vertices). For d >= 3
/// only the half-space list is populated.
struct Polytope {
  std::vector<HalfSpace> halfspaces;
  std::vector<Vec> vertices;
};

/// Convex-combination witness through at most d+1 support points of nu.
struct WitnessSimplex {
  std::vector<Vec> points;
  std::vector<double> weights;
};

/// Smallest b >= <u, x> where the mu- and nu-survival functions along u
/// coincide, located by scanning the merged breakpoint list (the difference
/// is piecewise linear, so the first zero is exact). Throws NotOrderedOnLine
/// if the nu-survival drops below the mu-survival by more than 1e-9 anywhere
/// at or beyond <u, x>.
double threshold(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Vec& x, const Vec& u);

/// Intersection of threshold half-spaces over a direction set; an outer
/// approximation that contains x, exact in d <= 2 where the direction set
/// includes every critical angle (normals of pairwise support differences)
/// plus arc midpoints. n_directions adds uniform directions in d = 2 and
/// sets the sample count for d >= 3 (default 2048).
Polytope cx_set(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Vec& x,
                int n_directions = 0);

/// Per-direction offsets are the maximum threshold over the subset E.
Polytope cx_set_subset(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const std::vector<Vec>& subset, int n_directions = 0);

/// Convex hull of Supp(nu): exact with vertices for d <= 2, sampled
/// half-spaces for d >= 3.
Polytope support_hull(const DiscreteMeasure& nu);

bool contains(const Polytope& p, const Vec& y, double tol);

/// Caratheodory witness for Theorem-style decompositions: expresses x as a
/// convex combination of at most d+1 nu-atoms inside cx_set(mu, nu, x),
/// excluding x itself. Requires mu({x}) > nu({x}); throws NoWitness when the
/// candidate set is empty or the membership program is infeasible.
WitnessSimplex find_witness(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Vec& x);

}  // namespace convexorder::geometry
