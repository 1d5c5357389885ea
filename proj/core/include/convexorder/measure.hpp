#pragma once

#include <cstddef>
#include <vector>

#include "convexorder/linalg.hpp"

namespace convexorder {

/// One weighted support point of a finitely supported measure.
struct Atom {
  Vec point;
  double mass = 0.0;
};

/// Finitely supported nonnegative measure on R^d.
///
/// Construction canonicalizes the atom list: zero-mass atoms are dropped,
/// points that coincide within 1e-12 (max-norm) are merged with masses
/// summed, and atoms are sorted lexicographically so that downstream LP
/// columns are deterministic. Instances are immutable after construction.
class DiscreteMeasure {
 public:
  static constexpr double kMergeTol = 1e-12;

  DiscreteMeasure() = default;
  DiscreteMeasure(std::size_t dimension, std::vector<Atom> atoms);

  std::size_t dimension() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  double total_mass() const;

  /// Mass-weighted mean of the support. Throws ZeroMass on empty/null measures.
  Vec barycenter() const;

  /// Mass of the atom at `point`, 0 if none matches within the merge tolerance.
  double mass_at(const Vec& point) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Atom> atoms_;
};

/// 1-D image measure of a DiscreteMeasure under x -> <u, x>.
/// Breakpoints are strictly increasing; masses are positive; total mass
/// equals the mass of the source measure.
struct ProjectedMeasure {
  std::vector<double> breakpoints;
  std::vector<double> masses;

  double total_mass() const;
  /// Survival value int (y - a)^+ d(projected measure).
  double survival(double a) const;
  double max_breakpoint() const;
};

/// Throws BadDirection unless ||u|| = 1 within 1e-9.
ProjectedMeasure project(const DiscreteMeasure& m, const Vec& u);

/// Survival function phi_{m,u}(a) = sum_atoms mass * max(<u, point> - a, 0).
/// Convex, nonincreasing and piecewise linear in a; identically 0 for
/// a >= max_atom <u, point>.
double survival(const DiscreteMeasure& m, const Vec& u, double a);

}  // namespace convexorder
