#include "convexorder/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace convexorder {

namespace {

bool points_coincide(const Vec& a, const Vec& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::size_t dimension, std::vector<Atom> atoms)
    : dim_(dimension) {
  if (dimension == 0) throw std::invalid_argument("measure dimension must be positive");
  for (const Atom& a : atoms) {
    if (a.point.size() != dimension)
      throw DimensionMismatch("atom point dimension does not match measure dimension");
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass))
      throw std::invalid_argument("atom mass must be finite and nonnegative");
    for (double c : a.point)
      if (!std::isfinite(c)) throw std::invalid_argument("atom coordinate must be finite");
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return lex_less(a.point, b.point); });
  for (const Atom& a : atoms) {
    if (a.mass == 0.0) continue;
    if (!atoms_.empty() && points_coincide(atoms_.back().point, a.point, kMergeTol)) {
      atoms_.back().mass += a.mass;
    } else {
      atoms_.push_back(a);
    }
  }
}

double DiscreteMeasure::total_mass() const {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.mass;
  return s;
}

Vec DiscreteMeasure::barycenter() const {
  double total = total_mass();
  if (total <= 0.0) throw ZeroMass("barycenter of a zero-mass measure");
  Vec b(dim_, 0.0);
  for (const Atom& a : atoms_) axpy(b, a.mass / total, a.point);
  return b;
}

double DiscreteMeasure::mass_at(const Vec& point) const {
  if (point.size() != dim_) throw DimensionMismatch("mass_at: point dimension mismatch");
  for (const Atom& a : atoms_)
    if (points_coincide(a.point, point, kMergeTol)) return a.mass;
  return 0.0;
}

double ProjectedMeasure::total_mass() const {
  double s = 0.0;
  for (double m : masses) s += m;
  return s;
}

double ProjectedMeasure::survival(double a) const {
  double s = 0.0;
  for (std::size_t i = 0; i < breakpoints.size(); ++i)
    if (breakpoints[i] > a) s += masses[i] * (breakpoints[i] - a);
  return s;
}

double ProjectedMeasure::max_breakpoint() const {
  return breakpoints.empty() ? -std::numeric_limits<double>::infinity() : breakpoints.back();
}

ProjectedMeasure project(const DiscreteMeasure& m, const Vec& u) {
  if (u.size() != m.dimension()) throw DimensionMismatch("project: direction dimension mismatch");
  if (std::abs(norm2(u) - 1.0) > 1e-9) throw BadDirection("project: direction is not unit length");

  std::vector<std::pair<double, double>> proj;
  proj.reserve(m.size());
  for (const Atom& a : m.atoms()) proj.emplace_back(dot(u, a.point), a.mass);
  std::sort(proj.begin(), proj.end());

  ProjectedMeasure out;
  for (const auto& [b, mass] : proj) {
    if (!out.breakpoints.empty() && b - out.breakpoints.back() <= DiscreteMeasure::kMergeTol) {
      out.masses.back() += mass;
    } else {
      out.breakpoints.push_back(b);
      out.masses.push_back(mass);
    }
  }
  return out;
}

double survival(const DiscreteMeasure& m, const Vec& u, double a) {
  if (u.size() != m.dimension()) throw DimensionMismatch("survival: direction dimension mismatch");
  double s = 0.0;
  for (const Atom& at : m.atoms()) {
    double gap = dot(u, at.point) - a;
    if (gap > 0.0) s += at.mass * gap;
  }
  return s;
}

}  // namespace convexorder
