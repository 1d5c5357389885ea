#include "convexorder/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <limits>

#include "convexorder/errors.hpp"
#include "convexorder/lp.hpp"
#include "convexorder/parallel.hpp"
#include "convexorder/rng.hpp"

namespace convexorder::geometry {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<Vec> all_support_points(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<Vec> pts;
  for (const Atom& a : mu.atoms()) pts.push_back(a.point);
  for (const Atom& a : nu.atoms()) pts.push_back(a.point);
  return pts;
}

/// d=2 direction set: normals of all pairwise point differences (the angles
/// where the projection order changes) plus midpoints of consecutive arcs.
std::vector<Vec> planar_directions(const std::vector<Vec>& pts, int n_extra) {
  std::vector<double> angles;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dx = pts[i][0] - pts[j][0];
      const double dy = pts[i][1] - pts[j][1];
      if (dx == 0.0 && dy == 0.0) continue;
      const double base = std::atan2(dx, -dy);  // normal of the difference
      for (double a : {base, base + kTwoPi / 2.0}) {
        a = std::fmod(a + kTwoPi, kTwoPi);
        angles.push_back(a);
      }
    }
  for (int k = 0; k < n_extra; ++k) angles.push_back(kTwoPi * k / std::max(1, n_extra));
  if (angles.empty()) angles = {0.0};
  std::sort(angles.begin(), angles.end());
  angles.erase(std::unique(angles.begin(), angles.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               angles.end());

  std::vector<double> with_mid;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const double a = angles[k];
    const double b = k + 1 < angles.size() ? angles[k + 1] : angles.front() + kTwoPi;
    with_mid.push_back(a);
    with_mid.push_back(0.5 * (a + b));
  }
  std::vector<Vec> dirs;
  dirs.reserve(with_mid.size() + 4);
  for (double a : with_mid) dirs.push_back({std::cos(a), std::sin(a)});
  // Axis directions are cheap anchors for degenerate supports.
  dirs.push_back({1.0, 0.0});
  dirs.push_back({-1.0, 0.0});
  dirs.push_back({0.0, 1.0});
  dirs.push_back({0.0, -1.0});
  return dirs;
}

std::vector<Vec> sampled_directions(std::size_t d, int n_directions) {
  const std::size_t n = n_directions > 0 ? static_cast<std::size_t>(n_directions) : 2048;
  std::vector<Vec> dirs;
  dirs.reserve(n);
  if (d == 3) {
    // Fibonacci sphere.
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = kTwoPi * static_cast<double>(k) / golden;
      dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return dirs;
  }
  rng::CounterRng gen = rng::CounterRng::stream(0x5eed, 0xd1c7, d);
  while (dirs.size() < n) {
    Vec u(d);
    for (double& c : u) c = gen.next_normal();
    const double nn = norm2(u);
    if (nn < 1e-9) continue;
    dirs.push_back(scaled(u, 1.0 / nn));
  }
  return dirs;
}

/// Sutherland-Hodgman clip of a convex CCW polygon by <n, y> <= offset.
std::vector<Vec> clip_polygon(const std::vector<Vec>& poly, const Vec& normal, double offset,
                              double eps) {
  std::vector<Vec> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& cur = poly[i];
    const Vec& nxt = poly[(i + 1) % n];
    const double dc = dot(normal, cur) - offset;
    const double dn = dot(normal, nxt) - offset;
    const bool cin = dc <= eps, nin = dn <= eps;
    if (cin) out.push_back(cur);
    if (cin != nin) {
      const double t = dc / (dc - dn);
      Vec inter(2);
      inter[0] = cur[0] + t * (nxt[0] - cur[0]);
      inter[1] = cur[1] + t * (nxt[1] - cur[1]);
      out.push_back(inter);
    }
  }
  return out;
}

std::vector<Vec> dedupe_ring(const std::vector<Vec>& pts, double tol) {
  std::vector<Vec> out;
  for (const Vec& p : pts) {
    bool dup = false;
    for (const Vec& q : out)
      if (norm_inf(sub(p, q)) <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(p);
  }
  return out;
}

/// Drops consecutive (ring-adjacent) vertices closer than tol; keeps the
/// clipping polygon from accumulating tangent-point clusters.
void prune_ring(std::vector<Vec>& poly, double tol) {
  if (poly.size() < 2) return;
  std::vector<Vec> out;
  out.reserve(poly.size());
  for (const Vec& v : poly) {
    if (!out.empty() && norm_inf(sub(out.back(), v)) <= tol) continue;
    out.push_back(v);
  }
  while (out.size() > 1 && norm_inf(sub(out.front(), out.back())) <= tol) out.pop_back();
  poly = std::move(out);
}

void fill_planar_vertices(Polytope& p) {
  double span = 1.0;
  for (const HalfSpace& h : p.halfspaces) span = std::max(span, std::abs(h.offset));
  const double r = 4.0 * span + 1.0;
  std::vector<Vec> poly = {{-r, -r}, {r, -r}, {r, r}, {-r, r}};

  // Visit the (angle-sorted) half-spaces in a strided order: early cuts come
  // from well-separated directions, so the polygon collapses to near-final
  // shape quickly and the remaining tangent cuts stay cheap.
  const std::size_t n = p.halfspaces.size();
  std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(0.618 * n));
  while (stride > 1 && std::gcd(stride, n) != 1) --stride;
  for (std::size_t k = 0; k < n && !poly.empty(); ++k) {
    const HalfSpace& h = p.halfspaces[(k * stride) % n];
    poly = clip_polygon(poly, h.normal, h.offset, 1e-9);
    prune_ring(poly, 1e-10);
  }
  p.vertices = dedupe_ring(poly, 1e-9);
}

Polytope assemble(std::size_t dim, std::vector<Vec> dirs, std::vector<double> offsets) {
  Polytope p;
  for (std::size_t k = 0; k < dirs.size(); ++k)
    p.halfspaces.push_back({std::move(dirs[k]), offsets[k]});
  if (dim == 1) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const HalfSpace& h : p.halfspaces) {
      if (h.normal[0] > 0.0) hi = std::min(hi, h.offset / h.normal[0]);
      if (h.normal[0] < 0.0) lo = std::max(lo, h.offset / h.normal[0]);
    }
    if (lo <= hi + 1e-12) {
      p.vertices.push_back({lo});
      if (hi - lo > 1e-9) p.vertices.push_back({hi});
    }
  } else if (dim == 2) {
    fill_planar_vertices(p);
  }
  return p;
}

std::vector<Vec> direction_set(std::size_t dim, const std::vector<Vec>& pts, int n_directions) {
  if (dim == 1) return {{1.0}, {-1.0}};
  if (dim == 2) return planar_directions(pts, n_directions);
  return sampled_directions(dim, n_directions);
}

Polytope threshold_intersection(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                const std::vector<Vec>& subset, int n_directions) {
  std::vector<Vec> pts = all_support_points(mu, nu);
  pts.insert(pts.end(), subset.begin(), subset.end());
  std::vector<Vec> dirs = direction_set(mu.dimension(), pts, n_directions);

  std::vector<double> offsets(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      double best = -std::numeric_limits<double>::infinity();
      for (const Vec& x : subset) best = std::max(best, threshold(mu, nu, x, dirs[k]));
      offsets[k] = best;
    }
  });
  return assemble(mu.dimension(), std::move(dirs), std::move(offsets));
}

}  // namespace

double threshold(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Vec& x,
                 const Vec& u) {
  if (x.size() != mu.dimension()) throw DimensionMismatch("threshold: point dimension mismatch");
  const ProjectedMeasure pm = project(mu, u);
  const ProjectedMeasure pn = project(nu, u);
  const double b0 = dot(u, x);

  std::vector<double> brk;
  brk.push_back(b0);
  for (double b : pm.breakpoints)
    if (b > b0) brk.push_back(b);
  for (double b : pn.breakpoints)
    if (b > b0) brk.push_back(b);
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end(),
                        [](double a, double b) { return b - a <= 1e-15; }),
            brk.end());

  auto psi = [&](double b) { return pn.survival(b) - pm.survival(b); };

  constexpr double kOrderTol = 1e-9;
  constexpr double kZeroTol = 1e-12;
  double prev_b = b0, prev_psi = psi(b0);
  if (prev_psi < -kOrderTol)
    throw NotOrderedOnLine("survival functions cross below <u,x>");
  if (prev_psi <= kZeroTol) return b0;

  for (std::size_t k = 1; k < brk.size(); ++k) {
    const double cur_b = brk[k];
    const double cur_psi = psi(cur_b);
    if (cur_psi < -kOrderTol)
      throw NotOrderedOnLine("survival functions cross beyond <u,x>");
    if (cur_psi <= kZeroTol) {
      if (cur_psi >= 0.0) return cur_b;  // zero reached at the breakpoint
      // Tiny negative from rounding: the crossing sits inside this segment.
      const double t = prev_psi / (prev_psi - cur_psi);
      return prev_b + t * (cur_b - prev_b);
    }
    prev_b = cur_b;
    prev_psi = cur_psi;
  }
  // Both survivals vanish beyond every breakpoint; equality starts at the end.
  return prev_b;
}

Polytope cx_set(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Vec& x,
                int n_directions) {
  if (mu.dimension() != nu.dimension()) throw DimensionMismatch("cx_set: dimension mismatch");
  return threshold_intersection(mu, nu, {x}, n_directions);
}

Polytope cx_set_subset(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const std::vector<Vec>& subset, int n_directions) {
  if (mu.dimension() != nu.dimension())
    throw DimensionMismatch("cx_set_subset: dimension mismatch");
  if (subset.empty()) throw EmptySubset("cx_set_subset: empty subset");
  return threshold_intersection(mu, nu, subset, n_directions);
}

Polytope support_hull(const DiscreteMeasure& nu) {
  if (nu.empty()) throw Error("support_hull: empty measure");
  const std::size_t d = nu.dimension();

  if (d == 1) {
    double lo = nu.atoms().front().point[0];
    double hi = nu.atoms().back().point[0];
    Polytope p;
    p.halfspaces.push_back({{1.0}, hi});
    p.halfspaces.push_back({{-1.0}, -lo});
    p.vertices.push_back({lo});
    if (hi - lo > 1e-9) p.vertices.push_back({hi});
    return p;
  }

  if (d == 2) {
    // Monotone chain; atoms are already lexicographically sorted.
    std::vector<Vec> pts;
    for (const Atom& a : nu.atoms()) pts.push_back(a.point);
    auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
      return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Vec> hull;
    if (pts.size() == 1) {
      hull = pts;
    } else {
      std::vector<Vec> lower, upper;
      for (const Vec& p : pts) {
        while (lower.size() >= 2 && cross(lower[lower.size() - 2], lower.back(), p) <= 0)
          lower.pop_back();
        lower.push_back(p);
      }
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        while (upper.size() >= 2 && cross(upper[upper.size() - 2], upper.back(), *it) <= 0)
          upper.pop_back();
        upper.push_back(*it);
      }
      lower.pop_back();
      upper.pop_back();
      hull = std::move(lower);
      hull.insert(hull.end(), upper.begin(), upper.end());
      if (hull.empty()) hull = {pts.front()};  // all points coincide
    }
    hull = dedupe_ring(hull, 1e-12);

    Polytope p;
    p.vertices = hull;
    if (hull.size() == 1) {
      const Vec& v = hull.front();
      p.halfspaces.push_back({{1.0, 0.0}, v[0]});
      p.halfspaces.push_back({{-1.0, 0.0}, -v[0]});
      p.halfspaces.push_back({{0.0, 1.0}, v[1]});
      p.halfspaces.push_back({{0.0, -1.0}, -v[1]});
    } else if (hull.size() == 2) {
      const Vec dir = normalized(sub(hull[1], hull[0]));
      const Vec n1 = {dir[1], -dir[0]};
      const Vec n2 = {-dir[1], dir[0]};
      p.halfspaces.push_back({n1, dot(n1, hull[0])});
      p.halfspaces.push_back({n2, dot(n2, hull[0])});
      p.halfspaces.push_back({dir, dot(dir, hull[1])});
      p.halfspaces.push_back({{-dir[0], -dir[1]}, -dot(dir, hull[0])});
    } else {
      for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec& a = hull[i];
        const Vec& b = hull[(i + 1) % hull.size()];
        const Vec e = sub(b, a);
        Vec n = normalized(Vec{e[1], -e[0]});  // outward for CCW rings
        p.halfspaces.push_back({n, dot(n, a)});
      }
    }
    return p;
  }

  std::vector<Vec> dirs = sampled_directions(d, 0);
  Polytope p;
  for (Vec& u : dirs) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Atom& a : nu.atoms()) best = std::max(best, dot(u, a.point));
    p.halfspaces.push_back({std::move(u), best});
  }
  return p;
}

bool contains(const Polytope& p, const Vec& y, double tol) {
  for (const HalfSpace& h : p.halfspaces)
    if (dot(h.normal, y) > h.offset + tol) return false;
  return true;
}

WitnessSimplex find_witness(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Vec& x) {
  if (mu.dimension() != nu.dimension())
    throw DimensionMismatch("find_witness: dimension mismatch");
  if (mu.mass_at(x) <= nu.mass_at(x))
    throw NoWitness("find_witness: x does not carry excess mu mass");

  const Polytope cx = cx_set(mu, nu, x);
  std::vector<Vec> candidates;
  for (const Atom& a : nu.atoms()) {
    if (norm_inf(sub(a.point, x)) <= 1e-9) continue;
    if (contains(cx, a.point, 1e-7)) candidates.push_back(a.point);
  }
  if (candidates.empty()) throw NoWitness("find_witness: no nu atoms inside the cx set");

  const std::size_t d = mu.dimension(), nc = candidates.size();
  lp::LinearProgram prog = lp::LinearProgram::feasibility(nc);
  lp::Constraint sum;
  sum.coeffs.assign(nc, 1.0);
  sum.rel = lp::Rel::Equal;
  sum.rhs = 1.0;
  prog.constraints.push_back(std::move(sum));
  for (std::size_t k = 0; k < d; ++k) {
    lp::Constraint coord;
    coord.coeffs.resize(nc);
    for (std::size_t j = 0; j < nc; ++j) coord.coeffs[j] = candidates[j][k];
    coord.rel = lp::Rel::Equal;
    coord.rhs = x[k];
    prog.constraints.push_back(std::move(coord));
  }
  auto [feasible, outcome] = lp::check_feasible_robust(prog);
  if (!feasible) throw NoWitness("find_witness: x is not a convex combination of candidates");

  // A basic feasible solution has at most d+1 positive weights (Caratheodory
  // via the LP basis); prune float dust and renormalize.
  std::vector<std::pair<double, std::size_t>> active;
  for (std::size_t j = 0; j < nc; ++j)
    if (outcome.primal[j] > 1e-12) active.push_back({outcome.primal[j], j});
  std::sort(active.begin(), active.end(), std::greater<>());
  while (active.size() > d + 1) active.pop_back();

  WitnessSimplex w;
  double total = 0.0;
  for (const auto& [wt, j] : active) total += wt;
  if (total <= 0.0) throw NoWitness("find_witness: degenerate weights");
  for (const auto& [wt, j] : active) {
    w.points.push_back(candidates[j]);
    w.weights.push_back(wt / total);
  }
  if (w.points.size() < 2) throw NoWitness("find_witness: witness would be a single point");

  Vec combo(d, 0.0);
  for (std::size_t t = 0; t < w.points.size(); ++t) axpy(combo, w.weights[t], w.points[t]);
  if (norm_inf(sub(combo, x)) > 1e-8)
    throw NoWitness("find_witness: combination residual above tolerance");
  return w;
}

}  // namespace convexorder::geometry
