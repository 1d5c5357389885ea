#pragma once

// Shared random-instance generator and a brute-force order oracle used by the
// order tests and the acceptance suite. The oracle samples a dense family of
// admissible test functions directly; it never touches the LP machinery it is
// meant to check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "convexorder/measure.hpp"
#include "convexorder/order.hpp"
#include "convexorder/rng.hpp"

namespace convexorder::testsupport {

struct Instance {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};

/// Deterministic instance stream. Kinds cycle with the index:
///   0: independent random pair (rarely ordered)
///   1: mu = grouped barycenters of nu (cx-ordered by construction)
///   2: kind 1 with mu masses scaled by 0.7 (cxp-ordered, not cx)
///   3: kind 1 with one mu atom nudged (borderline either way)
inline Instance make_instance(std::uint64_t seed, std::uint64_t index) {
  rng::CounterRng gen = rng::CounterRng::stream(seed, 0x717e57, index);
  const std::size_t d = 1 + gen.next_u64() % 3;
  const std::size_t n_nu = 2 + gen.next_u64() % 5;

  auto rand_coord = [&]() { return 2.0 * gen.next_unit() - 1.0; };
  auto rand_mass = [&]() { return 0.05 + 0.95 * gen.next_unit(); };

  std::vector<Atom> nu_atoms;
  for (std::size_t j = 0; j < n_nu; ++j) {
    Vec p(d);
    for (double& c : p) c = rand_coord();
    nu_atoms.push_back({p, rand_mass()});
  }
  DiscreteMeasure nu(d, nu_atoms);

  const int kind = static_cast<int>(index % 4);
  std::vector<Atom> mu_atoms;
  if (kind == 0) {
    const std::size_t n_mu = 1 + gen.next_u64() % 4;
    for (std::size_t i = 0; i < n_mu; ++i) {
      Vec p(d);
      for (double& c : p) c = rand_coord();
      mu_atoms.push_back({p, rand_mass()});
    }
  } else {
    const std::size_t groups = 1 + gen.next_u64() % std::min<std::size_t>(3, nu.size());
    std::vector<std::vector<const Atom*>> buckets(groups);
    for (std::size_t j = 0; j < nu.size(); ++j)
      buckets[gen.next_u64() % groups].push_back(&nu.atoms()[j]);
    for (const auto& bucket : buckets) {
      if (bucket.empty()) continue;
      double mass = 0.0;
      Vec p(d, 0.0);
      for (const Atom* a : bucket) {
        mass += a->mass;
        axpy(p, a->mass, a->point);
      }
      for (double& c : p) c /= mass;
      mu_atoms.push_back({p, mass});
    }
    if (kind == 2)
      for (Atom& a : mu_atoms) a.mass *= 0.7;
    if (kind == 3) {
      Atom& a = mu_atoms[gen.next_u64() % mu_atoms.size()];
      for (double& c : a.point) c += 0.3 * (gen.next_unit() - 0.5);
    }
  }
  return {DiscreteMeasure(d, mu_atoms), std::move(nu)};
}

namespace detail {

inline std::vector<Vec> oracle_directions(std::size_t d, bool nonnegative_only) {
  std::vector<Vec> dirs;
  if (d == 1) {
    dirs.push_back({1.0});
    if (!nonnegative_only) dirs.push_back({-1.0});
    return dirs;
  }
  // Lattice directions with components in {-1, 0, 1}, plus planar angles.
  std::vector<int> idx(d, 0);
  const std::size_t total = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(d)));
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    Vec v(d);
    bool zero = true, negative = false;
    for (std::size_t k = 0; k < d; ++k) {
      const int comp = static_cast<int>(c % 3) - 1;
      c /= 3;
      v[k] = comp;
      if (comp != 0) zero = false;
      if (comp < 0) negative = true;
    }
    if (zero) continue;
    if (nonnegative_only && negative) continue;
    dirs.push_back(normalized(v));
  }
  if (d == 2) {
    for (int k = 0; k < 24; ++k) {
      const double a = 6.283185307179586 * k / 24.0;
      Vec v = {std::cos(a), std::sin(a)};
      if (nonnegative_only && (v[0] < 0.0 || v[1] < 0.0)) continue;
      dirs.push_back(v);
    }
  }
  return dirs;
}

}  // namespace detail

/// True when some admissible test function integrates strictly larger against
/// mu than against nu, i.e. the pair is certainly NOT ordered. A false return
/// is inconclusive (the family is finite).
inline bool brute_force_violation(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  order::Relation rel) {
  constexpr double kTol = 1e-9;
  auto integrate = [](const DiscreteMeasure& m, const auto& f) {
    double s = 0.0;
    for (const Atom& a : m.atoms()) s += a.mass * f(a.point);
    return s;
  };

  if (rel == order::Relation::cx) {
    // Constants +-1 and pure moments catch mass and barycenter mismatches.
    const double dm = mu.total_mass() - nu.total_mass();
    if (std::abs(dm) > kTol) return true;
    if (!mu.empty() && !nu.empty()) {
      for (std::size_t k = 0; k < mu.dimension(); ++k) {
        double mom = 0.0;
        for (const Atom& a : mu.atoms()) mom += a.mass * a.point[k];
        for (const Atom& a : nu.atoms()) mom -= a.mass * a.point[k];
        if (std::abs(mom) > kTol) return true;
      }
    }
  } else if (mu.total_mass() > nu.total_mass() + kTol) {
    return true;  // phi = 1 is admissible for cxp and cxpi
  }

  const bool nonneg_dirs = rel == order::Relation::cxpi;
  for (const Vec& g : detail::oracle_directions(mu.dimension(), nonneg_dirs)) {
    for (double mag : {0.5, 1.0, 2.0, 4.0}) {
      const Vec gg = scaled(g, mag);
      // Hinges max(0, <g,x> - a) kink exactly at support projections.
      std::vector<double> anchors;
      for (const Atom& a : mu.atoms()) anchors.push_back(dot(gg, a.point));
      for (const Atom& a : nu.atoms()) anchors.push_back(dot(gg, a.point));
      std::sort(anchors.begin(), anchors.end());
      std::vector<double> offsets(anchors);
      for (std::size_t t = 0; t + 1 < anchors.size(); ++t)
        offsets.push_back(0.5 * (anchors[t] + anchors[t + 1]));
      if (!anchors.empty()) {
        offsets.push_back(anchors.front() - 1.0);
        offsets.push_back(anchors.back() + 1.0);
      }
      for (double a : offsets) {
        auto hinge = [&](const Vec& x) { return std::max(0.0, dot(gg, x) - a); };
        if (integrate(mu, hinge) > integrate(nu, hinge) + kTol) return true;
      }
    }
  }
  return false;
}

}  // namespace convexorder::testsupport
