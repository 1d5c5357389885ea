#include "convexorder/measure.hpp"

#include <cmath>

#include "doctest.h"

#include "convexorder/errors.hpp"
#include "convexorder/rng.hpp"

using namespace convexorder;

namespace {

DiscreteMeasure symmetric_pair() {
  return DiscreteMeasure(2, {{{-1.0, 0.0}, 0.5}, {{1.0, 0.0}, 0.5}});
}

DiscreteMeasure four_corners() {
  return DiscreteMeasure(2, {{{-1.0, -1.0}, 0.25},
                             {{-1.0, 1.0}, 0.25},
                             {{1.0, -1.0}, 0.25},
                             {{1.0, 1.0}, 0.25}});
}

DiscreteMeasure random_measure(rng::CounterRng& gen, std::size_t d, std::size_t n) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < n; ++i) {
    Vec p(d);
    for (double& c : p) c = 2.0 * gen.next_unit() - 1.0;
    atoms.push_back({p, gen.next_unit()});
  }
  return DiscreteMeasure(d, atoms);
}

Vec random_unit(rng::CounterRng& gen, std::size_t d) {
  Vec u(d);
  double n = 0.0;
  do {
    for (double& c : u) c = gen.next_normal();
    n = norm2(u);
  } while (n < 1e-9);
  return scaled(u, 1.0 / n);
}

}  // namespace

TEST_CASE("total mass") {
  CHECK(DiscreteMeasure(2, {}).total_mass() == 0.0);
  CHECK(symmetric_pair().total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(four_corners().total_mass() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("barycenter") {
  DiscreteMeasure single(2, {{{3.0, 4.0}, 1.0}});
  CHECK(single.barycenter() == Vec{3.0, 4.0});

  const Vec b = symmetric_pair().barycenter();
  CHECK(std::abs(b[0]) < 1e-15);
  CHECK(std::abs(b[1]) < 1e-15);

  // Second planar example: 1/3 at (1/2, 0) plus 2/3 at (-1/4, 0) is centered.
  DiscreteMeasure mu2(2, {{{0.5, 0.0}, 1.0 / 3.0}, {{-0.25, 0.0}, 2.0 / 3.0}});
  const Vec b2 = mu2.barycenter();
  CHECK(std::abs(b2[0]) < 1e-15);
  CHECK(std::abs(b2[1]) < 1e-15);

  CHECK_THROWS_AS(DiscreteMeasure(2, {}).barycenter(), ZeroMass);
}

TEST_CASE("project") {
  DiscreteMeasure origin(2, {{{0.0, 0.0}, 1.0}});
  auto p = project(origin, {1.0, 0.0});
  REQUIRE(p.breakpoints.size() == 1);
  CHECK(p.breakpoints[0] == 0.0);
  CHECK(p.masses[0] == 1.0);

  auto corners = project(four_corners(), {1.0, 0.0});
  REQUIRE(corners.breakpoints.size() == 2);
  CHECK(corners.breakpoints[0] == -1.0);
  CHECK(corners.breakpoints[1] == 1.0);
  CHECK(corners.masses[0] == doctest::Approx(0.5));
  CHECK(corners.masses[1] == doctest::Approx(0.5));

  auto collapsed = project(symmetric_pair(), {0.0, 1.0});
  REQUIRE(collapsed.breakpoints.size() == 1);
  CHECK(collapsed.breakpoints[0] == 0.0);
  CHECK(collapsed.masses[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(project(origin, {2.0, 0.0}), BadDirection);
}

TEST_CASE("survival examples") {
  DiscreteMeasure origin(2, {{{0.0, 0.0}, 1.0}});
  CHECK(survival(origin, {1.0, 0.0}, 1.0) == 0.0);
  CHECK(survival(symmetric_pair(), {1.0, 0.0}, -1.0) == doctest::Approx(1.0));
  CHECK(survival(four_corners(), {0.0, 1.0}, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("survival is convex, nonincreasing, and vanishes beyond the support") {
  rng::CounterRng gen(0xbeef);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + gen.next_u64() % 3;
    DiscreteMeasure m = random_measure(gen, d, 1 + gen.next_u64() % 6);
    const Vec u = random_unit(gen, d);

    double maxproj = -1e300;
    for (const Atom& a : m.atoms()) maxproj = std::max(maxproj, dot(u, a.point));

    double prev = 1e300;
    for (int k = -20; k <= 20; ++k) {
      const double a = 0.2 * k;
      const double s = survival(m, u, a);
      CHECK(s <= prev + 1e-12);  // nonincreasing
      prev = s;
      const double mid = survival(m, u, a + 0.1);
      CHECK(2.0 * mid <= s + survival(m, u, a + 0.2) + 1e-12);  // midpoint convex
      if (a >= maxproj) CHECK(s == 0.0);
      if (!m.empty() && a < maxproj) CHECK(s > 0.0);
    }
  }
}

TEST_CASE("projection preserves mass and reproduces survival") {
  rng::CounterRng gen(0xf00d);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + gen.next_u64() % 3;
    DiscreteMeasure m = random_measure(gen, d, 1 + gen.next_u64() % 6);
    const Vec u = random_unit(gen, d);
    const ProjectedMeasure p = project(m, u);
    CHECK(p.total_mass() == doctest::Approx(m.total_mass()).epsilon(1e-12));
    for (int k = 0; k < 10; ++k) {
      const double a = 3.0 * (gen.next_unit() - 0.5);
      CHECK(p.survival(a) == doctest::Approx(survival(m, u, a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("canonicalization") {
  // Coincident points merge, zero masses drop, atoms sort lexicographically.
  DiscreteMeasure m(2, {{{1.0, 0.0}, 0.25},
                        {{1.0, 1e-13}, 0.25},
                        {{-1.0, 0.0}, 0.5},
                        {{2.0, 2.0}, 0.0}});
  REQUIRE(m.size() == 2);
  CHECK(m.atoms()[0].point == Vec{-1.0, 0.0});
  CHECK(m.atoms()[1].mass == doctest::Approx(0.5));
  CHECK(m.mass_at({1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(m.mass_at({5.0, 5.0}) == 0.0);

  CHECK_THROWS_AS(DiscreteMeasure(2, {{{0.0, 0.0}, -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure(2, {{{0.0}, 1.0}}), DimensionMismatch);
}
