#include "convexorder/order.hpp"

#include <cmath>

#include "doctest.h"

#include "convexorder/errors.hpp"
#include "convexorder/sim.hpp"
#include "support/instances.hpp"

using namespace convexorder;
using order::Relation;
using testsupport::brute_force_violation;
using testsupport::make_instance;

namespace {

const double kSqrt3Half = std::sqrt(3.0) / 2.0;

DiscreteMeasure example1_mu() {
  return DiscreteMeasure(2, {{{-1.0, 0.0}, 0.5}, {{1.0, 0.0}, 0.5}});
}

DiscreteMeasure example1_nu() {
  return DiscreteMeasure(2, {{{-1.0, -1.0}, 0.25},
                             {{-1.0, 1.0}, 0.25},
                             {{1.0, -1.0}, 0.25},
                             {{1.0, 1.0}, 0.25}});
}

DiscreteMeasure example2_mu() {
  return DiscreteMeasure(2, {{{0.5, 0.0}, 1.0 / 3.0}, {{-0.25, 0.0}, 2.0 / 3.0}});
}

// Cube roots of unity scaled to the unit circle.
DiscreteMeasure example2_nu() {
  return DiscreteMeasure(2, {{{1.0, 0.0}, 1.0 / 3.0},
                             {{-0.5, kSqrt3Half}, 1.0 / 3.0},
                             {{-0.5, -kSqrt3Half}, 1.0 / 3.0}});
}

double coupling_entry(const order::Coupling& c, const Vec& row, const Vec& col) {
  for (std::size_t i = 0; i < c.row_points.size(); ++i) {
    if (norm_inf(sub(c.row_points[i], row)) > 1e-9) continue;
    for (std::size_t j = 0; j < c.col_points.size(); ++j)
      if (norm_inf(sub(c.col_points[j], col)) <= 1e-9) return c.pi[i][j];
  }
  return -1.0;
}

}  // namespace

TEST_CASE("reflexivity gives the identity coupling") {
  const DiscreteMeasure mu = example1_mu();
  const order::Verdict v = order::check_order(mu, mu, Relation::cx);
  REQUIRE(v.ordered);
  REQUIRE(v.coupling.has_value());
  CHECK(coupling_entry(*v.coupling, {-1.0, 0.0}, {-1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(coupling_entry(*v.coupling, {1.0, 0.0}, {1.0, 0.0}) == doctest::Approx(0.5));
  CHECK_FALSE(v.separator.has_value());
}

TEST_CASE("planar example 1: two points against the square corners") {
  const order::Verdict v = order::check_order(example1_mu(), example1_nu(), Relation::cx);
  REQUIRE(v.ordered);
  // The coupling is unique: each mu atom splits over its vertical pair.
  const order::Coupling& c = *v.coupling;
  CHECK(coupling_entry(c, {-1.0, 0.0}, {-1.0, 1.0}) == doctest::Approx(0.25));
  CHECK(coupling_entry(c, {-1.0, 0.0}, {-1.0, -1.0}) == doctest::Approx(0.25));
  CHECK(coupling_entry(c, {-1.0, 0.0}, {1.0, 1.0}) == doctest::Approx(0.0));
  CHECK(coupling_entry(c, {1.0, 0.0}, {1.0, 1.0}) == doctest::Approx(0.25));
  CHECK(order::validate_coupling(example1_mu(), example1_nu(), Relation::cx, c).ok);
}

TEST_CASE("cxp counterexample in one dimension") {
  const DiscreteMeasure mu(1, {{{0.0}, 1.0}});
  const DiscreteMeasure nu(1, {{{-1.0}, 0.5}, {{2.0}, 0.5}});

  // Oracle first: the hinge x -> max(0, 1.5 - x) integrates to 1.5 against mu
  // and 1.25 against nu, so the pair cannot be cxp-ordered.
  double lhs = 0.0, rhs = 0.0;
  auto hinge = [](double x) { return std::max(0.0, 1.5 - x); };
  for (const Atom& a : mu.atoms()) lhs += a.mass * hinge(a.point[0]);
  for (const Atom& a : nu.atoms()) rhs += a.mass * hinge(a.point[0]);
  CHECK(lhs == doctest::Approx(1.5));
  CHECK(rhs == doctest::Approx(1.25));
  CHECK(brute_force_violation(mu, nu, Relation::cxp));

  const order::Verdict v = order::check_order(mu, nu, Relation::cxp);
  REQUIRE_FALSE(v.ordered);
  REQUIRE(v.separator.has_value());
  CHECK(v.separator->gap >= 1.0 / 6.0 - 1e-9);
  CHECK(order::validate_separator(mu, nu, Relation::cxp, *v.separator).ok);
  CHECK(order::validate_separator_exact(mu, nu, Relation::cxp, *v.separator));
  CHECK_FALSE(order::build_coupling(mu, nu, Relation::cxp).has_value());
}

TEST_CASE("cxpi orders shifted Diracs that cxp rejects") {
  const DiscreteMeasure mu(1, {{{1.0}, 1.0}});
  const DiscreteMeasure nu(1, {{{2.0}, 1.0}});
  CHECK(order::check_order(mu, nu, Relation::cxpi).ordered);
  const order::Verdict v = order::check_order(mu, nu, Relation::cxp);
  REQUIRE_FALSE(v.ordered);
  CHECK(v.separator->gap > 0.0);

  const DiscreteMeasure neg(1, {{{-1.0}, 1.0}});
  CHECK_THROWS_AS(order::check_order(neg, nu, Relation::cxpi), OrthantViolation);
}

TEST_CASE("planar example 2: barycentric coupling is reproduced exactly") {
  const auto c = order::build_coupling(example2_mu(), example2_nu(), Relation::cx);
  REQUIRE(c.has_value());
  const Vec top = {1.0, 0.0}, left_up = {-0.5, kSqrt3Half}, left_dn = {-0.5, -kSqrt3Half};
  CHECK(coupling_entry(*c, {0.5, 0.0}, top) == doctest::Approx(2.0 / 9.0).epsilon(1e-9));
  CHECK(coupling_entry(*c, {0.5, 0.0}, left_up) == doctest::Approx(1.0 / 18.0).epsilon(1e-9));
  CHECK(coupling_entry(*c, {0.5, 0.0}, left_dn) == doctest::Approx(1.0 / 18.0).epsilon(1e-9));
  CHECK(coupling_entry(*c, {-0.25, 0.0}, top) == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
  CHECK(coupling_entry(*c, {-0.25, 0.0}, left_up) == doctest::Approx(5.0 / 18.0).epsilon(1e-9));
  CHECK(coupling_entry(*c, {-0.25, 0.0}, left_dn) == doctest::Approx(5.0 / 18.0).epsilon(1e-9));

  // The same pair admits no separator.
  CHECK_FALSE(order::find_separator(example2_mu(), example2_nu(), Relation::cxp).has_value());
}

TEST_CASE("mass excess forbids any coupling") {
  const DiscreteMeasure mu(1, {{{0.0}, 2.0}});
  const DiscreteMeasure nu(1, {{{-1.0}, 0.5}, {{1.0}, 0.5}});
  for (Relation rel : {Relation::cx, Relation::cxp}) {
    CHECK_FALSE(order::build_coupling(mu, nu, rel).has_value());
  }
}

TEST_CASE("point mass against a simplex: barycentric weights against column bounds") {
  const DiscreteMeasure nu = example2_nu();
  // cx pins the column sums to the nu masses, so a unit point mass is
  // dominated exactly when it sits at the nu barycenter.
  const DiscreteMeasure centered(2, {{nu.barycenter(), 1.0}});
  CHECK(order::build_coupling(centered, nu, Relation::cx).has_value());
  const DiscreteMeasure off(2, {{{0.05, 0.1}, 1.0}});
  CHECK_FALSE(order::build_coupling(off, nu, Relation::cx).has_value());

  // With slack column bounds (cxp) and roomy masses, any strictly interior
  // point is dominated: the barycentric weights fit under the bounds.
  const DiscreteMeasure roomy(2, {{{1.0, 0.0}, 1.0},
                                  {{-0.5, kSqrt3Half}, 1.0},
                                  {{-0.5, -kSqrt3Half}, 1.0}});
  CHECK(order::build_coupling(off, roomy, Relation::cxp).has_value());
}

TEST_CASE("find_separator returns None on equality") {
  const DiscreteMeasure mu = example1_mu();
  CHECK_FALSE(order::find_separator(mu, mu, Relation::cx).has_value());
}

TEST_CASE("support hull pre-check") {
  CHECK(order::check_support_hull(example1_mu(), example1_nu()));
  const DiscreteMeasure outside(2, {{{2.0, 0.0}, 1.0}});
  CHECK_FALSE(order::check_support_hull(outside, example1_nu()));
  const DiscreteMeasure vertex(2, {{{1.0, 1.0}, 1.0}});
  CHECK(order::check_support_hull(vertex, example1_nu()));
}

TEST_CASE("mixed local condition") {
  using psd::SymMatrix;
  const SymMatrix i2 = SymMatrix::identity(2);
  const SymMatrix zero(2, 0.0);
  const DiscreteMeasure none(2, {});
  CHECK(order::check_mixed_local_condition(i2, i2, i2, none, none));
  CHECK(order::check_mixed_local_condition(i2, zero, i2, none, none));

  const DiscreteMeasure two_e1(2, {{{1.0, 0.0}, 2.0}});
  const DiscreteMeasure one_e1(2, {{{1.0, 0.0}, 1.0}});
  // Tr(I*I) = 2 on the left; jump term contributes mass * |x|^2.
  CHECK(order::check_mixed_local_condition(i2, i2, zero, none, two_e1));
  CHECK_FALSE(order::check_mixed_local_condition(i2, i2, zero, none, one_e1));
}

TEST_CASE("kernel: identity on equal measures") {
  const DiscreteMeasure mu = example1_mu();
  const order::Kernel k = order::build_kernel_iterative(mu, mu);
  CHECK(k.rounds == 0);
  CHECK_FALSE(k.used_lp_fallback);
  CHECK(k.transport_residual_l1 <= 1e-6);
  CHECK(k.max_row_barycenter_residual <= 1e-8);
}

TEST_CASE("kernel: example 1 splits each atom onto its vertical pair") {
  const order::Kernel k = order::build_kernel_iterative(example1_mu(), example1_nu());
  CHECK(k.transport_residual_l1 <= 1e-6);
  CHECK(k.max_row_barycenter_residual <= 1e-8);
  // Row for (-1, 0): half mass each onto (-1, +-1), up to the 1e-6 tail.
  for (std::size_t i = 0; i < k.row_points.size(); ++i) {
    const double x0 = k.row_points[i][0];
    for (std::size_t j = 0; j < k.col_points.size(); ++j) {
      const Vec& col = k.col_points[j];
      if (std::abs(col[1]) > 0.5) {  // a corner
        const double expected = std::abs(col[0] - x0) < 1e-9 ? 0.5 : 0.0;
        CHECK(std::abs(k.weights[i][j] - expected) <= 2e-6);
      }
    }
  }
}

TEST_CASE("kernel: example 2 rows match the normalized coupling") {
  const order::Kernel k = order::build_kernel_iterative(example2_mu(), example2_nu());
  CHECK(k.transport_residual_l1 <= 1e-6);
  CHECK(k.max_row_barycenter_residual <= 1e-8);
  const Vec top = {1.0, 0.0};
  for (std::size_t i = 0; i < k.row_points.size(); ++i) {
    const bool is_half = std::abs(k.row_points[i][0] - 0.5) < 1e-9;
    for (std::size_t j = 0; j < k.col_points.size(); ++j) {
      if (norm_inf(sub(k.col_points[j], top)) <= 1e-9) {
        const double expected = is_half ? 2.0 / 3.0 : 1.0 / 6.0;
        CHECK(std::abs(k.weights[i][j] - expected) <= 2e-6);
      }
    }
  }
}

TEST_CASE("kernel requires cx ordering") {
  const DiscreteMeasure mu(1, {{{0.0}, 1.0}});
  const DiscreteMeasure nu(1, {{{-1.0}, 0.5}, {{2.0}, 0.5}});
  CHECK_THROWS_AS(order::build_kernel_iterative(mu, nu), Error);
}

TEST_CASE("near-degenerate instances settle exactly, ties favor feasibility") {
  // Barycenter off by 1e-7: genuinely not cx-ordered, margin near tolerance.
  const DiscreteMeasure mu(1, {{{0.5 + 1e-7}, 1.0}});
  const DiscreteMeasure nu(1, {{{0.0}, 0.5}, {{1.0}, 0.5}});
  const order::Verdict v = order::check_order(mu, nu, Relation::cx);
  CHECK((v.coupling.has_value() != v.separator.has_value()));
  if (!v.ordered) {
    CHECK(order::validate_separator_exact(mu, nu, Relation::cx, *v.separator));
  }

  // Off by 3e-8: inside the LP tolerance band either way; some certificate
  // must still be produced and must validate.
  const DiscreteMeasure mu2(1, {{{0.5 + 3e-8}, 1.0}});
  const order::Verdict v2 = order::check_order(mu2, nu, Relation::cx);
  CHECK((v2.coupling.has_value() != v2.separator.has_value()));
  if (v2.coupling) CHECK(order::validate_coupling(mu2, nu, Relation::cx, *v2.coupling).ok);
}

TEST_CASE("random suite: primal-dual exclusivity and oracle agreement") {
  int ordered_count = 0, separated_count = 0;
  for (std::uint64_t idx = 0; idx < 120; ++idx) {
    const testsupport::Instance inst = make_instance(0xc0de, idx);
    for (Relation rel : {Relation::cx, Relation::cxp}) {
      const auto coupling = order::build_coupling(inst.mu, inst.nu, rel);
      const auto separator = order::find_separator(inst.mu, inst.nu, rel);
      // Exactly one certificate.
      CHECK(coupling.has_value() != separator.has_value());
      if (coupling) {
        ++ordered_count;
        CHECK(order::validate_coupling(inst.mu, inst.nu, rel, *coupling).ok);
        CHECK(order::validate_coupling_exact(inst.mu, inst.nu, rel, *coupling));
        // The brute-force function family must not find any violation.
        CHECK_FALSE(brute_force_violation(inst.mu, inst.nu, rel));
      } else {
        ++separated_count;
        CHECK(order::validate_separator(inst.mu, inst.nu, rel, *separator).ok);
        CHECK(order::validate_separator_exact(inst.mu, inst.nu, rel, *separator));
      }
    }
  }
  CHECK(ordered_count > 30);
  CHECK(separated_count > 30);
}

TEST_CASE("random suite: the equal-mass reduction of cx to cxp") {
  for (std::uint64_t idx = 0; idx < 120; ++idx) {
    const testsupport::Instance inst = make_instance(0xdead, idx);
    const bool cx = order::check_order(inst.mu, inst.nu, Relation::cx).ordered;
    const bool cxp = order::check_order(inst.mu, inst.nu, Relation::cxp).ordered;
    const bool equal_mass = std::abs(inst.mu.total_mass() - inst.nu.total_mass()) <= 1e-12;
    CHECK(cx == (cxp && equal_mass));
    if (cx) {
      // cx-ordered pairs share their barycenter.
      CHECK(norm_inf(sub(inst.mu.barycenter(), inst.nu.barycenter())) <= 1e-9);
    }
  }
}

TEST_CASE("cx implies cxpi for measures in the nonnegative orthant") {
  // The cxpi test-function cone is smaller than the cx cone, so cx-ordered
  // pairs shifted into R_+^d stay cxpi-ordered.
  int checked = 0;
  for (std::uint64_t idx = 0; idx < 40; ++idx) {
    const testsupport::Instance inst = make_instance(0x0f5e7, 4 * idx + 1);  // grouped kind
    auto shift = [](const DiscreteMeasure& m) {
      std::vector<Atom> atoms;
      for (const Atom& a : m.atoms()) {
        Vec p(a.point);
        for (double& c : p) c += 2.0;  // supports started inside [-1.3, 1.3]
        atoms.push_back({p, a.mass});
      }
      return DiscreteMeasure(m.dimension(), atoms);
    };
    const DiscreteMeasure mu = shift(inst.mu), nu = shift(inst.nu);
    if (!order::check_order(mu, nu, Relation::cx).ordered) continue;
    ++checked;
    CHECK(order::check_order(mu, nu, Relation::cxpi).ordered);
  }
  CHECK(checked > 10);
}

TEST_CASE("cxp is monotone in the dominating measure") {
  for (std::uint64_t idx = 0; idx < 40; ++idx) {
    const testsupport::Instance inst = make_instance(0xadd, 4 * idx + 1);  // grouped kind
    if (!order::check_order(inst.mu, inst.nu, Relation::cxp).ordered) continue;
    std::vector<Atom> enlarged(inst.nu.atoms().begin(), inst.nu.atoms().end());
    Vec extra(inst.nu.dimension(), 0.25);
    enlarged.push_back({extra, 0.5});
    const DiscreteMeasure bigger(inst.nu.dimension(), enlarged);
    CHECK(order::check_order(inst.mu, bigger, Relation::cxp).ordered);
  }
}

TEST_CASE("couplings are Jensen-consistent with the convex battery") {
  for (std::uint64_t idx = 0; idx < 24; ++idx) {
    const testsupport::Instance inst = make_instance(0x1e4, 4 * idx + 1);
    const auto coupling = order::build_coupling(inst.mu, inst.nu, Relation::cx);
    if (!coupling) continue;
    const auto battery = sim::convex_battery(inst.mu.dimension(), 1.0);
    for (const auto& phi : battery) {
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t i = 0; i < inst.mu.size(); ++i) {
        lhs += inst.mu.atoms()[i].mass *
               phi.eval(inst.mu.atoms()[i].point.data(), inst.mu.dimension());
        for (std::size_t j = 0; j < coupling->col_points.size(); ++j)
          rhs += coupling->pi[i][j] *
                 phi.eval(coupling->col_points[j].data(), inst.mu.dimension());
      }
      CHECK(lhs <= rhs + 1e-8);
    }
  }
}
