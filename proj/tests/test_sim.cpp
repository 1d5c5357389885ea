#include "convexorder/sim.hpp"

#include <cmath>
#include <cstdlib>

#include "doctest.h"

#include "convexorder/errors.hpp"
#include "convexorder/psd.hpp"
#include "convexorder/rng.hpp"

using namespace convexorder;
using order::Relation;

namespace {

sim::StrategySpec one_dim_spec(double a, double j, double lambda, double horizon = 1.0) {
  sim::StrategySpec s;
  s.dim = 1;
  s.drivers = 1;
  s.grid = {0.0, horizon};
  Matrix am(1, 1);
  am(0, 0) = a;
  Matrix jm(1, 1);
  jm(0, 0) = j;
  s.diffusion = {am};
  s.jumps = {jm};
  s.intensities = {{lambda}};
  return s;
}

sim::StrategySpec gaussian_spec(const psd::SymMatrix& sigma, double horizon = 1.0) {
  const psd::SymMatrix root = psd::sqrt_psd(sigma);
  const std::size_t d = sigma.size();
  sim::StrategySpec s;
  s.dim = d;
  s.drivers = d;
  s.grid = {0.0, horizon};
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = root(i, j) / std::sqrt(horizon);
  s.diffusion = {a};
  s.jumps = {Matrix(d, d, 0.0)};
  s.intensities = {Vec(d, 0.0)};
  return s;
}

double sample_mean(const sim::SampleMatrix& m, std::size_t coord) {
  double s = 0.0;
  for (std::size_t p = 0; p < m.paths; ++p) s += m.row(p)[coord];
  return s / static_cast<double>(m.paths);
}

double sample_var(const sim::SampleMatrix& m, std::size_t coord) {
  const double mean = sample_mean(m, coord);
  double s = 0.0;
  for (std::size_t p = 0; p < m.paths; ++p) {
    const double d = m.row(p)[coord] - mean;
    s += d * d;
  }
  return s / static_cast<double>(m.paths - 1);
}

}  // namespace

TEST_CASE("degenerate spec simulates to zero") {
  const sim::StrategySpec s = one_dim_spec(0.0, 0.0, 0.0);
  const sim::SampleMatrix m = sim::simulate_terminal(s, 1000, 1);
  for (std::size_t p = 0; p < m.paths; ++p) CHECK(m.row(p)[0] == 0.0);
}

TEST_CASE("Brownian variance matches the horizon") {
  const sim::SampleMatrix m = sim::simulate_terminal(one_dim_spec(1.0, 0.0, 0.0), 60000, 7);
  CHECK(std::abs(sample_mean(m, 0)) < 0.02);
  CHECK(std::abs(sample_var(m, 0) - 1.0) < 3.0 * std::sqrt(2.0 / 60000.0) + 0.01);
}

TEST_CASE("compensated Poisson variance equals lambda T") {
  const sim::SampleMatrix m = sim::simulate_terminal(one_dim_spec(0.0, 1.0, 1.0), 60000, 9);
  CHECK(std::abs(sample_mean(m, 0)) < 0.03);
  CHECK(std::abs(sample_var(m, 0) - 1.0) < 0.05);
}

TEST_CASE("sample streams are seed-deterministic and thread-count independent") {
  const sim::StrategySpec s = one_dim_spec(0.7, 0.5, 1.5);
  const sim::SampleMatrix a = sim::simulate_terminal(s, 5000, 1234);
  const sim::SampleMatrix b = sim::simulate_terminal(s, 5000, 1234);
  CHECK(a.data == b.data);

  setenv("CONVEX_ORDER_THREADS", "1", 1);
  const sim::SampleMatrix c = sim::simulate_terminal(s, 5000, 1234);
  setenv("CONVEX_ORDER_THREADS", "3", 1);
  const sim::SampleMatrix d = sim::simulate_terminal(s, 5000, 1234);
  unsetenv("CONVEX_ORDER_THREADS");
  CHECK(a.data == c.data);
  CHECK(a.data == d.data);

  const sim::SampleMatrix e = sim::simulate_terminal(s, 5000, 1235);
  CHECK(a.data != e.data);
}

TEST_CASE("battery members are convex; the sub-battery is nondecreasing") {
  for (std::size_t d : {1u, 2u, 3u}) {
    const auto battery = sim::convex_battery(d, 1.0);
    bool has_norm_sq = false;
    for (const auto& phi : battery)
      if (phi.name == "norm_sq") has_norm_sq = true;
    CHECK(has_norm_sq);

    rng::CounterRng gen(0xc0ffee + d);
    for (const auto& phi : battery) {
      for (int trial = 0; trial < 50; ++trial) {
        Vec x(d), y(d), mid(d);
        for (std::size_t k = 0; k < d; ++k) {
          x[k] = 6.0 * (gen.next_unit() - 0.5);
          y[k] = 6.0 * (gen.next_unit() - 0.5);
          mid[k] = 0.5 * (x[k] + y[k]);
        }
        const double lhs = phi.eval(mid.data(), d);
        const double rhs = 0.5 * (phi.eval(x.data(), d) + phi.eval(y.data(), d));
        CHECK(lhs <= rhs + 1e-9);
        if (phi.nondecreasing) {
          Vec up(x);
          for (std::size_t k = 0; k < d; ++k) up[k] += 2.0 * gen.next_unit();
          CHECK(phi.eval(x.data(), d) <= phi.eval(up.data(), d) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("hypothesis checks on matched specs") {
  const sim::StrategySpec s = one_dim_spec(0.5, 1.0, 1.0);
  const auto reports = sim::verify_hypotheses(s, s, Relation::cxp);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].ok());
}

TEST_CASE("intensity growth along a fixed jump column is cxp-admissible") {
  const sim::StrategySpec f = one_dim_spec(0.0, 1.0, 1.0);
  const sim::StrategySpec g = one_dim_spec(0.0, 1.0, 2.0);
  const auto reports = sim::verify_hypotheses(f, g, Relation::cxp);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].ok());
  // The reverse direction shrinks intensity and must fail.
  const auto reverse = sim::verify_hypotheses(g, f, Relation::cxp);
  CHECK_FALSE(reverse[0].ok());
}

TEST_CASE("scaled-up nonnegative jumps need cxpi, not cxp") {
  sim::StrategySpec f, g;
  f.dim = g.dim = 2;
  f.drivers = g.drivers = 1;
  f.grid = g.grid = {0.0, 1.0};
  f.diffusion = {Matrix(2, 1, 0.0)};
  g.diffusion = {Matrix(2, 1, 0.0)};
  Matrix jf(2, 1), jg(2, 1);
  jf(0, 0) = 1.0;
  jf(1, 0) = 1.0;
  jg(0, 0) = 2.0;
  jg(1, 0) = 2.0;
  f.jumps = {jf};
  g.jumps = {jg};
  f.intensities = {{1.0}};
  g.intensities = {{1.0}};

  CHECK_FALSE(sim::verify_hypotheses(f, g, Relation::cxp)[0].ok());
  CHECK(sim::verify_hypotheses(f, g, Relation::cxpi)[0].ok());
}

TEST_CASE("grid refinement aligns mismatched grids") {
  sim::StrategySpec f = one_dim_spec(0.5, 1.0, 1.0);
  sim::StrategySpec g = one_dim_spec(0.7, 1.0, 2.0);
  g.grid = {0.0, 0.25, 1.0};
  g.diffusion.push_back(g.diffusion[0]);
  g.jumps.push_back(g.jumps[0]);
  g.intensities.push_back(g.intensities[0]);
  const auto reports = sim::verify_hypotheses(f, g, Relation::cxp);
  CHECK(reports.size() == 2);
  for (const auto& r : reports) CHECK(r.ok());

  sim::StrategySpec h = one_dim_spec(0.5, 1.0, 1.0, 2.0);
  CHECK_THROWS_AS(sim::verify_hypotheses(f, h, Relation::cxp), GridMismatch);
}

TEST_CASE("identical specs never show a violation") {
  const sim::StrategySpec s = one_dim_spec(0.5, 1.0, 1.0);
  const sim::CompareReport rep = sim::compare(s, s, Relation::cxp, 20000, 99);
  CHECK(rep.hypotheses_ok);
  CHECK_FALSE(rep.any_violation);
}

TEST_CASE("Poisson intensity doubling shows the variance gap") {
  const sim::CompareReport rep = sim::compare(one_dim_spec(0.0, 1.0, 1.0),
                                              one_dim_spec(0.0, 1.0, 2.0), Relation::cxp,
                                              100000, 4242);
  CHECK_FALSE(rep.any_violation);
  for (const auto& row : rep.rows) {
    if (row.phi == "norm_sq") {
      CHECK(row.mean_f == doctest::Approx(1.0).epsilon(0.05));
      CHECK(row.mean_g == doctest::Approx(2.0).epsilon(0.05));
    }
  }
}

TEST_CASE("Gaussian covariance growth shows the trace gap") {
  const psd::SymMatrix sigma = psd::SymMatrix::diagonal({1.0, 0.0});
  const psd::SymMatrix sigma_tilde = psd::SymMatrix::identity(2);
  const sim::CompareReport rep = sim::compare(gaussian_spec(sigma), gaussian_spec(sigma_tilde),
                                              Relation::cxp, 100000, 31337);
  CHECK(rep.hypotheses_ok);
  CHECK_FALSE(rep.any_violation);
  for (const auto& row : rep.rows) {
    if (row.phi == "norm_sq") {
      CHECK(row.mean_f == doctest::Approx(1.0).epsilon(0.05));
      CHECK(row.mean_g == doctest::Approx(2.0).epsilon(0.05));
    }
  }
}

TEST_CASE("the psd-violating control is refused, then flagged under force") {
  const psd::SymMatrix big = psd::SymMatrix::diagonal({2.0, 2.0});
  const psd::SymMatrix small = psd::SymMatrix::identity(2);
  CHECK_THROWS_AS(sim::compare(gaussian_spec(big), gaussian_spec(small), Relation::cxp, 1000, 5),
                  BadSpec);
  const sim::CompareReport rep =
      sim::compare(gaussian_spec(big), gaussian_spec(small), Relation::cxp, 50000, 5, true);
  CHECK_FALSE(rep.hypotheses_ok);
  CHECK(rep.any_violation);
}

TEST_CASE("compensated integrals are mean zero within four standard errors") {
  const sim::StrategySpec s = one_dim_spec(0.6, 0.8, 1.3);
  const sim::SampleMatrix m = sim::simulate_terminal(s, 100000, 2024);
  const double mean = sample_mean(m, 0);
  const double se = std::sqrt(sample_var(m, 0) / static_cast<double>(m.paths));
  CHECK(std::abs(mean) <= 4.0 * se);
}

TEST_CASE("gaussian_exact trace comparison") {
  using psd::SymMatrix;
  const SymMatrix i2 = SymMatrix::identity(2);
  const SymMatrix z2(2, 0.0);

  auto [a, b, ok] = sim::gaussian_exact(i2, i2, i2);
  CHECK(a == b);
  CHECK(ok);

  auto [a2, b2, ok2] = sim::gaussian_exact(z2, i2, i2);
  CHECK(a2 == 0.0);
  CHECK(b2 == doctest::Approx(2.0));
  CHECK(ok2);

  auto [a3, b3, ok3] = sim::gaussian_exact(SymMatrix::diagonal({1.0, 0.0}), i2, i2);
  CHECK(a3 == doctest::Approx(1.0));
  CHECK(b3 == doctest::Approx(2.0));
  CHECK(ok3);

  CHECK_THROWS_AS(sim::gaussian_exact(SymMatrix::diagonal({-1.0, 0.0}), i2, i2), NotPsd);
}

TEST_CASE("deviation bounds") {
  // x = 0: every exponential term is >= 1, so the clipped bound is 1.
  sim::SampleMatrix zeros;
  zeros.paths = 100;
  zeros.dim = 1;
  zeros.data.assign(100, 0.0);
  const std::vector<double> lambdas = {0.1, 0.5, 1.0, 2.0};
  auto rows = sim::deviation_bound(zeros, {0.0, 1.0}, lambdas);
  CHECK(rows[0].bound == doctest::Approx(1.0));
  // Deterministic zero samples: bound at x = 1 is exp(-lambda_max).
  CHECK(rows[1].bound == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  // Standard normal samples: the bound dominates the tail at x = 3.
  const sim::SampleMatrix g = sim::simulate_terminal(one_dim_spec(1.0, 0.0, 0.0), 100000, 555);
  const sim::SampleMatrix f = sim::simulate_terminal(one_dim_spec(1.0, 0.0, 0.0), 100000, 556);
  auto nrows = sim::deviation_bound(g, {3.0}, {0.5, 1.0, 2.0, 3.0}, &f);
  REQUIRE(nrows.size() == 1);
  CHECK(nrows[0].bound <= 1.0);
  REQUIRE(nrows[0].empirical_tail.has_value());
  CHECK(nrows[0].bound >= *nrows[0].empirical_tail - 4.0 * *nrows[0].tail_se);
  // Two-sided normal tail at 3 is about 0.0027.
  CHECK(*nrows[0].empirical_tail == doctest::Approx(0.0027).epsilon(0.4));
}

TEST_CASE("poisson sampler matches low-order moments, including chunked means") {
  rng::CounterRng gen(0x9090);
  for (double mean : {0.3, 1.0, 4.0, 25.0}) {
    double acc = 0.0, acc2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double v = static_cast<double>(gen.next_poisson(mean));
      acc += v;
      acc2 += v * v;
    }
    const double m1 = acc / n;
    const double var = acc2 / n - m1 * m1;
    CHECK(m1 == doctest::Approx(mean).epsilon(0.02));
    CHECK(var == doctest::Approx(mean).epsilon(0.05));
  }
}
