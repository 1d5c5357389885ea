#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "convexorder/linalg.hpp"
#include "convexorder/measure.hpp"
#include "convexorder/order.hpp"
#include "convexorder/psd.hpp"

namespace convexorder::sim {

/// Piecewise-constant predictable strategy against an n-dimensional Brownian
/// motion and n compensated point processes: on interval k the diffusion
/// loading is the d x n matrix diffusion[k], driver j jumps by column j of
/// jumps[k] with intensity intensities[k][j]. Stochastic integrals of such
/// integrands are exactly simulable interval by interval.
struct StrategySpec {
  std::size_t dim = 0;       // d
  std::size_t drivers = 0;   // n
  std::vector<double> grid;  // 0 = t_0 < ... < t_m = horizon
  std::vector<Matrix> diffusion;
  std::vector<Matrix> jumps;
  std::vector<Vec> intensities;

  void validate() const;  // throws BadSpec
};

/// Compensated Poisson random measure with a finite (discretized) mark set:
/// mark i fires at rate mark_rates[i]; during interval k an event on mark i
/// displaces the state by jump_values[k][i] in R^d.
struct PoissonMeasureSpec {
  std::size_t dim = 0;
  std::size_t drivers = 0;
  std::vector<double> grid;
  std::vector<Matrix> diffusion;
  std::vector<double> mark_rates;
  std::vector<std::vector<Vec>> jump_values;

  void validate() const;
};

using SimSpec = std::variant<StrategySpec, PoissonMeasureSpec>;

std::size_t spec_dim(const SimSpec& s);
double spec_horizon(const SimSpec& s);

/// Row-major n_paths x dim matrix of terminal values.
struct SampleMatrix {
  std::size_t paths = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  const double* row(std::size_t p) const { return data.data() + p * dim; }
};

/// Exact per-interval simulation with one counter-based stream per path, so
/// identical seeds give bit-identical samples under any thread count.
SampleMatrix simulate_terminal(const SimSpec& spec, std::size_t n_paths, std::uint64_t seed);

/// One member of the convex test battery. `nondecreasing` marks membership in
/// the sub-battery valid for cxpi hypotheses.
struct TestFunction {
  std::string name;
  bool nondecreasing = false;
  std::function<double(const double*, std::size_t)> eval;
};

/// Frozen battery of convex test functions: coordinate hinges both ways,
/// norms, random-direction hinges, guarded exponentials of the norm, and
/// random psd quadratics. Deterministic for fixed (d, scale).
std::vector<TestFunction> convex_battery(std::size_t d, double scale);

struct IntervalReport {
  double t0 = 0.0, t1 = 0.0;
  bool psd_ok = false;
  bool jumps_ok = false;
  bool ok() const { return psd_ok && jumps_ok; }
};

/// Checks the comparison hypotheses interval by interval on the common grid
/// refinement: diffusion covariance densities A A^T in psd order and jump
/// measures (intensity-weighted columns, zero jumps excluded) in the cxp or
/// cxpi order.
std::vector<IntervalReport> verify_hypotheses(const SimSpec& f, const SimSpec& g,
                                              order::Relation rel);

enum class Decision { Consistent, Violation, Inconclusive };

struct CompareRow {
  std::string phi;
  double mean_f = 0.0, se_f = 0.0;
  double mean_g = 0.0, se_g = 0.0;
  Decision decision = Decision::Consistent;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<IntervalReport> hypotheses;
  bool hypotheses_ok = false;
  bool any_violation = false;
};

/// Monte Carlo comparison of E[phi(F)] vs E[phi(G)] across the battery, with
/// independent driver streams for the two sides. A violation is declared only
/// beyond 4 combined standard errors. Unless `force` is set, failing
/// hypotheses abort with BadSpec before any sampling.
CompareReport compare(const SimSpec& f, const SimSpec& g, order::Relation rel,
                      std::size_t n_paths, std::uint64_t seed, bool force = false);

/// Closed-form Gaussian check: (Tr(Q Sigma), Tr(Q SigmaTilde), lhs <= rhs).
/// Throws NotPsd unless all three matrices are psd.
std::tuple<double, double, bool> gaussian_exact(const psd::SymMatrix& sigma,
                                                const psd::SymMatrix& sigma_tilde,
                                                const psd::SymMatrix& q);

struct DeviationRow {
  double x = 0.0;
  double bound = 1.0;
  double lambda_at_min = 0.0;
  std::optional<double> empirical_tail;
  std::optional<double> tail_se;
};

/// Laplace-transform tail bound min_lambda E[e^{lambda(||G|| - x)}], clipped
/// to [0, 1], evaluated over a lambda grid; optionally paired with the
/// empirical tail of independent F samples.
std::vector<DeviationRow> deviation_bound(const SampleMatrix& g_samples,
                                          const std::vector<double>& x_grid,
                                          const std::vector<double>& lambda_grid,
                                          const SampleMatrix* f_samples = nullptr);

}  // namespace convexorder::sim
