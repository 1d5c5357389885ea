#include "convexorder/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convexorder/errors.hpp"
#include "convexorder/parallel.hpp"
#include "convexorder/rng.hpp"

namespace convexorder::sim {

namespace {

void validate_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw BadSpec("time grid needs at least two points");
  if (std::abs(grid.front()) > 1e-12) throw BadSpec("time grid must start at 0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw BadSpec("time grid must be strictly increasing");
  for (double t : grid)
    if (!std::isfinite(t)) throw BadSpec("time grid entries must be finite");
}

/// Shared per-interval form: a diffusion loading and a finite jump measure
/// given by (height, rate) pairs.
struct IntervalDynamics {
  double t0 = 0.0, t1 = 0.0;
  const Matrix* diffusion = nullptr;
  std::vector<std::pair<Vec, double>> jump_atoms;  // height in R^d, rate
};

std::vector<IntervalDynamics> lower_spec(const StrategySpec& s) {
  std::vector<IntervalDynamics> out;
  for (std::size_t k = 0; k + 1 < s.grid.size(); ++k) {
    IntervalDynamics iv;
    iv.t0 = s.grid[k];
    iv.t1 = s.grid[k + 1];
    iv.diffusion = &s.diffusion[k];
    for (std::size_t j = 0; j < s.drivers; ++j) {
      const double rate = s.intensities[k][j];
      if (rate <= 0.0) continue;
      iv.jump_atoms.push_back({s.jumps[k].col(j), rate});
    }
    out.push_back(std::move(iv));
  }
  return out;
}

std::vector<IntervalDynamics> lower_spec(const PoissonMeasureSpec& s) {
  std::vector<IntervalDynamics> out;
  for (std::size_t k = 0; k + 1 < s.grid.size(); ++k) {
    IntervalDynamics iv;
    iv.t0 = s.grid[k];
    iv.t1 = s.grid[k + 1];
    iv.diffusion = &s.diffusion[k];
    for (std::size_t i = 0; i < s.mark_rates.size(); ++i) {
      if (s.mark_rates[i] <= 0.0) continue;
      iv.jump_atoms.push_back({s.jump_values[k][i], s.mark_rates[i]});
    }
    out.push_back(std::move(iv));
  }
  return out;
}

std::vector<IntervalDynamics> lower(const SimSpec& spec) {
  return std::visit([](const auto& s) { return lower_spec(s); }, spec);
}

/// Jump measure of an interval per the point-process characteristics:
/// intensity-weighted Dirac atoms at the jump heights, zero heights excluded
/// (a zero jump is no jump).
DiscreteMeasure interval_jump_measure(const IntervalDynamics& iv, std::size_t dim) {
  std::vector<Atom> atoms;
  for (const auto& [height, rate] : iv.jump_atoms) {
    if (norm_inf(height) <= 1e-12) continue;
    atoms.push_back({height, rate});
  }
  return DiscreteMeasure(dim, std::move(atoms));
}

struct Welford {
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double se() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

double vec_norm(const double* x, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

}  // namespace

void StrategySpec::validate() const {
  if (dim == 0) throw BadSpec("strategy: dimension must be positive");
  validate_grid(grid);
  const std::size_t m = grid.size() - 1;
  if (diffusion.size() != m || jumps.size() != m || intensities.size() != m)
    throw BadSpec("strategy: per-interval arrays must match the grid");
  for (std::size_t k = 0; k < m; ++k) {
    if (diffusion[k].rows() != dim || diffusion[k].cols() != drivers)
      throw BadSpec("strategy: diffusion block has wrong shape");
    if (jumps[k].rows() != dim || jumps[k].cols() != drivers)
      throw BadSpec("strategy: jump block has wrong shape");
    if (intensities[k].size() != drivers)
      throw BadSpec("strategy: intensity vector has wrong length");
    for (double r : intensities[k])
      if (!(r >= 0.0) || !std::isfinite(r)) throw BadSpec("strategy: intensities must be >= 0");
  }
}

void PoissonMeasureSpec::validate() const {
  if (dim == 0) throw BadSpec("poisson measure: dimension must be positive");
  validate_grid(grid);
  const std::size_t m = grid.size() - 1;
  if (diffusion.size() != m || jump_values.size() != m)
    throw BadSpec("poisson measure: per-interval arrays must match the grid");
  for (double r : mark_rates)
    if (!(r >= 0.0) || !std::isfinite(r)) throw BadSpec("poisson measure: rates must be >= 0");
  for (std::size_t k = 0; k < m; ++k) {
    if (diffusion[k].rows() != dim || diffusion[k].cols() != drivers)
      throw BadSpec("poisson measure: diffusion block has wrong shape");
    if (jump_values[k].size() != mark_rates.size())
      throw BadSpec("poisson measure: one jump value per mark per interval");
    for (const Vec& v : jump_values[k])
      if (v.size() != dim) throw BadSpec("poisson measure: jump value has wrong dimension");
  }
}

std::size_t spec_dim(const SimSpec& s) {
  return std::visit([](const auto& v) { return v.dim; }, s);
}

double spec_horizon(const SimSpec& s) {
  return std::visit([](const auto& v) { return v.grid.back(); }, s);
}

SampleMatrix simulate_terminal(const SimSpec& spec, std::size_t n_paths, std::uint64_t seed) {
  std::visit([](const auto& s) { s.validate(); }, spec);
  const std::size_t d = spec_dim(spec);
  const std::size_t n_drivers = std::visit([](const auto& s) { return s.drivers; }, spec);
  const std::vector<IntervalDynamics> dyn = lower(spec);

  SampleMatrix out;
  out.paths = n_paths;
  out.dim = d;
  out.data.assign(n_paths * d, 0.0);

  parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      rng::CounterRng gen = rng::CounterRng::stream(seed, 0x70a7, p);
      double* x = out.data.data() + p * d;
      for (const IntervalDynamics& iv : dyn) {
        const double dt = iv.t1 - iv.t0;
        const double sdt = std::sqrt(dt);
        const Matrix& a = *iv.diffusion;
        for (std::size_t j = 0; j < n_drivers; ++j) {
          const double w = sdt * gen.next_normal();
          for (std::size_t i = 0; i < d; ++i) x[i] += a(i, j) * w;
        }
        for (const auto& [height, rate] : iv.jump_atoms) {
          const double mean = rate * dt;
          const double count = static_cast<double>(gen.next_poisson(mean));
          const double centered = count - mean;
          for (std::size_t i = 0; i < d; ++i) x[i] += height[i] * centered;
        }
      }
    }
  });
  return out;
}

std::vector<TestFunction> convex_battery(std::size_t d, double scale) {
  std::vector<TestFunction> battery;
  const double s = scale > 0.0 ? scale : 1.0;

  auto add = [&](std::string name, bool nondecreasing,
                 std::function<double(const double*, std::size_t)> f) {
    battery.push_back({std::move(name), nondecreasing, std::move(f)});
  };

  for (std::size_t i = 0; i < d; ++i) {
    for (double c : {0.0, s}) {
      add("hinge_up[x" + std::to_string(i) + "-" + std::to_string(c) + "]", true,
          [i, c](const double* x, std::size_t) { return std::max(0.0, x[i] - c); });
      add("hinge_down[-x" + std::to_string(i) + "-" + std::to_string(c) + "]", false,
          [i, c](const double* x, std::size_t) { return std::max(0.0, -x[i] - c); });
    }
  }

  add("norm", false, [](const double* x, std::size_t dd) { return vec_norm(x, dd); });
  add("norm_sq", false, [](const double* x, std::size_t dd) {
    const double n = vec_norm(x, dd);
    return n * n;
  });

  // Random-direction hinges; positive-orthant directions are nondecreasing.
  rng::CounterRng gen = rng::CounterRng::stream(0xba77e12, d, 0);
  for (int r = 0; r < 3; ++r) {
    Vec u(d);
    double nn = 0.0;
    do {
      for (double& c : u) c = gen.next_normal();
      nn = norm2(u);
    } while (nn < 1e-9);
    for (double& c : u) c /= nn;
    Vec upos(u);
    for (double& c : upos) c = std::abs(c);
    for (double c : {0.0, 0.5 * s}) {
      add("dir_hinge[" + std::to_string(r) + "," + std::to_string(c) + "]", false,
          [u, c](const double* x, std::size_t dd) {
            double t = 0.0;
            for (std::size_t k = 0; k < dd; ++k) t += u[k] * x[k];
            return std::max(0.0, t - c);
          });
      add("dir_hinge_pos[" + std::to_string(r) + "," + std::to_string(c) + "]", true,
          [upos, c](const double* x, std::size_t dd) {
            double t = 0.0;
            for (std::size_t k = 0; k < dd; ++k) t += upos[k] * x[k];
            return std::max(0.0, t - c);
          });
    }
  }

  // exp(lambda ||x||) with a cap far beyond any realizable sample magnitude;
  // the cap only guards against overflow.
  for (double lam : {0.5 / s, 1.0 / s}) {
    add("exp_norm[" + std::to_string(lam) + "]", false,
        [lam](const double* x, std::size_t dd) {
          return std::min(std::exp(lam * vec_norm(x, dd)), 1e100);
        });
  }

  for (int r = 0; r < 3; ++r) {
    Matrix b(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) b(i, j) = gen.next_normal();
    const Matrix q = b.gram();  // B^T B is psd
    add("quadratic[" + std::to_string(r) + "]", false,
        [q](const double* x, std::size_t dd) {
          double t = 0.0;
          for (std::size_t i = 0; i < dd; ++i)
            for (std::size_t j = 0; j < dd; ++j) t += x[i] * q(i, j) * x[j];
          return t;
        });
  }

  return battery;
}

std::vector<IntervalReport> verify_hypotheses(const SimSpec& f, const SimSpec& g,
                                              order::Relation rel) {
  std::visit([](const auto& s) { s.validate(); }, f);
  std::visit([](const auto& s) { s.validate(); }, g);
  const std::size_t d = spec_dim(f);
  if (d != spec_dim(g)) throw GridMismatch("verify_hypotheses: dimension mismatch");
  if (std::abs(spec_horizon(f) - spec_horizon(g)) > 1e-12)
    throw GridMismatch("verify_hypotheses: horizons differ");

  std::vector<IntervalDynamics> df = lower(f);
  std::vector<IntervalDynamics> dg = lower(g);

  // Common refinement of the two grids.
  std::vector<double> cuts;
  for (const auto& iv : df) {
    cuts.push_back(iv.t0);
    cuts.push_back(iv.t1);
  }
  for (const auto& iv : dg) {
    cuts.push_back(iv.t0);
    cuts.push_back(iv.t1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return b - a <= 1e-12; }),
             cuts.end());

  auto locate = [](const std::vector<IntervalDynamics>& dyn, double t) -> const IntervalDynamics& {
    for (const auto& iv : dyn)
      if (t >= iv.t0 - 1e-12 && t < iv.t1 - 1e-12) return iv;
    return dyn.back();
  };

  std::vector<IntervalReport> reports;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const IntervalDynamics& ivf = locate(df, mid);
    const IntervalDynamics& ivg = locate(dg, mid);

    IntervalReport rep;
    rep.t0 = cuts[k];
    rep.t1 = cuts[k + 1];
    // Covariance densities of the continuous parts.
    const psd::SymMatrix hf{ivf.diffusion->gram_rows()};
    const psd::SymMatrix hg{ivg.diffusion->gram_rows()};
    rep.psd_ok = psd::psd_leq(hf, hg);

    const DiscreteMeasure mf = interval_jump_measure(ivf, d);
    const DiscreteMeasure mg = interval_jump_measure(ivg, d);
    if (mf.empty()) {
      rep.jumps_ok = true;  // zero measure is dominated under cxp/cxpi
    } else {
      rep.jumps_ok = order::check_order(mf, mg, rel).ordered;
    }
    reports.push_back(rep);
  }
  return reports;
}

CompareReport compare(const SimSpec& f, const SimSpec& g, order::Relation rel,
                      std::size_t n_paths, std::uint64_t seed, bool force) {
  CompareReport report;
  report.hypotheses = verify_hypotheses(f, g, rel);
  report.hypotheses_ok = std::all_of(report.hypotheses.begin(), report.hypotheses.end(),
                                     [](const IntervalReport& r) { return r.ok(); });
  if (!report.hypotheses_ok && !force)
    throw BadSpec("comparison hypotheses fail; pass force to sample anyway");

  const std::size_t d = spec_dim(f);
  double scale = 1.0;
  auto scan_spec = [&scale](const SimSpec& s) {
    std::visit(
        [&scale](const auto& v) {
          for (const Matrix& m : v.diffusion) scale = std::max(scale, m.max_abs());
          if constexpr (std::is_same_v<std::decay_t<decltype(v)>, StrategySpec>) {
            for (const Matrix& m : v.jumps) scale = std::max(scale, m.max_abs());
          } else {
            for (const auto& per : v.jump_values)
              for (const Vec& h : per) scale = std::max(scale, norm_inf(h));
          }
        },
        s);
  };
  scan_spec(f);
  scan_spec(g);

  std::vector<TestFunction> battery = convex_battery(d, scale);
  if (rel == order::Relation::cxpi) {
    std::erase_if(battery, [](const TestFunction& t) { return !t.nondecreasing; });
  }

  const SampleMatrix sf = simulate_terminal(f, n_paths, rng::mix64(seed ^ 0x46));
  const SampleMatrix sg = simulate_terminal(g, n_paths, rng::mix64(seed ^ 0x47));

  report.rows.resize(battery.size());
  parallel_for(battery.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      Welford wf, wg;
      for (std::size_t p = 0; p < sf.paths; ++p) wf.add(battery[b].eval(sf.row(p), d));
      for (std::size_t p = 0; p < sg.paths; ++p) wg.add(battery[b].eval(sg.row(p), d));
      CompareRow row;
      row.phi = battery[b].name;
      row.mean_f = wf.mean;
      row.se_f = wf.se();
      row.mean_g = wg.mean;
      row.se_g = wg.se();
      const double diff = row.mean_f - row.mean_g;
      const double band = 4.0 * (row.se_f + row.se_g);
      if (!std::isfinite(diff) || !std::isfinite(band))
        row.decision = Decision::Inconclusive;
      else if (diff > band)
        row.decision = Decision::Violation;
      else
        row.decision = Decision::Consistent;
      report.rows[b] = std::move(row);
    }
  });
  report.any_violation = std::any_of(report.rows.begin(), report.rows.end(),
                                     [](const CompareRow& r) {
                                       return r.decision == Decision::Violation;
                                     });
  return report;
}

std::tuple<double, double, bool> gaussian_exact(const psd::SymMatrix& sigma,
                                                const psd::SymMatrix& sigma_tilde,
                                                const psd::SymMatrix& q) {
  if (!psd::is_psd(sigma)) throw NotPsd("gaussian_exact: Sigma is not psd");
  if (!psd::is_psd(sigma_tilde)) throw NotPsd("gaussian_exact: SigmaTilde is not psd");
  if (!psd::is_psd(q)) throw NotPsd("gaussian_exact: Q is not psd");
  const double lhs = psd::trace_inner(q, sigma);
  const double rhs = psd::trace_inner(q, sigma_tilde);
  const bool holds = lhs <= rhs + 1e-12 * (1.0 + std::abs(lhs) + std::abs(rhs));
  return {lhs, rhs, holds};
}

std::vector<DeviationRow> deviation_bound(const SampleMatrix& g_samples,
                                          const std::vector<double>& x_grid,
                                          const std::vector<double>& lambda_grid,
                                          const SampleMatrix* f_samples) {
  if (g_samples.paths == 0) throw BadSpec("deviation_bound: empty sample set");
  std::vector<double> norms(g_samples.paths);
  for (std::size_t p = 0; p < g_samples.paths; ++p)
    norms[p] = vec_norm(g_samples.row(p), g_samples.dim);

  std::vector<DeviationRow> rows;
  for (double x : x_grid) {
    DeviationRow row;
    row.x = x;
    double best = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
    for (double lam : lambda_grid) {
      if (!(lam > 0.0)) continue;
      double acc = 0.0;
      for (double nv : norms) acc += std::exp(lam * (nv - x));
      acc /= static_cast<double>(norms.size());
      if (acc < best) {
        best = acc;
        best_lambda = lam;
      }
    }
    row.bound = std::clamp(best, 0.0, 1.0);
    row.lambda_at_min = best_lambda;
    if (f_samples && f_samples->paths > 0) {
      std::size_t hits = 0;
      for (std::size_t p = 0; p < f_samples->paths; ++p)
        if (vec_norm(f_samples->row(p), f_samples->dim) >= x) ++hits;
      const double n = static_cast<double>(f_samples->paths);
      const double tail = static_cast<double>(hits) / n;
      row.empirical_tail = tail;
      row.tail_se = std::sqrt(std::max(0.0, tail * (1.0 - tail)) / n);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace convexorder::sim
