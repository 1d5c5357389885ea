#include "convexorder/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "convexorder/errors.hpp"

namespace convexorder::lp {

namespace {

template <class S>
struct Traits;

template <>
struct Traits<double> {
  static constexpr bool exact = false;
  static double from_double(double v) { return v; }
  static double to_double(double v) { return v; }
  static double abs(double v) { return std::abs(v); }
  static double pivot_tol() { return kPivotTol; }
  static double feas_tol() { return kFeasTol; }
};

template <>
struct Traits<mpq_class> {
  static constexpr bool exact = true;
  static mpq_class from_double(double v) { return mpq_class(v); }
  static double to_double(const mpq_class& v) { return v.get_d(); }
  static mpq_class abs(const mpq_class& v) { return ::abs(v); }
  static mpq_class pivot_tol() { return 0; }
  static mpq_class feas_tol() { return 0; }
};

template <class S>
struct Bnd {
  bool finite = false;
  S value{};
};

enum class ColState { Basic, AtLower, AtUpper, FreeZero };

/// In-place Gaussian elimination with partial pivoting on a dense square
/// system; false when a pivot falls below the singularity guard.
template <class S>
bool gauss_solve(std::vector<S>& a, std::vector<S>& rhs, std::size_t m, std::vector<S>& out) {
  std::vector<std::size_t> rows(m);
  for (std::size_t i = 0; i < m; ++i) rows[i] = i;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t best = col;
    S best_abs = Traits<S>::abs(a[rows[col] * m + col]);
    for (std::size_t r = col + 1; r < m; ++r) {
      const S v = Traits<S>::abs(a[rows[r] * m + col]);
      if (v > best_abs) {
        best = r;
        best_abs = v;
      }
    }
    if (!(best_abs > Traits<S>::from_double(1e-13))) return false;
    std::swap(rows[col], rows[best]);
    const S piv = a[rows[col] * m + col];
    for (std::size_t r = col + 1; r < m; ++r) {
      const S f = a[rows[r] * m + col] / piv;
      if (f == 0) continue;
      for (std::size_t c = col; c < m; ++c) a[rows[r] * m + c] -= f * a[rows[col] * m + c];
      rhs[rows[r]] -= f * rhs[rows[col]];
    }
  }
  out.assign(m, S(0));
  for (std::size_t back = m; back-- > 0;) {
    S acc = rhs[rows[back]];
    for (std::size_t c = back + 1; c < m; ++c) acc -= a[rows[back] * m + c] * out[c];
    out[back] = acc / a[rows[back] * m + back];
  }
  return true;
}

/// Two-phase bounded-variable primal simplex over an ordered field S.
/// Column layout: structural | one slack per row | artificials.
template <class S>
class Engine {
 public:
  struct Result {
    Status status = Status::Optimal;
    std::vector<S> primal;  // structural values
    std::vector<S> dual;    // per row, minimization convention, unscaled
    std::vector<S> farkas;  // per row, unscaled
    std::vector<S> ray;     // structural improving direction (minimization)
    int iterations = 0;
  };

  explicit Engine(const LinearProgram& prog) : prog_(prog) {}

  Result run() {
    build();
    Result res;

    // A phase ends when a pass over freshly recomputed reduced costs finds no
    // entering candidate; iterate() refreshes on entry, so re-entering until
    // it performs no pivots confirms the optimum against undrifted data.
    // A phase result is confirmed by re-entering with freshly recomputed
    // state until a pass performs no pivots. Confirmation passes use a wider
    // pricing tolerance and are capped: threshold-level reduced-cost noise
    // otherwise ping-pongs, and the complementarity gate already bounds the
    // error such candidates could carry.
    auto run_phase = [&](bool phase1) {
      StepEnd end = iterate(phase1, 1.0);
      for (int confirm = 0; confirm < 4; ++confirm) {
        if (end.unbounded || end.budget_exhausted) break;
        const int before = iterations_;
        end = iterate(phase1, 8.0);
        if (iterations_ - before <= 1) break;
      }
      return end;
    };

    // Phase 1: minimize the sum of artificial variables.
    set_phase_costs(/*phase1=*/true);
    StepEnd end = run_phase(/*phase1=*/true);
    if (end.budget_exhausted) throw NumericalFailure("lp: pivot budget exhausted in phase 1");
    if (end.unbounded) throw NumericalFailure("lp: phase 1 reported unbounded");
    if (basis_singular_)
      throw NumericalFailure("lp: phase 1 basis is numerically singular");

    refresh_basic_values();
    S infeas = 0;
    for (std::size_t j = art_begin_; j < ncols_; ++j)
      if (state_[j] == ColState::Basic) infeas += bhat_[row_of_[j]];
    if (infeas > Traits<S>::feas_tol()) {
      res.status = Status::Infeasible;
      res.farkas = dual_multipliers();
      res.iterations = iterations_;
      return res;
    }

    drive_out_artificials();
    // Pin artificials at zero so later pivots cannot reintroduce infeasibility.
    for (std::size_t j = art_begin_; j < ncols_; ++j) upb_[j] = Bnd<S>{true, S(0)};

    // Phase 2 with the real objective.
    set_phase_costs(/*phase1=*/false);
    end = run_phase(/*phase1=*/false);
    if (end.budget_exhausted) throw NumericalFailure("lp: pivot budget exhausted in phase 2");

    refresh_basic_values();
    if (basis_singular_)
      throw NumericalFailure("lp: terminal basis is numerically singular");
    if (end.unbounded) {
      res.status = Status::Unbounded;
      res.ray = extract_ray(end.entering, end.direction);
      res.primal = extract_primal();
      res.iterations = iterations_;
      return res;
    }

    res.status = Status::Optimal;
    res.primal = extract_primal();
    res.dual = dual_multipliers();
    res.iterations = iterations_;
    return res;
  }

 private:
  struct StepEnd {
    bool unbounded = false;
    bool budget_exhausted = false;
    std::size_t entering = 0;
    int direction = +1;
  };

  void build() {
    n_ = prog_.num_vars();
    m_ = prog_.num_rows();
    if (!prog_.lower.empty() && prog_.lower.size() != n_)
      throw std::invalid_argument("lp: lower bound vector size mismatch");
    if (!prog_.upper.empty() && prog_.upper.size() != n_)
      throw std::invalid_argument("lp: upper bound vector size mismatch");
    for (const Constraint& c : prog_.constraints)
      if (c.coeffs.size() != n_) throw std::invalid_argument("lp: constraint width mismatch");

    // Row scaling to unit max coefficient.
    row_scale_.assign(m_, S(1));
    for (std::size_t i = 0; i < m_; ++i) {
      double mx = 0.0;
      for (double a : prog_.constraints[i].coeffs) {
        if (!std::isfinite(a)) throw std::invalid_argument("lp: non-finite coefficient");
        mx = std::max(mx, std::abs(a));
      }
      if (!std::isfinite(prog_.constraints[i].rhs))
        throw std::invalid_argument("lp: non-finite rhs");
      if (mx > 0.0) row_scale_[i] = Traits<S>::from_double(mx);
    }

    n_art_ = 0;  // counted below; allocate after the initial basis is known

    lob_.assign(n_ + m_, Bnd<S>{});
    upb_.assign(n_ + m_, Bnd<S>{});
    for (std::size_t j = 0; j < n_; ++j) {
      double lo = prog_.lower_bound(j), hi = prog_.upper_bound(j);
      if (std::isnan(lo) || std::isnan(hi) || lo > hi)
        throw std::invalid_argument("lp: invalid variable bounds");
      if (std::isfinite(lo)) lob_[j] = Bnd<S>{true, Traits<S>::from_double(lo)};
      if (std::isfinite(hi)) upb_[j] = Bnd<S>{true, Traits<S>::from_double(hi)};
    }
    for (std::size_t i = 0; i < m_; ++i) {
      std::size_t j = n_ + i;
      switch (prog_.constraints[i].rel) {
        case Rel::LessEqual:
          lob_[j] = Bnd<S>{true, S(0)};
          break;
        case Rel::GreaterEqual:
          upb_[j] = Bnd<S>{true, S(0)};
          break;
        case Rel::Equal:
          lob_[j] = Bnd<S>{true, S(0)};
          upb_[j] = Bnd<S>{true, S(0)};
          break;
      }
    }

    // Initial nonbasic states for structural variables.
    state_.assign(n_ + m_, ColState::AtLower);
    for (std::size_t j = 0; j < n_; ++j) {
      if (lob_[j].finite)
        state_[j] = ColState::AtLower;
      else if (upb_[j].finite)
        state_[j] = ColState::AtUpper;
      else
        state_[j] = ColState::FreeZero;
    }

    // Scaled row residuals at the initial point decide slack vs artificial.
    std::vector<S> resid(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      S r = Traits<S>::from_double(prog_.constraints[i].rhs) / row_scale_[i];
      for (std::size_t j = 0; j < n_; ++j) {
        double a = prog_.constraints[i].coeffs[j];
        if (a == 0.0) continue;
        r -= (Traits<S>::from_double(a) / row_scale_[i]) * nonbasic_value(j);
      }
      resid[i] = r;
    }

    std::vector<int> art_sign(m_, 0);
    basis_.assign(m_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      std::size_t sj = n_ + i;
      bool slack_ok = (!lob_[sj].finite || resid[i] >= lob_[sj].value) &&
                      (!upb_[sj].finite || resid[i] <= upb_[sj].value);
      if (slack_ok) {
        basis_[i] = static_cast<int>(sj);
      } else {
        art_sign[i] = resid[i] > 0 ? +1 : -1;
        ++n_art_;
      }
    }

    art_begin_ = n_ + m_;
    ncols_ = art_begin_ + n_art_;
    lob_.resize(ncols_);
    upb_.resize(ncols_);
    state_.resize(ncols_, ColState::AtLower);
    for (std::size_t j = art_begin_; j < ncols_; ++j) lob_[j] = Bnd<S>{true, S(0)};

    // Fill the tableau; rows with a basic artificial of sign -1 are negated so
    // the initial basis matrix is the identity.
    T_.assign(m_ * ncols_, S(0));
    binvb_.assign(m_, S(0));
    bhat_.assign(m_, S(0));
    row_of_.assign(ncols_, -1);
    row_sign_.assign(m_, S(1));
    art_rows_.assign(n_art_, 0);
    std::size_t next_art = art_begin_;
    for (std::size_t i = 0; i < m_; ++i) {
      S sgn = S(1);
      if (art_sign[i] != 0 && art_sign[i] < 0) sgn = S(-1);
      row_sign_[i] = sgn;
      for (std::size_t j = 0; j < n_; ++j) {
        double a = prog_.constraints[i].coeffs[j];
        if (a != 0.0) at(i, j) = sgn * Traits<S>::from_double(a) / row_scale_[i];
      }
      at(i, n_ + i) = sgn;
      binvb_[i] = sgn * Traits<S>::from_double(prog_.constraints[i].rhs) / row_scale_[i];
      if (art_sign[i] == 0) {
        std::size_t sj = n_ + i;
        state_[sj] = ColState::Basic;
        row_of_[sj] = static_cast<int>(i);
        bhat_[i] = resid[i];
      } else {
        std::size_t aj = next_art++;
        at(i, aj) = S(1);
        art_rows_[aj - art_begin_] = i;
        basis_[i] = static_cast<int>(aj);
        state_[aj] = ColState::Basic;
        row_of_[aj] = static_cast<int>(i);
        bhat_[i] = art_sign[i] > 0 ? resid[i] : -resid[i];
        // Slack stays nonbasic at zero.
        std::size_t sj = n_ + i;
        state_[sj] = lob_[sj].finite ? ColState::AtLower : ColState::AtUpper;
      }
    }

    cost_.assign(ncols_, S(0));
    d_.assign(ncols_, S(0));
    basis_singular_ = false;
    iterations_ = 0;
    max_iterations_ = 2000 + 50 * static_cast<int>(m_ + ncols_);
  }

  S& at(std::size_t i, std::size_t j) { return T_[i * ncols_ + j]; }
  const S& at(std::size_t i, std::size_t j) const { return T_[i * ncols_ + j]; }

  S nonbasic_value(std::size_t j) const {
    switch (state_[j]) {
      case ColState::AtLower:
        return lob_[j].value;
      case ColState::AtUpper:
        return upb_[j].value;
      default:
        return S(0);
    }
  }

  S value_of(std::size_t j) const {
    if (state_[j] == ColState::Basic) return bhat_[row_of_[j]];
    return nonbasic_value(j);
  }

  void set_phase_costs(bool phase1) {
    std::fill(cost_.begin(), cost_.end(), S(0));
    if (phase1) {
      for (std::size_t j = art_begin_; j < ncols_; ++j) cost_[j] = S(1);
    } else {
      double flip = prog_.sense == Sense::Maximize ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j)
        cost_[j] = Traits<S>::from_double(flip * prog_.objective[j]);
    }
  }

  void refresh_reduced_costs() {
    for (std::size_t j = 0; j < ncols_; ++j) d_[j] = cost_[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const S cb = cost_[basis_[i]];
      if (cb == 0) continue;
      for (std::size_t j = 0; j < ncols_; ++j) d_[j] -= cb * at(i, j);
    }
    for (std::size_t i = 0; i < m_; ++i) d_[basis_[i]] = S(0);
  }

  void refresh_basic_values() {
    for (std::size_t i = 0; i < m_; ++i) bhat_[i] = binvb_[i];
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (state_[j] == ColState::Basic) continue;
      S v = nonbasic_value(j);
      if (v == 0) continue;
      for (std::size_t i = 0; i < m_; ++i) {
        const S& t = at(i, j);
        if (t != 0) bhat_[i] -= t * v;
      }
    }
  }

  /// Entry of the scaled, row-flipped constraint matrix, rebuilt from the
  /// original data (no pivot history).
  S fresh_entry(std::size_t i, std::size_t j) const {
    if (j < n_) {
      const double a = prog_.constraints[i].coeffs[j];
      if (a == 0.0) return S(0);
      return row_sign_[i] * Traits<S>::from_double(a) / row_scale_[i];
    }
    if (j < n_ + m_) return j - n_ == i ? row_sign_[i] : S(0);
    return art_rows_[j - art_begin_] == i ? S(1) : S(0);
  }

  /// Rebuilds the tableau T = B^{-1} A and binvb from the original data via a
  /// fresh LU of the basis matrix. Pivot updates drift over long degenerate
  /// paths; refactorization is the recovery mechanism.
  void refactorize() {
    if constexpr (Traits<S>::exact) return;  // exact updates never drift
    if (m_ == 0) return;

    std::vector<S> lu(m_ * m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k)
        lu[i * m_ + k] = fresh_entry(i, static_cast<std::size_t>(basis_[k]));
    std::vector<std::size_t> p(m_);
    for (std::size_t i = 0; i < m_; ++i) p[i] = i;
    for (std::size_t col = 0; col < m_; ++col) {
      std::size_t best = col;
      S best_abs = Traits<S>::abs(lu[p[col] * m_ + col]);
      for (std::size_t r = col + 1; r < m_; ++r) {
        const S v = Traits<S>::abs(lu[p[r] * m_ + col]);
        if (v > best_abs) {
          best = r;
          best_abs = v;
        }
      }
      if (!(best_abs > Traits<S>::from_double(1e-13))) {
        basis_singular_ = true;  // keep current T; extraction will refuse
        return;
      }
      std::swap(p[col], p[best]);
      const S piv = lu[p[col] * m_ + col];
      for (std::size_t r = col + 1; r < m_; ++r) {
        const S f = lu[p[r] * m_ + col] / piv;
        lu[p[r] * m_ + col] = f;
        if (f == 0) continue;
        for (std::size_t c = col + 1; c < m_; ++c) lu[p[r] * m_ + c] -= f * lu[p[col] * m_ + c];
      }
    }

    std::vector<S> work(m_);
    auto lu_solve = [&](std::vector<S>& rhs) {
      for (std::size_t i = 0; i < m_; ++i) {
        S acc = rhs[p[i]];
        for (std::size_t c = 0; c < i; ++c) acc -= lu[p[i] * m_ + c] * work[c];
        work[i] = acc;
      }
      for (std::size_t i = m_; i-- > 0;) {
        S acc = work[i];
        for (std::size_t c = i + 1; c < m_; ++c) acc -= lu[p[i] * m_ + c] * work[c];
        work[i] = acc / lu[p[i] * m_ + i];
      }
    };

    std::vector<S> rhs(m_);
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (row_of_[j] >= 0) {
        // Basic columns map to exact unit vectors.
        for (std::size_t i = 0; i < m_; ++i) at(i, j) = S(0);
        at(static_cast<std::size_t>(row_of_[j]), j) = S(1);
        continue;
      }
      bool any = false;
      for (std::size_t i = 0; i < m_; ++i) {
        rhs[i] = fresh_entry(i, j);
        if (rhs[i] != 0) any = true;
      }
      if (!any) {
        for (std::size_t i = 0; i < m_; ++i) at(i, j) = S(0);
        continue;
      }
      lu_solve(rhs);
      for (std::size_t i = 0; i < m_; ++i) at(i, j) = work[i];
    }
    for (std::size_t i = 0; i < m_; ++i)
      rhs[i] = row_sign_[i] * Traits<S>::from_double(prog_.constraints[i].rhs) / row_scale_[i];
    lu_solve(rhs);
    binvb_ = work;
    basis_singular_ = false;
  }


  /// Multipliers for the ORIGINAL rows via a fresh transposed solve
  /// B^T y = c_B; falls back to the tableau reduced costs when singular.
  std::vector<S> dual_multipliers() {
    refresh_reduced_costs();
    std::vector<S> fallback(m_);
    for (std::size_t i = 0; i < m_; ++i) fallback[i] = -d_[n_ + i] / row_scale_[i];
    if constexpr (Traits<S>::exact) return fallback;
    if (m_ == 0) return fallback;

    std::vector<S> bt(m_ * m_), rhs(m_), y;
    for (std::size_t i = 0; i < m_; ++i) {
      rhs[i] = cost_[basis_[i]];
      for (std::size_t k = 0; k < m_; ++k)
        bt[i * m_ + k] = fresh_entry(k, static_cast<std::size_t>(basis_[i]));
    }
    if (!gauss_solve(bt, rhs, m_, y)) return fallback;
    std::vector<S> out(m_);
    for (std::size_t i = 0; i < m_; ++i) out[i] = y[i] * row_sign_[i] / row_scale_[i];
    return out;
  }

  bool range_fixed(std::size_t j) const {
    return lob_[j].finite && upb_[j].finite && lob_[j].value == upb_[j].value;
  }

  StepEnd iterate(bool phase1, double dtol_scale) {
    const S pivtol = Traits<S>::pivot_tol();
    S dtol;
    if constexpr (Traits<S>::exact) {
      dtol = 0;
    } else {
      double cmax = 0.0;
      for (std::size_t j = 0; j < ncols_; ++j)
        cmax = std::max(cmax, std::abs(Traits<S>::to_double(cost_[j])));
      dtol = dtol_scale * 1e-9 * (1.0 + cmax);
    }
    refactorize();
    refresh_basic_values();
    refresh_reduced_costs();

    // Entering rule: steepest reduced cost (ties to the lowest index) while
    // the objective makes progress; after a run of degenerate steps switch to
    // Bland's least-index rule for the anti-cycling guarantee. Long pivot
    // paths drift the incremental updates, so the factorization is redone
    // every 64 pivots.
    bool bland = false;
    int degenerate_run = 0;
    int since_refresh = 0;

    while (true) {
      if (++iterations_ > max_iterations_) return StepEnd{false, true, 0, +1};

      // The phase-1 objective is bounded below by zero, so the phase is over
      // the moment the artificial mass vanishes; without this exit, Bland
      // steps can shuffle alternative optimal bases indefinitely.
      if (phase1) {
        S infeas = 0;
        for (std::size_t j = art_begin_; j < ncols_; ++j)
          if (state_[j] == ColState::Basic) infeas += bhat_[row_of_[j]];
        if (!(infeas > Traits<S>::feas_tol())) return StepEnd{};
      }
      if (degenerate_run > 40) bland = true;
      if (++since_refresh > 64) {
        refactorize();
        refresh_basic_values();
        refresh_reduced_costs();
        since_refresh = 0;
      }

      std::size_t jin = ncols_;
      int dir = +1;
      S best_viol{};
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (state_[j] == ColState::Basic) continue;
        if (!phase1 && j >= art_begin_) continue;
        if (range_fixed(j)) continue;
        S viol{};
        int cand_dir = 0;
        if ((state_[j] == ColState::AtLower || state_[j] == ColState::FreeZero) &&
            d_[j] < -dtol) {
          viol = -d_[j];
          cand_dir = +1;
        } else if ((state_[j] == ColState::AtUpper || state_[j] == ColState::FreeZero) &&
                   d_[j] > dtol) {
          viol = d_[j];
          cand_dir = -1;
        }
        if (cand_dir == 0) continue;
        if (jin == ncols_ || (!bland && viol > best_viol)) {
          jin = j;
          dir = cand_dir;
          best_viol = viol;
        }
        if (bland) break;  // lowest eligible index
      }
      if (jin == ncols_) return StepEnd{};  // phase optimum

      // Two-pass ratio test. The first pass finds the tightest exact ratio
      // and a relaxed minimum that tolerates a 1e-9 bound overshoot; the
      // second pass picks the best-conditioned pivot among the near-ties
      // (Harris-style). Bland mode keeps the exact minimum with the lowest
      // variable index, which the termination argument requires.
      ratio_rows_.clear();
      bool have_row = false;
      S theta_exact{}, theta_relaxed{};
      for (std::size_t i = 0; i < m_; ++i) {
        const S& t = at(i, jin);
        const S abst = Traits<S>::abs(t);
        if (abst <= pivtol) continue;
        const S dt = dir > 0 ? t : -t;
        const std::size_t k = static_cast<std::size_t>(basis_[i]);
        S cand;
        ColState side;
        if (dt > 0) {
          if (!lob_[k].finite) continue;
          cand = (bhat_[i] - lob_[k].value) / dt;
          side = ColState::AtLower;
        } else {
          if (!upb_[k].finite) continue;
          cand = (upb_[k].value - bhat_[i]) / (-dt);
          side = ColState::AtUpper;
        }
        if (cand < 0) cand = S(0);
        // Harris slack: tolerate a 1e-9 bound overshoot in floating point;
        // the exact engine must keep feasibility exact.
        const S relaxed =
            Traits<S>::exact ? cand : cand + Traits<S>::from_double(1e-9) / abst;
        if (!have_row) {
          theta_exact = cand;
          theta_relaxed = relaxed;
          have_row = true;
        } else {
          if (cand < theta_exact) theta_exact = cand;
          if (relaxed < theta_relaxed) theta_relaxed = relaxed;
        }
        ratio_rows_.push_back({i, cand, abst, side});
      }

      const bool have_self = lob_[jin].finite && upb_[jin].finite;
      const S theta_self = have_self ? upb_[jin].value - lob_[jin].value : S(0);

      if (!have_row && !have_self) return StepEnd{true, false, jin, dir};  // unbounded

      if (have_self && (!have_row || theta_self < theta_exact)) {
        // Bound flip, no basis change.
        apply_displacement(jin, dir, theta_self);
        state_[jin] = state_[jin] == ColState::AtLower ? ColState::AtUpper : ColState::AtLower;
        degenerate_run = 0;
        continue;
      }

      int leave_row = -1;
      S theta{};
      ColState leave_side = ColState::AtLower;
      if (bland) {
        for (const RatioRow& rr : ratio_rows_) {
          if (rr.theta > theta_exact) continue;
          if (leave_row < 0 || basis_[rr.row] < basis_[leave_row]) {
            leave_row = static_cast<int>(rr.row);
            leave_side = rr.side;
          }
        }
        theta = theta_exact;
      } else {
        S best_piv{};
        for (const RatioRow& rr : ratio_rows_) {
          if (rr.theta > theta_relaxed) continue;
          if (leave_row < 0 || rr.pivot_abs > best_piv) {
            leave_row = static_cast<int>(rr.row);
            leave_side = rr.side;
            theta = rr.theta;
            best_piv = rr.pivot_abs;
          }
        }
      }

      if (theta <= Traits<S>::pivot_tol())
        ++degenerate_run;
      else
        degenerate_run = 0;
      const S vnew = value_of(jin) + (dir > 0 ? theta : -theta);
      apply_displacement(jin, dir, theta);
      pivot(static_cast<std::size_t>(leave_row), jin, vnew, leave_side);
    }
  }

  void apply_displacement(std::size_t jin, int dir, const S& theta) {
    if (theta == 0) return;
    const S step = dir > 0 ? theta : -theta;
    for (std::size_t i = 0; i < m_; ++i) {
      const S& t = at(i, jin);
      if (t != 0) bhat_[i] -= step * t;
    }
  }

  void pivot(std::size_t r, std::size_t jin, const S& vnew, ColState leave_side) {
    const S piv = at(r, jin);
    const S inv = S(1) / piv;
    for (std::size_t j = 0; j < ncols_; ++j) at(r, j) *= inv;
    binvb_[r] *= inv;
    at(r, jin) = S(1);
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const S f = at(i, jin);
      if (f == 0) continue;
      for (std::size_t j = 0; j < ncols_; ++j) at(i, j) -= f * at(r, j);
      binvb_[i] -= f * binvb_[r];
      at(i, jin) = S(0);
    }
    const S fd = d_[jin];
    if (fd != 0) {
      for (std::size_t j = 0; j < ncols_; ++j) d_[j] -= fd * at(r, j);
    }
    d_[jin] = S(0);

    const std::size_t kout = static_cast<std::size_t>(basis_[r]);
    basis_[r] = static_cast<int>(jin);
    row_of_[jin] = static_cast<int>(r);
    row_of_[kout] = -1;
    state_[jin] = ColState::Basic;
    state_[kout] = leave_side;
    bhat_[r] = vnew;
  }

  /// After a feasible phase 1, pivot basic artificials (all at value ~0) out
  /// of the basis where possible; rows with no eligible pivot are redundant
  /// and keep their artificial pinned at zero.
  void drive_out_artificials() {
    const S pivtol = Traits<S>::pivot_tol();
    for (std::size_t j = art_begin_; j < ncols_; ++j) {
      if (state_[j] != ColState::Basic) continue;
      const std::size_t r = static_cast<std::size_t>(row_of_[j]);
      std::size_t jin = ncols_;
      for (std::size_t cand = 0; cand < art_begin_; ++cand) {
        if (state_[cand] == ColState::Basic) continue;
        if (Traits<S>::abs(at(r, cand)) > pivtol) {
          jin = cand;
          break;
        }
      }
      if (jin == ncols_) continue;  // redundant row
      const S vnew = value_of(jin);
      pivot(r, jin, vnew, ColState::AtLower);
    }
  }

  std::vector<S> extract_primal() {
    std::vector<S> x(n_);
    for (std::size_t j = 0; j < n_; ++j) x[j] = value_of(j);
    return x;
  }

  std::vector<S> extract_ray(std::size_t jin, int dir) {
    std::vector<S> ray(n_, S(0));
    const S step = dir > 0 ? S(1) : S(-1);
    if (jin < n_) ray[jin] = step;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t k = static_cast<std::size_t>(basis_[i]);
      if (k >= n_) continue;
      const S& t = at(i, jin);
      if (t != 0) ray[k] = -step * t;
    }
    return ray;
  }

  struct RatioRow {
    std::size_t row;
    S theta;
    S pivot_abs;
    ColState side;
  };

  const LinearProgram& prog_;
  std::size_t n_ = 0, m_ = 0, ncols_ = 0, art_begin_ = 0, n_art_ = 0;
  std::vector<S> T_, binvb_, bhat_, cost_, d_, row_scale_, row_sign_;
  std::vector<std::size_t> art_rows_;
  std::vector<Bnd<S>> lob_, upb_;
  std::vector<ColState> state_;
  std::vector<int> basis_, row_of_;
  std::vector<RatioRow> ratio_rows_;
  bool basis_singular_ = false;
  int iterations_ = 0, max_iterations_ = 0;
};

double bound_sup(double coeff, double lo, double hi, double ztol) {
  if (std::abs(coeff) <= ztol) return 0.0;
  if (coeff > 0.0) {
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    return coeff * hi;
  }
  if (!std::isfinite(lo) || lo == -std::numeric_limits<double>::infinity())
    return std::numeric_limits<double>::infinity();
  return coeff * lo;
}

}  // namespace

double feasibility_residual(const LinearProgram& prog, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < prog.num_rows(); ++i) {
    const Constraint& c = prog.constraints[i];
    double ax = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) ax += c.coeffs[j] * x[j];
    double v = 0.0;
    switch (c.rel) {
      case Rel::LessEqual:
        v = std::max(0.0, ax - c.rhs);
        break;
      case Rel::GreaterEqual:
        v = std::max(0.0, c.rhs - ax);
        break;
      case Rel::Equal:
        v = std::abs(ax - c.rhs);
        break;
    }
    worst = std::max(worst, v);
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    worst = std::max(worst, prog.lower_bound(j) - x[j]);
    worst = std::max(worst, x[j] - prog.upper_bound(j));
  }
  return worst;
}

double farkas_margin(const LinearProgram& prog, const std::vector<double>& y) {
  if (y.size() != prog.num_rows()) return -std::numeric_limits<double>::infinity();
  double yscale = 0.0;
  for (double v : y) yscale = std::max(yscale, std::abs(v));
  const double sign_tol = 1e-9 * (1.0 + yscale);

  std::vector<double> yc(y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Rel rel = prog.constraints[i].rel;
    if (rel == Rel::LessEqual && yc[i] > 0.0) {
      if (yc[i] > sign_tol) return -std::numeric_limits<double>::infinity();
      yc[i] = 0.0;
    }
    if (rel == Rel::GreaterEqual && yc[i] < 0.0) {
      if (yc[i] < -sign_tol) return -std::numeric_limits<double>::infinity();
      yc[i] = 0.0;
    }
  }

  const std::size_t n = prog.num_vars();
  double ytb = 0.0;
  std::vector<double> yta(n, 0.0);
  double coef_scale = 0.0;
  for (std::size_t i = 0; i < prog.num_rows(); ++i) {
    ytb += yc[i] * prog.constraints[i].rhs;
    for (std::size_t j = 0; j < n; ++j) {
      yta[j] += yc[i] * prog.constraints[i].coeffs[j];
      coef_scale = std::max(coef_scale, std::abs(prog.constraints[i].coeffs[j]));
    }
  }
  const double ztol = 1e-11 * (1.0 + yscale) * (1.0 + coef_scale);
  double sup = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = bound_sup(yta[j], prog.lower_bound(j), prog.upper_bound(j), ztol);
    if (!std::isfinite(s)) return -std::numeric_limits<double>::infinity();
    sup += s;
  }
  return ytb - sup;
}

namespace {

double compute_complementarity(const LinearProgram& prog, const std::vector<double>& x,
                               const std::vector<double>& y) {
  const double flip = prog.sense == Sense::Maximize ? -1.0 : 1.0;
  double worst = 0.0;
  std::vector<double> yta(prog.num_vars(), 0.0);
  for (std::size_t i = 0; i < prog.num_rows(); ++i) {
    const Constraint& c = prog.constraints[i];
    double ax = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) ax += c.coeffs[j] * x[j];
    if (c.rel != Rel::Equal) worst = std::max(worst, std::abs(y[i] * (c.rhs - ax)));
    for (std::size_t j = 0; j < x.size(); ++j) yta[j] += y[i] * c.coeffs[j];
  }
  for (std::size_t j = 0; j < prog.num_vars(); ++j) {
    const double dred = flip * prog.objective[j] - yta[j];
    if (dred == 0.0) continue;
    double dist;
    if (dred > 0.0) {
      const double lo = prog.lower_bound(j);
      dist = std::isfinite(lo) ? x[j] - lo : std::abs(x[j]);
    } else {
      const double hi = prog.upper_bound(j);
      dist = std::isfinite(hi) ? hi - x[j] : std::abs(x[j]);
    }
    worst = std::max(worst, std::abs(dred * dist));
  }
  return worst;
}

}  // namespace

Outcome solve(const LinearProgram& prog) {
  Engine<double> eng(prog);
  auto res = eng.run();

  Outcome out;
  out.status = res.status;
  out.iterations = res.iterations;

  if (res.status == Status::Infeasible) {
    out.farkas = std::move(res.farkas);
    if (!(farkas_margin(prog, out.farkas) > 0.0))
      throw NumericalFailure("lp: Farkas certificate failed validation");
    return out;
  }

  out.primal = std::move(res.primal);
  out.feasibility_residual = feasibility_residual(prog, out.primal);
  if (out.feasibility_residual > kFeasTol) {
    throw NumericalFailure("lp: primal residual above tolerance: " +
                           std::to_string(out.feasibility_residual));
  }
  for (std::size_t j = 0; j < prog.num_vars(); ++j)
    out.objective += prog.objective[j] * out.primal[j];

  if (res.status == Status::Unbounded) {
    out.ray = std::move(res.ray);
    // The ray must improve the objective and respect row/bound directions.
    double cdelta = 0.0;
    for (std::size_t j = 0; j < prog.num_vars(); ++j) cdelta += prog.objective[j] * out.ray[j];
    if (prog.sense == Sense::Maximize) cdelta = -cdelta;
    bool ok = cdelta < -1e-9;
    for (std::size_t i = 0; ok && i < prog.num_rows(); ++i) {
      const Constraint& c = prog.constraints[i];
      double adelta = 0.0;
      for (std::size_t j = 0; j < out.ray.size(); ++j) adelta += c.coeffs[j] * out.ray[j];
      if (c.rel == Rel::LessEqual && adelta > 1e-7) ok = false;
      if (c.rel == Rel::GreaterEqual && adelta < -1e-7) ok = false;
      if (c.rel == Rel::Equal && std::abs(adelta) > 1e-7) ok = false;
    }
    for (std::size_t j = 0; ok && j < out.ray.size(); ++j) {
      if (out.ray[j] > 1e-9 && std::isfinite(prog.upper_bound(j))) ok = false;
      if (out.ray[j] < -1e-9 && std::isfinite(prog.lower_bound(j))) ok = false;
    }
    if (!ok) throw NumericalFailure("lp: unbounded ray failed validation");
    return out;
  }

  // Optimal: map internal minimization duals to the declared sense.
  out.dual = std::move(res.dual);
  out.complementarity_residual = compute_complementarity(prog, out.primal, out.dual);
  if (prog.sense == Sense::Maximize)
    for (double& v : out.dual) v = -v;
  if (out.complementarity_residual > kCompTol)
    throw NumericalFailure("lp: complementary slackness residual above tolerance: " +
                           std::to_string(out.complementarity_residual));
  return out;
}

std::pair<bool, Outcome> check_feasible(const LinearProgram& prog) {
  LinearProgram feas = prog;
  feas.sense = Sense::Minimize;
  std::fill(feas.objective.begin(), feas.objective.end(), 0.0);
  Outcome out = solve(feas);
  return {out.status != Status::Infeasible, std::move(out)};
}

Outcome solve_robust(const LinearProgram& prog) {
  try {
    return solve(prog);
  } catch (const NumericalFailure&) {
    const ExactOutcome exact = solve_exact(prog);
    Outcome out;
    out.status = exact.status;
    if (exact.status == Status::Infeasible) {
      out.farkas.resize(exact.farkas.size());
      for (std::size_t i = 0; i < exact.farkas.size(); ++i) out.farkas[i] = exact.farkas[i].get_d();
      return out;
    }
    out.primal.resize(exact.primal.size());
    for (std::size_t j = 0; j < exact.primal.size(); ++j) out.primal[j] = exact.primal[j].get_d();
    out.objective = exact.objective.get_d();
    out.feasibility_residual = feasibility_residual(prog, out.primal);
    return out;
  }
}

std::pair<bool, Outcome> check_feasible_robust(const LinearProgram& prog) {
  LinearProgram feas = prog;
  feas.sense = Sense::Minimize;
  std::fill(feas.objective.begin(), feas.objective.end(), 0.0);
  Outcome out = solve_robust(feas);
  return {out.status != Status::Infeasible, std::move(out)};
}

ExactOutcome solve_exact(const LinearProgram& prog) {
  Engine<mpq_class> eng(prog);
  auto res = eng.run();
  ExactOutcome out;
  out.status = res.status;
  if (res.status == Status::Infeasible) {
    out.farkas = std::move(res.farkas);
    return out;
  }
  out.primal = std::move(res.primal);
  for (std::size_t j = 0; j < prog.num_vars(); ++j)
    out.objective += mpq_class(prog.objective[j]) * out.primal[j];
  return out;
}

}  // namespace convexorder::lp
