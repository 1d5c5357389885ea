#include "convexorder/psd.hpp"

#include <algorithm>
#include <cmath>

#include "convexorder/errors.hpp"

namespace convexorder::psd {

SymMatrix::SymMatrix(const Matrix& m) : n_(m.rows()), a_(m.rows() * m.rows()) {
  if (m.rows() != m.cols()) throw NotSymmetric("matrix is not square");
  const double tol = 1e-12 * (1.0 + m.max_abs());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol)
        throw NotSymmetric("matrix is not symmetric within tolerance");
      a_[i * n_ + j] = 0.5 * (m(i, j) + m(j, i));
    }
}

SymMatrix::SymMatrix(std::size_t n, double fill) : n_(n), a_(n * n, fill) {}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) s(i, i) = 1.0;
  return s;
}

SymMatrix SymMatrix::diagonal(const Vec& d) {
  SymMatrix s(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) s(i, i) = d[i];
  return s;
}

SymMatrix SymMatrix::operator-(const SymMatrix& other) const {
  if (n_ != other.n_) throw DimensionMismatch("SymMatrix subtraction size mismatch");
  SymMatrix r(n_, 0.0);
  for (std::size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] - other.a_[k];
  return r;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::quad_form(const Vec& x) const {
  if (x.size() != n_) throw DimensionMismatch("quad_form size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) s += x[i] * a_[i * n_ + j] * x[j];
  return s;
}

EigenSystem jacobi_eigen(const SymMatrix& in) {
  const std::size_t n = in.size();
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = in(i, j);

  Matrix v(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double scale = in.max_abs();
  const double stop = 1e-30 * (1.0 + scale) * (1.0 + scale);
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off <= stop) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        // Stable choice of the smaller-angle rotation.
        double t;
        if (tau >= 0.0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenSystem sys;
  sys.eigenvalues.resize(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] < a[y * n + y]; });
  sys.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    sys.eigenvalues[k] = a[order[k] * n + order[k]];
    for (std::size_t i = 0; i < n; ++i) sys.vectors(i, k) = v(i, order[k]);
  }
  return sys;
}

double default_psd_tol(const SymMatrix& a) { return 1e-9 * (1.0 + a.max_abs()); }

bool is_psd(const SymMatrix& a, double tol) {
  if (a.size() == 0) return true;
  EigenSystem sys = jacobi_eigen(a);
  return sys.eigenvalues.front() >= -tol;
}

bool is_psd(const SymMatrix& a) { return is_psd(a, default_psd_tol(a)); }

bool psd_leq(const SymMatrix& a, const SymMatrix& b) {
  if (a.size() != b.size()) throw DimensionMismatch("psd_leq size mismatch");
  return is_psd(b - a);
}

double trace_inner(const SymMatrix& a, const SymMatrix& b) {
  if (a.size() != b.size()) throw DimensionMismatch("trace_inner size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s += a(i, j) * b(i, j);
  return s;
}

SymMatrix sqrt_psd(const SymMatrix& a) {
  if (!is_psd(a, 1e-10 * (1.0 + a.max_abs()))) throw NotPsd("sqrt_psd: input is not psd");
  const std::size_t n = a.size();
  EigenSystem sys = jacobi_eigen(a);
  SymMatrix s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double w = std::sqrt(std::max(sys.eigenvalues[k], 0.0));
        acc += sys.vectors(i, k) * w * sys.vectors(j, k);
      }
      s(i, j) = acc;
    }
  // Symmetrize rounding dust and verify the defining property.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (s(i, j) + s(j, i));
      s(i, j) = m;
      s(j, i) = m;
    }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += s(i, k) * s(k, j);
      worst = std::max(worst, std::abs(acc - a(i, j)));
    }
  if (worst > 1e-9 * (1.0 + a.max_abs()))
    throw NumericalFailure("sqrt_psd: residual above tolerance");
  return s;
}

}  // namespace convexorder::psd
