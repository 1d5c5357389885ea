#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "convexorder/errors.hpp"

namespace convexorder {

/// Dense point / direction in R^d.
using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("sub: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("add: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec scaled(const Vec& a, double s) {
  Vec r(a);
  for (double& v : r) v *= s;
  return r;
}

/// a += s*b
inline void axpy(Vec& a, double s, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("axpy: size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

inline Vec normalized(const Vec& a) {
  double n = norm2(a);
  if (n == 0.0) throw BadDirection("cannot normalize zero vector");
  return scaled(a, 1.0 / n);
}

/// Row-major dense matrix, sized at construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return a_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  /// y = A x
  Vec apply(const Vec& x) const {
    if (x.size() != cols_) throw DimensionMismatch("Matrix::apply: size mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += a_[i * cols_ + j] * x[j];
      y[i] = s;
    }
    return y;
  }

  Vec col(std::size_t j) const {
    Vec c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = a_[i * cols_ + j];
    return c;
  }

  /// A^T A, the Gram matrix of the columns.
  Matrix gram() const {
    Matrix g(cols_, cols_);
    for (std::size_t i = 0; i < cols_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < rows_; ++k) s += a_[k * cols_ + i] * a_[k * cols_ + j];
        g(i, j) = s;
      }
    return g;
  }

  /// A A^T, the Gram matrix of the rows.
  Matrix gram_rows() const {
    Matrix g(rows_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < rows_; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < cols_; ++k) s += a_[i * cols_ + k] * a_[j * cols_ + k];
        g(i, j) = s;
      }
    return g;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

}  // namespace convexorder
