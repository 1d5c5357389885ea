#pragma once

#include <cstddef>
#include <vector>

#include "convexorder/linalg.hpp"

namespace convexorder::psd {

/// Symmetric d x d matrix; construction rejects asymmetry beyond 1e-12
/// (relative to the largest entry) with NotSymmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);
  SymMatrix(std::size_t n, double fill);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(const Vec& d);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  SymMatrix operator-(const SymMatrix& other) const;
  double max_abs() const;
  double quad_form(const Vec& x) const;  // <x, A x>

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Eigen-decomposition by cyclic Jacobi rotations: A = V diag(w) V^T.
struct EigenSystem {
  Vec eigenvalues;  // ascending
  Matrix vectors;   // columns are eigenvectors, matching order
};
EigenSystem jacobi_eigen(const SymMatrix& a);

/// Default tolerance used by is_psd when none is given: 1e-9 * (1 + max|A|).
double default_psd_tol(const SymMatrix& a);

/// True iff the smallest eigenvalue is >= -tol.
bool is_psd(const SymMatrix& a, double tol);
bool is_psd(const SymMatrix& a);

/// A <=_psd B, i.e. B - A is positive semidefinite.
bool psd_leq(const SymMatrix& a, const SymMatrix& b);

/// Frobenius inner product Tr(A B^T) = sum A_ij B_ij.
double trace_inner(const SymMatrix& a, const SymMatrix& b);

/// Symmetric square root of a psd matrix; throws NotPsd if the input has an
/// eigenvalue below -1e-10, and verifies ||S*S - A||_max <= 1e-9.
SymMatrix sqrt_psd(const SymMatrix& a);

}  // namespace convexorder::psd
