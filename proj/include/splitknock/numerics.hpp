#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "splitknock/rng.hpp"

namespace splitknock {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Dense symmetric matrix. The input is symmetrized as (M + M^T) / 2 on
// construction, so entries(i, j) == entries(j, i) holds bit-for-bit.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  const Matrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

double soft_threshold(double x, double t);

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, vectors.col(k) pairs with values(k)
};

EigenDecomposition sym_eigen(const SymMatrix& m);

double min_eigenvalue(const SymMatrix& m);

// Symmetric K with K^T K = M. Eigenvalues in [-1e-8 max(||M||_F, scale), 0)
// are clamped to zero; anything more negative throws NotPositiveSemidefinite.
// Pass `scale` when M is a difference of larger terms that may cancel.
Matrix psd_sqrt(const SymMatrix& m, double scale = 0.0);

// r x k matrix U with U^T U = I and U^T B = 0. Built from an unpivoted
// Householder QR of B (columns in natural order) whenever cols(B) + k <= r,
// otherwise from a column-pivoted QR that exposes rank(B).
Matrix orthonormal_complement(const Matrix& b, Index k);

// Cached LLT factorization that reports non-PD pivots as errors.
class Cholesky {
 public:
  explicit Cholesky(const SymMatrix& m);

  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;
  Index dim() const noexcept { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

Matrix cholesky_solve(const SymMatrix& m, const Matrix& rhs);

// n x p Gaussian design whose rows are iid N(0, S) with S(i, j) = rho^|i-j|.
// Each row is L z for the lower Cholesky factor L of S and z ~ N(0, I); for
// this covariance L z reduces to the recursion x_0 = z_0,
// x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j, which is what is evaluated.
// Normals are consumed row by row.
Matrix sample_ar1_design(Rng& rng, Index n, Index p, double rho);

// ||lhs - rhs||_F / scale, with scale > 0 required.
double relative_residual(const Matrix& lhs, const Matrix& rhs, double scale);

bool all_finite(const Matrix& m);

}  // namespace splitknock
