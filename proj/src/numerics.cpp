#include "splitknock/numerics.hpp"

#include <algorithm>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <string>

#include "splitknock/errors.hpp"

namespace splitknock {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "symmetric matrix must be square, got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
  }
  m_ = 0.5 * (m + m.transpose());
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

EigenDecomposition sym_eigen(const SymMatrix& m) {
  if (!m.matrix().allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "sym_eigen: matrix has non-finite entries");
  }
  if (m.dim() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NonFiniteInput, "sym_eigen: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const SymMatrix& m) {
  if (!m.matrix().allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "min_eigenvalue: matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

Matrix psd_sqrt(const SymMatrix& m, double scale) {
  const auto eig = sym_eigen(m);
  if (m.dim() == 0) return {};
  const double floor = -1e-8 * std::max(m.matrix().norm(), scale);
  Vector roots(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) {
    const double v = eig.values(i);
    if (v < floor) {
      throw Error(ErrorKind::NotPositiveSemidefinite,
                  "psd_sqrt: eigenvalue " + std::to_string(v) + " below tolerance " +
                      std::to_string(floor));
    }
    roots(i) = v > 0.0 ? std::sqrt(v) : 0.0;
  }
  Matrix k = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (k + k.transpose());
}

Matrix orthonormal_complement(const Matrix& b, Index k) {
  const Index r = b.rows();
  const Index c = b.cols();
  if (k <= 0) {
    throw Error(ErrorKind::InvalidParameter, "orthonormal_complement: k must be positive");
  }
  if (!b.allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "orthonormal_complement: non-finite input");
  }
  auto pick = [&](const auto& householder_q, Index offset) {
    Matrix selector = Matrix::Zero(r, k);
    for (Index j = 0; j < k; ++j) selector(offset + j, j) = 1.0;
    return Matrix(householder_q * selector);
  };
  if (c + k <= r) {
    Eigen::HouseholderQR<Matrix> qr(b);
    return pick(qr.householderQ(), c);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  const Index rank = qr.rank();
  if (rank + k > r) {
    throw Error(ErrorKind::InsufficientDimension,
                "orthonormal_complement: rank " + std::to_string(rank) + " + k " +
                    std::to_string(k) + " exceeds " + std::to_string(r) + " rows");
  }
  return pick(qr.householderQ(), rank);
}

Cholesky::Cholesky(const SymMatrix& m) {
  if (!m.matrix().allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "cholesky: non-finite input");
  }
  llt_.compute(m.matrix());
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "cholesky: matrix is not positive definite");
  }
  // LLT only rejects non-positive pivots; a pivot lost to rounding still
  // yields a useless factor, so reject relative pivots at machine precision.
  const Vector diag = llt_.matrixLLT().diagonal();
  const double scale = m.matrix().diagonal().cwiseAbs().maxCoeff();
  if (diag.size() > 0 && diag.cwiseAbs2().minCoeff() <= 1e-14 * scale) {
    throw Error(ErrorKind::NotPositiveDefinite, "cholesky: matrix is numerically singular");
  }
}

Matrix Cholesky::solve(const Matrix& rhs) const {
  if (rhs.rows() != dim()) {
    throw Error(ErrorKind::DimensionMismatch, "cholesky solve: rhs rows do not match");
  }
  return llt_.solve(rhs);
}

Vector Cholesky::solve(const Vector& rhs) const {
  if (rhs.size() != dim()) {
    throw Error(ErrorKind::DimensionMismatch, "cholesky solve: rhs size does not match");
  }
  return llt_.solve(rhs);
}

Matrix cholesky_solve(const SymMatrix& m, const Matrix& rhs) { return Cholesky(m).solve(rhs); }

Matrix sample_ar1_design(Rng& rng, Index n, Index p, double rho) {
  if (n < 1 || p < 1) {
    throw Error(ErrorKind::InvalidParameter, "sample_ar1_design: n and p must be positive");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "sample_ar1_design: rho must lie in [0, 1)");
  }
  const double innovation = std::sqrt(1.0 - rho * rho);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    double prev = rng.normal();
    x(i, 0) = prev;
    for (Index j = 1; j < p; ++j) {
      prev = rho * prev + innovation * rng.normal();
      x(i, j) = prev;
    }
  }
  return x;
}

double relative_residual(const Matrix& lhs, const Matrix& rhs, double scale) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "relative_residual: shape mismatch");
  }
  if (!(scale > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "relative_residual: scale must be positive");
  }
  return (lhs - rhs).norm() / scale;
}

}  // namespace splitknock
