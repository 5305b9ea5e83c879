#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "splitknock/errors.hpp"
#include "splitknock/numerics.hpp"
#include "splitknock/rng.hpp"

using namespace splitknock;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::InternalInvariantViolation;
}

}  // namespace

TEST_CASE("soft_threshold shrinks toward zero") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  for (double x : {-2.5, -1e-9, 0.0, 1e-300, 7.25}) CHECK(soft_threshold(x, 0.0) == x);
}

TEST_CASE("SymMatrix symmetrizes on construction") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 4.0, 3.0;
  const SymMatrix s(a);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == 3.0);
  CHECK(kind_of([] { SymMatrix(Matrix(2, 3)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("sym_eigen on trivial matrices") {
  const auto id = sym_eigen(SymMatrix(Matrix::Identity(3, 3)));
  for (Index i = 0; i < 3; ++i) CHECK(id.values(i) == doctest::Approx(1.0).epsilon(1e-14));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 0.5;
  CHECK(min_eigenvalue(SymMatrix(d)) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sym_eigen satisfies M V = V diag(lambda) and V^T V = I") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index dim = 2 + trial % 7;
    const Matrix b = oracle::gaussian_matrix(rng, dim + 3, dim);
    const SymMatrix m(b.transpose() * b);
    const auto e = sym_eigen(m);
    const double scale = 1e-10 * static_cast<double>(dim) * m.matrix().norm();
    CHECK((m.matrix() * e.vectors - e.vectors * e.values.asDiagonal()).norm() <= scale);
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(dim, dim)).norm() <= 1e-10 * dim);
    for (Index i = 1; i < dim; ++i) CHECK(e.values(i - 1) <= e.values(i));
  }
}

TEST_CASE("sym_eigen of A^T A matches a power-iteration oracle") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Index dim = 3 + trial % 4;
    const Matrix a = oracle::gaussian_matrix(rng, 2 * dim, dim);
    const Matrix gram = a.transpose() * a;
    const Vector expected = oracle::power_iteration_eigenvalues(gram);
    const Vector got = sym_eigen(SymMatrix(gram)).values;
    for (Index i = 0; i < dim; ++i) {
      CHECK(std::abs(got(i) - expected(i)) <= 1e-8 * std::abs(expected(i)));
    }
  }
}

TEST_CASE("sym_eigen rejects non-finite input") {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(kind_of([&] { sym_eigen(SymMatrix(m)); }) == ErrorKind::NonFiniteInput);
}

TEST_CASE("psd_sqrt reconstructs the input") {
  CHECK((psd_sqrt(SymMatrix(Matrix::Identity(3, 3))) - Matrix::Identity(3, 3)).norm() < 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4.0, 9.0;
  const Matrix k = psd_sqrt(SymMatrix(d));
  CHECK((k.transpose() * k - d).norm() <= 1e-12);
  CHECK(std::abs(k(0, 0)) == doctest::Approx(2.0));
  CHECK(std::abs(k(1, 1)) == doctest::Approx(3.0));

  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Index dim = 2 + trial % 6;
    // Rank deficient on odd trials.
    const Matrix b = oracle::gaussian_matrix(rng, trial % 2 ? dim - 1 : dim + 2, dim);
    const Matrix gram = b.transpose() * b;
    const Matrix root = psd_sqrt(SymMatrix(gram));
    CHECK((root.transpose() * root - gram).norm() <= 1e-8 * gram.norm());
  }
}

TEST_CASE("psd_sqrt clamps tiny negative eigenvalues and rejects real ones") {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << 1.0, -1e-12;
  const Matrix k = psd_sqrt(SymMatrix(m));
  CHECK(k.allFinite());
  CHECK((k.transpose() * k - Matrix(Vector(Vector::Unit(2, 0)).asDiagonal())).norm() < 1e-12);
  m(1, 1) = -1e-3;
  CHECK(kind_of([&] { psd_sqrt(SymMatrix(m)); }) == ErrorKind::NotPositiveSemidefinite);
}

TEST_CASE("orthonormal_complement is orthonormal and orthogonal to the input") {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Index rows = 12;
    const Index cols = 3 + trial % 5;
    const Matrix b = oracle::gaussian_matrix(rng, rows, cols);
    const Index k = rows - cols;
    const Matrix u = orthonormal_complement(b, k);
    CHECK(u.rows() == rows);
    CHECK(u.cols() == k);
    CHECK((u.transpose() * u - Matrix::Identity(k, k)).norm() < 1e-12);
    CHECK((u.transpose() * b).norm() < 1e-12 * b.norm());
  }
  CHECK(kind_of([] { orthonormal_complement(Matrix::Identity(4, 4), 1); }) ==
        ErrorKind::InsufficientDimension);
}

TEST_CASE("orthonormal_complement handles rank-deficient inputs") {
  Rng rng(15);
  Matrix b = oracle::gaussian_matrix(rng, 8, 4);
  b.col(3) = b.col(0) + b.col(1);  // rank 3
  const Matrix u = orthonormal_complement(b, 5);
  CHECK((u.transpose() * u - Matrix::Identity(5, 5)).norm() < 1e-12);
  CHECK((u.transpose() * b).norm() < 1e-12 * b.norm());
}

TEST_CASE("Cholesky solves and rejects indefinite matrices") {
  Rng rng(16);
  const Matrix b = oracle::gaussian_matrix(rng, 10, 4);
  const SymMatrix m(b.transpose() * b);
  const Vector rhs = oracle::gaussian_vector(rng, 4);
  const Cholesky chol(m);
  CHECK((m.matrix() * chol.solve(rhs) - rhs).norm() < 1e-10);
  CHECK((m.matrix() * cholesky_solve(m, Matrix(rhs)) - rhs).norm() < 1e-10);
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK(kind_of([&] { Cholesky{SymMatrix(bad)}; }) == ErrorKind::NotPositiveDefinite);
  CHECK(kind_of([] { Cholesky{SymMatrix(Matrix::Zero(2, 2))}; }) == ErrorKind::NotPositiveDefinite);
}

TEST_CASE("Rng is reproducible per seed") {
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.uniform_index(7) < 7u);
  }
  CHECK(derive_seed(5, 1) != derive_seed(5, 2));
  CHECK(derive_seed(5, 1) == derive_seed(5, 1));
}

TEST_CASE("Rng normals have unit moments") {
  Rng rng(7);
  const int n = 200000;
  double s1 = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  const double mean = s1 / n;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("sample_ar1_design has AR(1) covariance") {
  Rng rng(2024);
  const Index n = 20000;
  const double rho = 0.5;
  const Matrix x = sample_ar1_design(rng, n, 4, rho);
  const Matrix cov = x.transpose() * x / static_cast<double>(n);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      const double expected = std::pow(rho, std::abs(static_cast<double>(i - j)));
      // Var of a sample covariance of unit-variance Gaussians is (1 + rho^2) / n at most 2 / n.
      CHECK(std::abs(cov(i, j) - expected) < 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
    }
  }
  CHECK(kind_of([&] { sample_ar1_design(rng, 5, 5, 1.0); }) == ErrorKind::InvalidParameter);
  CHECK(kind_of([&] { sample_ar1_design(rng, 0, 5, 0.5); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("sample_ar1_design is deterministic per seed") {
  Rng a(3);
  Rng b(3);
  CHECK(sample_ar1_design(a, 10, 6, 0.5) == sample_ar1_design(b, 10, 6, 0.5));
}

TEST_CASE("cholesky_solve worked examples and random residual") {
  const Vector b = (Vector(3) << 1.0, -2.0, 3.0).finished();
  CHECK((cholesky_solve(SymMatrix(Matrix::Identity(3, 3)), Matrix(b)) - b).norm() == 0.0);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 4.0;
  const Matrix x = cholesky_solve(SymMatrix(d), Matrix((Vector(2) << 2.0, 4.0).finished()));
  CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Index dim = 2 + trial;
    const Matrix a = oracle::gaussian_matrix(rng, dim + 5, dim);
    const SymMatrix m(a.transpose() * a);
    const Matrix rhs = oracle::gaussian_matrix(rng, dim, 2);
    CHECK((m.matrix() * cholesky_solve(m, rhs) - rhs).norm() <= 1e-9 * rhs.norm());
  }
}

TEST_CASE("orthonormal_complement canonical basis example") {
  const Matrix b = Matrix::Identity(3, 3).leftCols(1);
  const Matrix u = orthonormal_complement(b, 2);
  CHECK(u.row(0).norm() < 1e-15);
  CHECK((u.transpose() * u - Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK((u.transpose() * b).norm() < 1e-15);
}

TEST_CASE("orthonormal_complement invariant on 100 random inputs") {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const Index r = 4 + static_cast<Index>(rng.uniform_index(30));
    const Index c = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(r - 1)));
    const Index k = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(r - c)));
    const Matrix b = oracle::gaussian_matrix(rng, r, c);
    const Matrix u = orthonormal_complement(b, k);
    const double tol = 1e-10 * static_cast<double>(r);
    CHECK((u.transpose() * u - Matrix::Identity(k, k)).norm() <= tol);
    CHECK((u.transpose() * b).norm() <= tol * std::max(1.0, b.norm()));
  }
}

TEST_CASE("orthonormal_complement is deterministic") {
  Rng rng(19);
  const Matrix b = oracle::gaussian_matrix(rng, 9, 4);
  CHECK(orthonormal_complement(b, 5) == orthonormal_complement(b, 5));
}

TEST_CASE("psd_sqrt invariant on 100 random PSD inputs") {
  Rng rng(20);
  for (int trial = 0; trial < 100; ++trial) {
    const Index dim = 1 + static_cast<Index>(rng.uniform_index(50));
    const Index rank = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(dim + 3)));
    const Matrix b = oracle::gaussian_matrix(rng, rank, dim);
    const Matrix m = b.transpose() * b;
    const Matrix k = psd_sqrt(SymMatrix(m));
    CHECK((k.transpose() * k - m).norm() <= 1e-8 * m.norm());
  }
}

TEST_CASE("sample_ar1_design empirical correlations at 50 000 rows") {
  const auto corr = [](const Matrix& x, Index i, Index j) {
    const Vector a = x.col(i).array() - x.col(i).mean();
    const Vector b = x.col(j).array() - x.col(j).mean();
    return a.dot(b) / (a.norm() * b.norm());
  };
  Rng rng0(21);
  const Matrix x0 = sample_ar1_design(rng0, 50000, 4, 0.0);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) CHECK(std::abs(corr(x0, i, j) - (i == j ? 1.0 : 0.0)) < 0.02);
  }
  Rng rng5(22);
  const Matrix x5 = sample_ar1_design(rng5, 50000, 4, 0.5);
  CHECK(std::abs(corr(x5, 0, 1) - 0.5) < 0.02);
  CHECK(std::abs(corr(x5, 0, 2) - 0.25) < 0.02);
}
