#include "splitknock/knockoff_copy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splitknock/errors.hpp"

namespace splitknock {

Matrix AugmentedDesign::X2() const { return A_beta.topRows(n2) * std::sqrt(static_cast<double>(n2)); }

AugmentedDesign build_augmented(const Dataset& data2, const Matrix& d, double nu) {
  if (d.cols() != data2.p()) {
    throw Error(ErrorKind::DimensionMismatch, "augmented design: D has " + std::to_string(d.cols()) +
                                                  " columns, X2 has " + std::to_string(data2.p()));
  }
  if (!(nu > 0.0)) throw Error(ErrorKind::InvalidParameter, "augmented design: nu must be > 0");
  AugmentedDesign aug;
  aug.n2 = data2.n();
  aug.m = d.rows();
  aug.p = d.cols();
  aug.nu = nu;
  const double root_n2 = std::sqrt(static_cast<double>(aug.n2));
  const double root_nu = std::sqrt(nu);
  const Index rows = aug.n2 + aug.m;
  aug.A_beta.resize(rows, aug.p);
  aug.A_beta << data2.X() / root_n2, d / root_nu;
  aug.A_gamma = Matrix::Zero(rows, aug.m);
  aug.A_gamma.bottomRows(aug.m).diagonal().setConstant(-1.0 / root_nu);
  aug.y_tilde = Vector::Zero(rows);
  aug.y_tilde.head(aug.n2) = data2.y() / root_n2;
  return aug;
}

SymMatrix compute_C_nu(const AugmentedDesign& aug) {
  const Matrix sigma_bg = aug.A_beta.transpose() * aug.A_gamma;
  const Cholesky sigma_bb(SymMatrix(aug.A_beta.transpose() * aug.A_beta));
  Matrix c = aug.A_gamma.transpose() * aug.A_gamma;
  c.noalias() -= sigma_bg.transpose() * sigma_bb.solve(sigma_bg);
  return SymMatrix(c);
}

Vector s_equicorrelated(const SymMatrix& c, double nu) {
  if (!(nu > 0.0)) throw Error(ErrorKind::InvalidParameter, "s: nu must be > 0");
  double lambda_min = min_eigenvalue(c);
  if (lambda_min < -1e-8) {
    throw Error(ErrorKind::NotPositiveSemidefinite,
                "C_nu has eigenvalue " + std::to_string(lambda_min));
  }
  lambda_min = std::max(lambda_min, 0.0);
  return Vector::Constant(c.dim(), std::min(2.0 * lambda_min, 1.0 / nu));
}

KnockoffCopy construct_copy(const AugmentedDesign& aug, const Vector& s) {
  return construct_copy(aug, s, compute_C_nu(aug));
}

KnockoffCopy construct_copy(const AugmentedDesign& aug, const Vector& s, const SymMatrix& c_nu) {
  const Index m = aug.m;
  const Index p = aug.p;
  if (aug.n2 < m + p) {
    throw Error(ErrorKind::InsufficientSamples,
                "copy construction needs n2 >= m + p, got n2 = " + std::to_string(aug.n2) +
                    ", m + p = " + std::to_string(m + p) + " (screen features first)");
  }
  if (s.size() != m || c_nu.dim() != m) {
    throw Error(ErrorKind::DimensionMismatch, "copy construction: s / C_nu size mismatch");
  }
  if ((s.array() < 0.0).any() || !s.allFinite()) {
    throw Error(ErrorKind::InfeasibleS, "s must be finite and non-negative");
  }
  KnockoffCopy copy;
  copy.s = s;
  copy.C_nu = c_nu;
  if ((s.array() == 0.0).all()) {
    copy.A_tilde = aug.A_gamma;
    return copy;
  }
  const Matrix two_c_minus_s = 2.0 * c_nu.matrix() - Matrix(s.asDiagonal());
  if (min_eigenvalue(SymMatrix(two_c_minus_s)) < -1e-8 * std::max(1.0, two_c_minus_s.norm())) {
    throw Error(ErrorKind::InfeasibleS, "2 C_nu - diag(s) is not positive semidefinite");
  }

  Matrix cinv_s;
  try {
    cinv_s = Cholesky(c_nu).solve(Matrix(s.asDiagonal()));
  } catch (const Error&) {
    throw Error(ErrorKind::InfeasibleS, "C_nu is singular while s is nonzero");
  }
  const Matrix sigma_bg = aug.A_beta.transpose() * aug.A_gamma;
  const Cholesky sigma_bb(SymMatrix(aug.A_beta.transpose() * aug.A_beta));
  const Matrix regress = sigma_bb.solve(sigma_bg);  // Sbb^{-1} Sbg

  Matrix a_tilde = aug.A_gamma * (Matrix::Identity(m, m) - cinv_s);
  a_tilde.noalias() += aug.A_beta * (regress * cinv_s);

  const Matrix k_target = 2.0 * Matrix(s.asDiagonal()) - s.asDiagonal() * cinv_s;
  const Matrix k = psd_sqrt(SymMatrix(k_target), 2.0 * s.norm());

  Matrix joint(aug.A_beta.rows(), p + m);
  joint << aug.A_beta, aug.A_gamma;
  const Matrix u = orthonormal_complement(joint, m);
  a_tilde.noalias() += u * k;
  copy.A_tilde = std::move(a_tilde);
  return copy;
}

Vector compute_zeta(const KnockoffCopy& copy, const AugmentedDesign& aug) {
  if (copy.A_tilde.rows() != aug.y_tilde.size() || copy.A_tilde.cols() != aug.m) {
    throw Error(ErrorKind::DimensionMismatch, "zeta: copy and augmented design disagree");
  }
  return copy.A_tilde.transpose() * aug.y_tilde;
}

double CopyResiduals::max() const {
  return std::max({gram, cross, self, bottom_block, converts_x2, top_gram});
}

CopyResiduals copy_residuals(const KnockoffCopy& copy, const AugmentedDesign& aug) {
  const Index m = aug.m;
  const Index n2 = aug.n2;
  const double nu = aug.nu;
  const Matrix& at = copy.A_tilde;
  const Matrix s = copy.s.asDiagonal();
  const Matrix sigma_gg = aug.A_gamma.transpose() * aug.A_gamma;
  const Matrix sigma_bg = aug.A_beta.transpose() * aug.A_gamma;
  const double gram_scale = sigma_gg.norm();
  const double d_norm = aug.A_beta.bottomRows(m).norm() * std::sqrt(nu);  // ||D||_F

  CopyResiduals out;
  out.gram = relative_residual(at.transpose() * at, sigma_gg, gram_scale);
  out.cross = relative_residual(aug.A_beta.transpose() * at, sigma_bg,
                                std::max(sigma_bg.norm(), 1e-300));
  out.self = relative_residual(aug.A_gamma.transpose() * at, sigma_gg - s, gram_scale);

  const Matrix top = at.topRows(n2);
  const Matrix bottom = at.bottomRows(m);
  const Matrix expected_bottom =
      -Matrix::Identity(m, m) / std::sqrt(nu) + std::sqrt(nu) * s;
  out.bottom_block = relative_residual(bottom, expected_bottom, std::sqrt(static_cast<double>(m) / nu));

  const double root_n2 = std::sqrt(static_cast<double>(n2));
  const Matrix d = aug.A_beta.bottomRows(m) * std::sqrt(nu);
  out.converts_x2 = relative_residual(top.transpose() * aug.X2(), -root_n2 * s * d,
                                      std::max(root_n2 * d_norm / nu, 1e-300));
  out.top_gram = relative_residual(top.transpose() * top,
                                   s * (2.0 * Matrix::Identity(m, m) - nu * s), gram_scale);
  return out;
}

}  // namespace splitknock
