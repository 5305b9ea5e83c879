#pragma once

#include "splitknock/model.hpp"
#include "splitknock/numerics.hpp"

namespace splitknock {

// The copy-sample problem rewritten as a partially penalized LASSO in gamma:
//   A_beta  = [X2 / sqrt(n2) ; D / sqrt(nu)]     (n2 + m) x p
//   A_gamma = [0             ; -I_m / sqrt(nu)]  (n2 + m) x m
//   y_tilde = [y2 / sqrt(n2) ; 0_m]
struct AugmentedDesign {
  Matrix A_beta;
  Matrix A_gamma;
  Vector y_tilde;
  Index n2 = 0;
  Index m = 0;
  Index p = 0;
  double nu = 1.0;

  // X2 recovered from the top block of A_beta.
  Matrix X2() const;
};

AugmentedDesign build_augmented(const Dataset& data2, const Matrix& d, double nu);

// Schur complement of A_beta^T A_beta in the joint Gram matrix:
//   C_nu = I / nu - D (X2^T X2 / n2 + D^T D / nu)^{-1} D^T / nu^2.
SymMatrix compute_C_nu(const AugmentedDesign& aug);

// Constant s_i = min(2 lambda_min(C), 1 / nu). lambda_min in [-1e-8, 0) is
// treated as 0; below that throws NotPositiveSemidefinite.
Vector s_equicorrelated(const SymMatrix& c, double nu);

struct KnockoffCopy {
  Matrix A_tilde;  // (n2 + m) x m
  Vector s;
  SymMatrix C_nu;
};

// A~ = A_gamma (I - C^{-1} S) + A_beta Sbb^{-1} Sbg C^{-1} S + U K with
// S = diag(s), U an orthonormal complement of [A_beta, A_gamma] and K the
// symmetric root of 2S - S C^{-1} S. Depends on (X2, D, nu, s) only.
KnockoffCopy construct_copy(const AugmentedDesign& aug, const Vector& s);
KnockoffCopy construct_copy(const AugmentedDesign& aug, const Vector& s, const SymMatrix& c_nu);

// zeta = A~^T y_tilde = A~_top^T y2 / sqrt(n2).
Vector compute_zeta(const KnockoffCopy& copy, const AugmentedDesign& aug);

// Relative Frobenius residuals of the copy conditions and of the block
// structure they imply. Each is scaled by the norm of the matching block of
// the original design, so the checks stay meaningful when s is near 0 or at
// its 1 / nu cap:
//   gram         A~^T A~        vs A_g^T A_g              / ||A_g^T A_g||
//   cross        A_b^T A~       vs A_b^T A_g              / ||A_b^T A_g||
//   self         A_g^T A~       vs A_g^T A_g - S          / ||A_g^T A_g||
//   bottom_block A~_bottom      vs -I/sqrt(nu) + sqrt(nu) S / ||I / sqrt(nu)||
//   converts_x2  A~_top^T X2    vs -sqrt(n2) S D          / (sqrt(n2) ||D|| / nu)
//   top_gram     A~_top^T A~_top vs S (2I - nu S)          / ||A_g^T A_g||
struct CopyResiduals {
  double gram = 0.0;
  double cross = 0.0;
  double self = 0.0;
  double bottom_block = 0.0;
  double converts_x2 = 0.0;
  double top_gram = 0.0;

  double max() const;
  bool within(double tol) const { return max() <= tol; }
};

CopyResiduals copy_residuals(const KnockoffCopy& copy, const AugmentedDesign& aug);

}  // namespace splitknock
