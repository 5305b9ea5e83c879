#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "splitknock/model.hpp"
#include "splitknock/numerics.hpp"

namespace splitknock {

// Strictly decreasing, log-spaced regularization values. values.front() is
// lambda_max; values.back() is lambda_max * min_ratio. Empty when
// lambda_max == 0 (nothing ever activates).
struct LambdaGrid {
  std::vector<double> values;

  static LambdaGrid log_spaced(double lambda_max, Index count, double min_ratio);

  Index size() const noexcept { return static_cast<Index>(values.size()); }
  bool empty() const noexcept { return values.empty(); }
};

struct SolverOptions {
  // Stop once a full sweep moves no coordinate of gamma by more than
  // tolerance * (1 + ||gamma||_inf).
  double tolerance = 1e-10;
  int max_sweeps = 10000;
};

// One Split LASSO solution. `resid` is (D beta - gamma) / nu, which equals
// lambda * rho for a subgradient rho of ||gamma||_1 at optimality.
struct PathPoint {
  Vector gamma;
  Vector resid;
  Vector beta;
  Vector d_beta;
  int sweeps = 0;
  bool converged = false;
};

// Anything that can produce D beta(lambda) at an arbitrary lambda. Used by
// the significance scan to refine brackets between grid points.
class PathEvaluator {
 public:
  virtual ~PathEvaluator() = default;
  virtual Index m() const = 0;
  // warm_gamma / warm_resid may be empty; when both are given they must be
  // consistent (resid affine in gamma), as produced by interpolating two
  // earlier solutions.
  virtual PathPoint solve_at(double lambda, const Vector& warm_gamma,
                             const Vector& warm_resid) const = 0;
};

struct KktResidual {
  double subgradient_excess = 0.0;  // max(0, max_i |rho_i| - 1)
  double sign_mismatch = 0.0;       // max over gamma_i != 0 of |rho_i - sign(gamma_i)|
  double stationarity = 0.0;        // ||M beta - b - D^T gamma / nu||_inf / (1 + ||b||_inf)

  bool within(double tol) const {
    return subgradient_excess <= tol && sign_mismatch <= tol && stationarity <= tol;
  }
};

// The Split LASSO objective
//   (1/(2n)) ||y - X beta||^2 + (1/(2 nu)) ||D beta - gamma||^2 + lambda ||gamma||_1
// on one dataset (n = its row count). M = X^T X / n + D^T D / nu is factored
// once; beta is profiled out exactly, leaving an m-dimensional LASSO in gamma
// with Gram H = (I - D M^{-1} D^T / nu) / nu that is solved by cyclic
// coordinate descent.
class SplitLassoProblem final : public PathEvaluator {
 public:
  SplitLassoProblem(const Dataset& data, const Matrix& d, double nu, SolverOptions options = {});

  Index m() const override { return d_.rows(); }
  Index p() const noexcept { return d_.cols(); }
  double nu() const noexcept { return nu_; }

  // Smallest lambda at which gamma = 0 is optimal: ||D beta_inf||_inf / nu.
  double lambda_max() const noexcept { return lambda_max_; }
  const Vector& beta_inf() const noexcept { return beta_inf_; }
  const Vector& d_beta_inf() const noexcept { return d_beta_inf_; }
  const Matrix& D() const noexcept { return d_; }

  PathPoint solve_at(double lambda, const Vector& warm_gamma,
                     const Vector& warm_resid) const override;
  PathPoint solve_at(double lambda) const { return solve_at(lambda, Vector(), Vector()); }

  Vector beta_from_gamma(const Vector& gamma) const;
  double objective(const Vector& beta, const Vector& gamma, double lambda) const;
  KktResidual kkt(const Vector& beta, const Vector& gamma, double lambda) const;

  // Validation MSE ||y - X beta||^2 / n on another dataset.
  static double prediction_mse(const Dataset& data, const Vector& beta);

 private:
  void run_sweeps(double lambda, Vector& gamma, Vector& resid, PathPoint& out) const;
  bool exact_active_step(double lambda, const std::vector<Index>& active, Vector& gamma,
                         Vector& resid) const;

  Matrix x_;
  Vector y_;
  Matrix d_;
  double nu_;
  SolverOptions options_;
  Vector xty_n_;          // X^T y / n
  Vector beta_inf_;       // M^{-1} X^T y / n
  Vector d_beta_inf_;     // D beta_inf
  Matrix minv_dt_;        // M^{-1} D^T
  Matrix gram_;           // H
  Vector c_;              // D beta_inf / nu
  double lambda_max_ = 0.0;
  std::shared_ptr<const Cholesky> factor_;
};

double lambda_max(const Dataset& data1, const Matrix& d, double nu);

// Solutions of the Split LASSO on the grid (column k <-> grid.values[k]),
// warm-started down the grid.
struct BetaPath {
  LambdaGrid grid;
  double nu = 1.0;
  Matrix beta;    // p x K
  Matrix d_beta;  // m x K
  Matrix gamma;   // m x K
  Matrix resid;   // m x K
  std::vector<int> sweeps;
  std::vector<bool> converged;
  // Solution for every lambda >= grid.values.front(); gamma = 0 there.
  Vector beta_inf;
  Vector d_beta_inf;
  std::shared_ptr<const PathEvaluator> evaluator;

  Index m() const noexcept { return d_beta_inf.size(); }
  bool all_converged() const;
};

BetaPath solve_beta_path(std::shared_ptr<const SplitLassoProblem> problem, const LambdaGrid& grid);
BetaPath solve_beta_path(const Dataset& data1, const Matrix& d, double nu, const LambdaGrid& grid);

// Largest lambda at which |a_i(lambda)| > lambda, where
// a(lambda) = D beta(lambda) / nu + zeta: the first activation met scanning
// down from lambda_max, refined by bisection between the bracketing grid
// points (each step re-solves the path at the midpoint, warm-started from
// the bracket ends) and a final secant step on |a_i| - lambda.
struct ActivationLevels {
  Vector level;
  Eigen::VectorXi sign;       // sign(a_i) just below the activation level
  Vector bracket_width;       // 0 when solved in closed form
  int nonconverged_refinements = 0;
};

ActivationLevels activation_levels(const BetaPath& path, const Vector& zeta, int refine_steps);

struct FeatureStats {
  Vector Z;
  Vector Z_tilde;
  Eigen::VectorXi r;
};

// Z_i: largest lambda with gamma_i(lambda) != 0, i.e. |D beta(lambda)|_i > lambda nu.
// r_i: sign of gamma_i as it becomes nonzero (0 when never active).
std::pair<Vector, Eigen::VectorXi> compute_Z_r(const BetaPath& path, int refine_steps);

// Z~_i: largest lambda with |D beta(lambda)_i / nu + zeta_i| > lambda.
Vector compute_Z_tilde(const BetaPath& path, const Vector& zeta, int refine_steps);

// argmin (1/(2n)) ||y - X beta||^2 + lambda ||beta||_1 by cyclic coordinate
// descent, optionally warm-started.
Vector lasso_path(const Matrix& x, const Vector& y, double lambda,
                  const std::optional<Vector>& warm = std::nullopt);

// Warm-started solutions along a decreasing grid, one column per value.
Matrix lasso_path(const Matrix& x, const Vector& y, const std::vector<double>& lambdas);

// ||X^T y / n||_inf: the smallest lambda giving the zero solution.
double lasso_lambda_max(const Matrix& x, const Vector& y);

}  // namespace splitknock
