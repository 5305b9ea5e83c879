#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "splitknock/filter.hpp"
#include "splitknock/model.hpp"
#include "splitknock/numerics.hpp"
#include "splitknock/rng.hpp"

namespace splitknock {

// Support of a fitted coefficient vector: |coef_i| > 1e-10.
inline constexpr double kSupportThreshold = 1e-10;

struct ScreenResult {
  std::vector<Index> S_beta;   // 0-based columns of X kept
  std::vector<Index> S_gamma;  // 0-based rows of D kept
  double lambda_beta = 0.0;
  double lambda_gamma = 0.0;
};

// Support of the LASSO fit on the path half at lambda_beta.
std::vector<Index> screen_beta(const Dataset& data1, double lambda_beta);

// Support of gamma from one Split LASSO solve at lambda_gamma. `d_cols` is D
// with its columns already restricted to S_beta (and data1 likewise).
std::vector<Index> screen_gamma(const Dataset& data1, const Matrix& d_cols, double nu,
                                double lambda_gamma);

struct LassoCvOptions {
  int folds = 5;
  Index grid_size = 50;
  double min_ratio = 1e-2;
};

// k-fold CV of the LASSO over a log grid below ||X^T y / n||_inf; returns the
// smallest lambda whose mean validation MSE is within one standard error of
// the minimum (the more conservative end for screening).
double cv_lambda_beta(const Dataset& data1, Rng& rng, const LassoCvOptions& options = {});

// Smallest value on a log grid below the restricted lambda_max for which
// |S_beta| + |S_gamma(lambda)| <= n2. Throws ScreeningTooLoose when even
// gamma = 0 leaves |S_beta| > n2.
double budget_lambda_gamma(const Dataset& data1, const Matrix& d_cols, double nu, Index n2,
                           Index grid_size = 50, double min_ratio = 1e-3);

struct HdOptions {
  std::optional<double> lambda_beta;   // default: cv_lambda_beta
  std::optional<double> lambda_gamma;  // default: budget_lambda_gamma
  LassoCvOptions lasso_cv;
  // Called after beta screening with the restricted path half and D with
  // restricted columns; its return value replaces config.nu. Used for CV of nu.
  std::function<double(const Dataset&, const Matrix&)> choose_nu;
};

struct HdResult {
  SelectionResult selection;  // coordinates / selected in original rows of D
  ScreenResult screen;
};

// Screens beta then gamma on the path half of the same split that the
// downstream filter uses, then runs the filter on X[:, S_beta] with
// D[S_gamma, S_beta]. Coordinates outside S_gamma are not tested.
HdResult run_hd_pipeline(const Dataset& data, const LinearTransform& transform,
                         const SplitConfig& config, const HdOptions& options = {});

}  // namespace splitknock
