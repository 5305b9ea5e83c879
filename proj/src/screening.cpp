#include "splitknock/screening.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "splitknock/detail/pipeline.hpp"
#include "splitknock/errors.hpp"
#include "splitknock/split_lasso.hpp"

namespace splitknock {
namespace {

std::vector<Index> support(const Vector& coef) {
  std::vector<Index> out;
  for (Index i = 0; i < coef.size(); ++i) {
    if (std::abs(coef(i)) > kSupportThreshold) out.push_back(i);
  }
  return out;
}

std::vector<double> log_grid(double top, Index count, double min_ratio) {
  return LambdaGrid::log_spaced(top, count, min_ratio).values;
}

SelectionResult empty_selection(const SplitConfig& config) {
  SelectionResult out;
  out.config = config;
  out.W.resize(0);
  out.Z.resize(0);
  out.Z_tilde.resize(0);
  out.r.resize(0);
  out.diagnostics.nu = config.nu;
  return out;
}

}  // namespace

std::vector<Index> screen_beta(const Dataset& data1, double lambda_beta) {
  if (!(lambda_beta > 0.0)) throw Error(ErrorKind::InvalidParameter, "lambda_beta must be > 0");
  if (lambda_beta >= lasso_lambda_max(data1.X(), data1.y())) return {};
  return support(lasso_path(data1.X(), data1.y(), lambda_beta));
}

std::vector<Index> screen_gamma(const Dataset& data1, const Matrix& d_cols, double nu,
                                double lambda_gamma) {
  if (!(lambda_gamma > 0.0)) throw Error(ErrorKind::InvalidParameter, "lambda_gamma must be > 0");
  const SplitLassoProblem problem(data1, d_cols, nu);
  if (lambda_gamma >= problem.lambda_max()) return {};
  return support(problem.solve_at(lambda_gamma).gamma);
}

double cv_lambda_beta(const Dataset& data1, Rng& rng, const LassoCvOptions& options) {
  const Index n = data1.n();
  if (options.folds < 2 || n < options.folds) {
    throw Error(ErrorKind::InvalidFolds, "lasso CV needs 2 <= folds <= n, got folds = " +
                                             std::to_string(options.folds) + ", n = " + std::to_string(n));
  }
  const double top = lasso_lambda_max(data1.X(), data1.y());
  if (!(top > 0.0)) throw Error(ErrorKind::InvalidParameter, "lasso CV: X^T y is zero");
  const std::vector<double> grid = log_grid(top, options.grid_size, options.min_ratio);
  const Index k_count = static_cast<Index>(grid.size());

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order.begin(), order.end());

  Matrix mse(options.folds, k_count);
  for (int f = 0; f < options.folds; ++f) {
    std::vector<Index> train;
    std::vector<Index> valid;
    for (Index j = 0; j < n; ++j) {
      (j % options.folds == f ? valid : train).push_back(order[static_cast<std::size_t>(j)]);
    }
    std::sort(train.begin(), train.end());
    std::sort(valid.begin(), valid.end());
    const Dataset tr = restrict_rows(data1, train);
    const Dataset va = restrict_rows(data1, valid);
    const Matrix coefs = lasso_path(tr.X(), tr.y(), grid);
    for (Index k = 0; k < k_count; ++k) {
      mse(f, k) = (va.y() - va.X() * coefs.col(k)).squaredNorm() / static_cast<double>(va.n());
    }
  }
  const Vector mean = mse.colwise().mean();
  Index best = 0;
  for (Index k = 1; k < k_count; ++k) {
    if (mean(k) < mean(best)) best = k;
  }
  const double sd = std::sqrt((mse.col(best).array() - mean(best)).square().sum() /
                              static_cast<double>(options.folds - 1));
  const double limit = mean(best) + sd / std::sqrt(static_cast<double>(options.folds));
  Index chosen = best;
  for (Index k = k_count - 1; k > best; --k) {
    if (mean(k) <= limit) {
      chosen = k;
      break;
    }
  }
  return grid[static_cast<std::size_t>(chosen)];
}

double budget_lambda_gamma(const Dataset& data1, const Matrix& d_cols, double nu, Index n2,
                           Index grid_size, double min_ratio) {
  const Index p_kept = d_cols.cols();
  if (p_kept > n2) {
    throw Error(ErrorKind::ScreeningTooLoose,
                std::to_string(p_kept) + " beta features survive screening but n2 = " +
                    std::to_string(n2) + "; raise lambda_beta or n2");
  }
  auto problem = std::make_shared<const SplitLassoProblem>(data1, d_cols, nu);
  const LambdaGrid grid = LambdaGrid::log_spaced(problem->lambda_max(), grid_size, min_ratio);
  if (grid.empty()) return 1.0;  // gamma = 0 at every lambda
  const BetaPath path = solve_beta_path(problem, grid);
  for (Index k = grid.size() - 1; k >= 0; --k) {
    const Index kept = static_cast<Index>(support(path.gamma.col(k)).size());
    if (p_kept + kept <= n2) return grid.values[static_cast<std::size_t>(k)];
  }
  return grid.values.front();
}

HdResult run_hd_pipeline(const Dataset& data, const LinearTransform& transform,
                         const SplitConfig& config, const HdOptions& options) {
  config.validate(data.n());
  if (transform.p() != data.p()) {
    throw Error(ErrorKind::DimensionMismatch, "D has " + std::to_string(transform.p()) +
                                                  " columns but X has " + std::to_string(data.p()));
  }
  const DataSplit split = detail::make_split(data.n(), config);
  const Dataset half1 = restrict_rows(data, split.idx1);
  const Dataset half2 = restrict_rows(data, split.idx2);
  const Index n2 = half2.n();

  HdResult out;
  if (options.lambda_beta) {
    out.screen.lambda_beta = *options.lambda_beta;
  } else {
    Rng cv_rng(derive_seed(config.seed, 1));
    out.screen.lambda_beta = cv_lambda_beta(half1, cv_rng, options.lasso_cv);
  }
  out.screen.S_beta = screen_beta(half1, out.screen.lambda_beta);

  SplitConfig cfg = config;
  auto finish_empty = [&]() {
    out.selection = empty_selection(cfg);
    out.selection.diagnostics.idx1 = split.idx1;
    out.selection.diagnostics.idx2 = split.idx2;
    out.selection.diagnostics.screened_beta = out.screen.S_beta;
    return out;
  };
  if (out.screen.S_beta.empty()) return finish_empty();

  const Dataset half1_b(select_columns(half1.X(), out.screen.S_beta), half1.y());
  const Dataset half2_b(select_columns(half2.X(), out.screen.S_beta), half2.y());
  const Matrix d_cols = select_columns(transform.D(), out.screen.S_beta);
  if (options.choose_nu) cfg.nu = options.choose_nu(half1_b, d_cols);

  out.screen.lambda_gamma = options.lambda_gamma
                                ? *options.lambda_gamma
                                : budget_lambda_gamma(half1_b, d_cols, cfg.nu, n2);
  out.screen.S_gamma = screen_gamma(half1_b, d_cols, cfg.nu, out.screen.lambda_gamma);
  const Index dims = static_cast<Index>(out.screen.S_beta.size() + out.screen.S_gamma.size());
  if (dims > n2) {
    throw Error(ErrorKind::ScreeningTooLoose,
                "|S_beta| + |S_gamma| = " + std::to_string(dims) + " exceeds n2 = " +
                    std::to_string(n2) + "; raise lambda_gamma");
  }
  if (out.screen.S_gamma.empty()) return finish_empty();

  const Matrix d_kept = select_rows(d_cols, out.screen.S_gamma);
  out.selection = detail::run_on_halves(half1_b, half2_b, d_kept, cfg);
  out.selection.coordinates = out.screen.S_gamma;
  for (auto& idx : out.selection.selected) idx = out.screen.S_gamma[static_cast<std::size_t>(idx)];
  out.selection.diagnostics.idx1 = split.idx1;
  out.selection.diagnostics.idx2 = split.idx2;
  out.selection.diagnostics.screened_beta = out.screen.S_beta;
  return out;
}

}  // namespace splitknock
