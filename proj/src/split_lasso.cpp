#include "splitknock/split_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splitknock/errors.hpp"

namespace splitknock {
namespace {

constexpr int kExactStepAfter = 8;

}  // namespace

LambdaGrid LambdaGrid::log_spaced(double lambda_max, Index count, double min_ratio) {
  if (count < 1) throw Error(ErrorKind::InvalidParameter, "lambda grid needs at least one point");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "lambda_min_ratio must lie in (0, 1)");
  }
  LambdaGrid grid;
  if (!(lambda_max > 0.0)) return grid;
  grid.values.resize(static_cast<std::size_t>(count));
  grid.values.front() = lambda_max;
  const double log_ratio = std::log(min_ratio);
  for (Index k = 1; k < count; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(count - 1);
    grid.values[static_cast<std::size_t>(k)] = lambda_max * std::exp(t * log_ratio);
  }
  if (count > 1) grid.values.back() = lambda_max * min_ratio;
  return grid;
}

SplitLassoProblem::SplitLassoProblem(const Dataset& data, const Matrix& d, double nu,
                                     SolverOptions options)
    : x_(data.X()), y_(data.y()), d_(d), nu_(nu), options_(options) {
  if (d.cols() != data.p()) {
    throw Error(ErrorKind::DimensionMismatch, "split lasso: D has " + std::to_string(d.cols()) +
                                                  " columns, X has " + std::to_string(data.p()));
  }
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw Error(ErrorKind::InvalidParameter, "split lasso: nu must be positive");
  }
  if (data.n() < 1) throw Error(ErrorKind::InvalidParameter, "split lasso: empty dataset");
  const double n = static_cast<double>(data.n());
  xty_n_ = x_.transpose() * y_ / n;
  Matrix m = x_.transpose() * x_ / n;
  m.noalias() += d_.transpose() * d_ / nu_;
  factor_ = std::make_shared<const Cholesky>(SymMatrix(m));
  beta_inf_ = factor_->solve(xty_n_);
  d_beta_inf_ = d_ * beta_inf_;
  minv_dt_ = factor_->solve(Matrix(d_.transpose()));
  Matrix h = Matrix::Identity(d_.rows(), d_.rows());
  h.noalias() -= d_ * minv_dt_ / nu_;
  gram_ = SymMatrix(h / nu_).matrix();
  c_ = d_beta_inf_ / nu_;
  lambda_max_ = d_.rows() > 0 ? c_.cwiseAbs().maxCoeff() : 0.0;
}

Vector SplitLassoProblem::beta_from_gamma(const Vector& gamma) const {
  return beta_inf_ + minv_dt_ * gamma / nu_;
}

void SplitLassoProblem::run_sweeps(double lambda, Vector& gamma, Vector& resid,
                                   PathPoint& out) const {
  const Index m = this->m();
  const auto diag = gram_.diagonal();

  auto update = [&](Index i) -> double {
    const double h = diag(i);
    if (!(h > 0.0)) return 0.0;
    const double old = gamma(i);
    const double fresh = soft_threshold(h * old + resid(i), lambda) / h;
    const double delta = fresh - old;
    if (delta != 0.0) {
      gamma(i) = fresh;
      resid.noalias() -= delta * gram_.col(i);
    }
    return std::abs(delta);
  };
  auto small_enough = [&](double change) {
    const double scale = 1.0 + (m > 0 ? gamma.cwiseAbs().maxCoeff() : 0.0);
    return change <= options_.tolerance * scale;
  };

  std::vector<Index> active;
  active.reserve(static_cast<std::size_t>(m));
  int sweeps = 0;
  bool converged = false;
  while (sweeps < options_.max_sweeps) {
    double change = 0.0;
    for (Index i = 0; i < m; ++i) change = std::max(change, update(i));
    ++sweeps;
    if (small_enough(change)) {
      converged = true;
      break;
    }
    active.clear();
    for (Index i = 0; i < m; ++i) {
      if (gamma(i) != 0.0) active.push_back(i);
    }
    int inner_sweeps = 0;
    while (sweeps < options_.max_sweeps) {
      double inner = 0.0;
      for (const Index i : active) inner = std::max(inner, update(i));
      ++sweeps;
      if (small_enough(inner)) break;
      // Slow linear convergence on a settled support: solve
      // H_AA gamma_A = c_A - lambda sign(gamma_A) directly. The next full
      // sweep checks the result.
      if (++inner_sweeps == kExactStepAfter) {
        active.erase(std::remove_if(active.begin(), active.end(), [&](Index i) { return gamma(i) == 0.0; }),
                     active.end());
        if (exact_active_step(lambda, active, gamma, resid)) break;
      }
    }
  }
  out.sweeps = sweeps;
  out.converged = converged;
}

bool SplitLassoProblem::exact_active_step(double lambda, const std::vector<Index>& active,
                                          Vector& gamma, Vector& resid) const {
  const Index a = static_cast<Index>(active.size());
  if (a == 0) return false;
  Matrix h_aa(a, a);
  Vector rhs(a);
  for (Index j = 0; j < a; ++j) {
    const Index ij = active[static_cast<std::size_t>(j)];
    for (Index k = 0; k < a; ++k) h_aa(j, k) = gram_(ij, active[static_cast<std::size_t>(k)]);
    rhs(j) = c_(ij) - lambda * (gamma(ij) > 0.0 ? 1.0 : -1.0);
  }
  const Eigen::LLT<Matrix> llt(h_aa);
  if (llt.info() != Eigen::Success) return false;
  const Vector g_a = llt.solve(rhs);
  Vector candidate = Vector::Zero(gamma.size());
  for (Index j = 0; j < a; ++j) {
    const Index ij = active[static_cast<std::size_t>(j)];
    if (!std::isfinite(g_a(j)) || g_a(j) * gamma(ij) <= 0.0) return false;
    candidate(ij) = g_a(j);
  }
  Vector fresh = c_;
  for (Index j = 0; j < a; ++j) {
    fresh.noalias() -= g_a(j) * gram_.col(active[static_cast<std::size_t>(j)]);
  }
  if (fresh.cwiseAbs().maxCoeff() > lambda * (1.0 + 1e-9)) return false;
  gamma = std::move(candidate);
  resid = std::move(fresh);
  return true;
}

PathPoint SplitLassoProblem::solve_at(double lambda, const Vector& warm_gamma,
                                      const Vector& warm_resid) const {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidParameter, "split lasso: lambda must be > 0");
  const Index m = this->m();
  PathPoint out;
  Vector gamma = warm_gamma.size() == m ? warm_gamma : Vector(Vector::Zero(m));
  Vector resid;
  if (warm_gamma.size() == m && warm_resid.size() == m) {
    resid = warm_resid;
  } else {
    resid = c_ - gram_ * gamma;
  }
  run_sweeps(lambda, gamma, resid, out);
  out.beta = beta_from_gamma(gamma);
  out.d_beta = d_ * out.beta;
  out.gamma = std::move(gamma);
  out.resid = std::move(resid);
  return out;
}

double SplitLassoProblem::objective(const Vector& beta, const Vector& gamma, double lambda) const {
  const double n = static_cast<double>(x_.rows());
  return (y_ - x_ * beta).squaredNorm() / (2.0 * n) +
         (d_ * beta - gamma).squaredNorm() / (2.0 * nu_) + lambda * gamma.lpNorm<1>();
}

KktResidual SplitLassoProblem::kkt(const Vector& beta, const Vector& gamma, double lambda) const {
  KktResidual out;
  const Vector d_beta = d_ * beta;
  const Vector rho = (d_beta - gamma) / (lambda * nu_);
  for (Index i = 0; i < rho.size(); ++i) {
    out.subgradient_excess = std::max(out.subgradient_excess, std::abs(rho(i)) - 1.0);
    if (gamma(i) != 0.0) {
      const double sign = gamma(i) > 0.0 ? 1.0 : -1.0;
      out.sign_mismatch = std::max(out.sign_mismatch, std::abs(rho(i) - sign));
    }
  }
  const double n = static_cast<double>(x_.rows());
  const Vector station = x_.transpose() * (x_ * beta) / n + d_.transpose() * (d_beta - gamma) / nu_ -
                         xty_n_;
  const double scale = 1.0 + (xty_n_.size() > 0 ? xty_n_.cwiseAbs().maxCoeff() : 0.0);
  out.stationarity = station.size() > 0 ? station.cwiseAbs().maxCoeff() / scale : 0.0;
  return out;
}

double SplitLassoProblem::prediction_mse(const Dataset& data, const Vector& beta) {
  return (data.y() - data.X() * beta).squaredNorm() / static_cast<double>(data.n());
}

double lambda_max(const Dataset& data1, const Matrix& d, double nu) {
  return SplitLassoProblem(data1, d, nu).lambda_max();
}

bool BetaPath::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

BetaPath solve_beta_path(std::shared_ptr<const SplitLassoProblem> problem, const LambdaGrid& grid) {
  for (std::size_t k = 1; k < grid.values.size(); ++k) {
    if (!(grid.values[k] < grid.values[k - 1]) || !(grid.values[k] > 0.0)) {
      throw Error(ErrorKind::InvalidParameter, "lambda grid must be positive and strictly decreasing");
    }
  }
  if (!grid.empty() && grid.values.front() < problem->lambda_max() * (1.0 - 1e-12)) {
    throw Error(ErrorKind::InvalidParameter, "lambda grid must start at or above lambda_max");
  }
  BetaPath path;
  path.grid = grid;
  path.nu = problem->nu();
  const Index k_count = grid.size();
  const Index m = problem->m();
  path.beta.resize(problem->p(), k_count);
  path.d_beta.resize(m, k_count);
  path.gamma.resize(m, k_count);
  path.resid.resize(m, k_count);
  path.sweeps.resize(static_cast<std::size_t>(k_count));
  path.converged.resize(static_cast<std::size_t>(k_count));
  path.beta_inf = problem->beta_inf();
  path.d_beta_inf = problem->d_beta_inf();

  Vector gamma = Vector::Zero(m);
  Vector resid;
  for (Index k = 0; k < k_count; ++k) {
    PathPoint point = problem->solve_at(grid.values[static_cast<std::size_t>(k)], gamma, resid);
    path.beta.col(k) = point.beta;
    path.d_beta.col(k) = point.d_beta;
    path.gamma.col(k) = point.gamma;
    path.resid.col(k) = point.resid;
    path.sweeps[static_cast<std::size_t>(k)] = point.sweeps;
    path.converged[static_cast<std::size_t>(k)] = point.converged;
    gamma = std::move(point.gamma);
    resid = Vector();  // recompute exactly at each grid point
  }
  path.evaluator = std::move(problem);
  return path;
}

BetaPath solve_beta_path(const Dataset& data1, const Matrix& d, double nu, const LambdaGrid& grid) {
  return solve_beta_path(std::make_shared<const SplitLassoProblem>(data1, d, nu), grid);
}

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

ActivationLevels activation_levels(const BetaPath& path, const Vector& zeta, int refine_steps) {
  const Index m = path.m();
  if (zeta.size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "zeta has length " + std::to_string(zeta.size()) +
                                                  ", expected " + std::to_string(m));
  }
  ActivationLevels out;
  out.level = Vector::Zero(m);
  out.sign = Eigen::VectorXi::Zero(m);
  out.bracket_width = Vector::Zero(m);
  const double nu = path.nu;
  const auto& lambdas = path.grid.values;
  const auto a_at = [&](Index k, Index i) { return path.d_beta(i, k) / nu + zeta(i); };

  for (Index i = 0; i < m; ++i) {
    if (lambdas.empty()) {
      const double a = path.d_beta_inf(i) / nu + zeta(i);
      out.level(i) = std::abs(a);
      out.sign(i) = sign_of(a);
      continue;
    }
    // The path is constant for lambda >= lambdas[0].
    const double a0 = a_at(0, i);
    if (std::abs(a0) > lambdas[0]) {
      out.level(i) = std::abs(a0);
      out.sign(i) = sign_of(a0);
      continue;
    }
    Index k = 1;
    while (k < path.grid.size() &&
           !(std::abs(a_at(k, i)) > lambdas[static_cast<std::size_t>(k)])) {
      ++k;
    }
    if (k == path.grid.size()) continue;  // never active on the grid

    double lo = lambdas[static_cast<std::size_t>(k)];
    double hi = lambdas[static_cast<std::size_t>(k - 1)];
    double a_lo = a_at(k, i);
    double a_hi = a_at(k - 1, i);
    Vector gamma_lo = path.gamma.col(k);
    Vector gamma_hi = path.gamma.col(k - 1);
    Vector resid_lo = path.resid.col(k);
    Vector resid_hi = path.resid.col(k - 1);
    for (int step = 0; step < refine_steps && path.evaluator; ++step) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      PathPoint point = path.evaluator->solve_at(mid, 0.5 * (gamma_lo + gamma_hi),
                                                 0.5 * (resid_lo + resid_hi));
      if (!point.converged) ++out.nonconverged_refinements;
      const double a_mid = point.d_beta(i) / nu + zeta(i);
      if (std::abs(a_mid) > mid) {
        lo = mid;
        a_lo = a_mid;
        gamma_lo = std::move(point.gamma);
        resid_lo = std::move(point.resid);
      } else {
        hi = mid;
        a_hi = a_mid;
        gamma_hi = std::move(point.gamma);
        resid_hi = std::move(point.resid);
      }
    }
    // Secant root of g(lambda) = |a_i(lambda)| - lambda, g(lo) > 0 >= g(hi).
    const double g_lo = std::abs(a_lo) - lo;
    const double g_hi = std::abs(a_hi) - hi;
    double level = lo;
    if (g_lo - g_hi > 0.0) level = lo + g_lo * (hi - lo) / (g_lo - g_hi);
    out.level(i) = std::clamp(level, lo, hi);
    out.sign(i) = sign_of(a_lo);
    out.bracket_width(i) = hi - lo;
  }
  return out;
}

std::pair<Vector, Eigen::VectorXi> compute_Z_r(const BetaPath& path, int refine_steps) {
  auto levels = activation_levels(path, Vector::Zero(path.m()), refine_steps);
  return {std::move(levels.level), std::move(levels.sign)};
}

Vector compute_Z_tilde(const BetaPath& path, const Vector& zeta, int refine_steps) {
  return activation_levels(path, zeta, refine_steps).level;
}

double lasso_lambda_max(const Matrix& x, const Vector& y) {
  if (x.cols() == 0) return 0.0;
  return (x.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(x.rows());
}

Vector lasso_path(const Matrix& x, const Vector& y, double lambda, const std::optional<Vector>& warm) {
  if (x.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "lasso: X/y row mismatch");
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidParameter, "lasso: lambda must be >= 0");
  const Index n = x.rows();
  const Index p = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Vector col_sq = x.colwise().squaredNorm().transpose() * inv_n;
  Vector beta = (warm && warm->size() == p) ? *warm : Vector(Vector::Zero(p));
  Vector r = y - x * beta;

  auto update = [&](Index j) -> double {
    const double h = col_sq(j);
    if (!(h > 0.0)) return 0.0;
    const double z = x.col(j).dot(r) * inv_n + h * beta(j);
    const double fresh = soft_threshold(z, lambda) / h;
    const double delta = fresh - beta(j);
    if (delta != 0.0) {
      beta(j) = fresh;
      r.noalias() -= delta * x.col(j);
    }
    return std::abs(delta) * h;
  };

  // Coordinate moves are measured in gradient units, relative to
  // ||X^T y / n||_inf.
  const double tol = 1e-12 * std::max(1.0, (x.transpose() * y).cwiseAbs().maxCoeff() * inv_n);
  constexpr int kMaxSweeps = 100000;
  std::vector<Index> active;
  int sweeps = 0;
  while (sweeps < kMaxSweeps) {
    double change = 0.0;
    for (Index j = 0; j < p; ++j) change = std::max(change, update(j));
    ++sweeps;
    if (change <= tol) break;
    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (beta(j) != 0.0) active.push_back(j);
    }
    int inner_sweeps = 0;
    while (sweeps < kMaxSweeps) {
      double inner = 0.0;
      for (const Index j : active) inner = std::max(inner, update(j));
      ++sweeps;
      if (inner <= tol) break;
      // Same shortcut as the Split LASSO solver: solve the active block
      // X_A^T X_A b_A / n = X_A^T y / n - lambda sign(b_A) once the support
      // has settled. The next full sweep checks it.
      if (++inner_sweeps == kExactStepAfter) {
        active.erase(std::remove_if(active.begin(), active.end(), [&](Index j) { return beta(j) == 0.0; }),
                     active.end());
        const Index a = static_cast<Index>(active.size());
        if (a == 0 || a > n) continue;
        const Matrix xa = select_columns(x, active);
        Vector rhs = xa.transpose() * y * inv_n;
        for (Index k = 0; k < a; ++k) rhs(k) -= lambda * (beta(active[static_cast<std::size_t>(k)]) > 0.0 ? 1.0 : -1.0);
        const Eigen::LLT<Matrix> llt(Matrix(xa.transpose() * xa * inv_n));
        if (llt.info() != Eigen::Success) continue;
        const Vector b = llt.solve(rhs);
        bool same_signs = true;
        for (Index k = 0; k < a && same_signs; ++k) {
          same_signs = std::isfinite(b(k)) && b(k) * beta(active[static_cast<std::size_t>(k)]) > 0.0;
        }
        if (!same_signs) continue;
        const Vector trial_r = y - xa * b;
        if ((x.transpose() * trial_r * inv_n).cwiseAbs().maxCoeff() > lambda * (1.0 + 1e-9)) continue;
        beta.setZero();
        for (Index k = 0; k < a; ++k) beta(active[static_cast<std::size_t>(k)]) = b(k);
        break;
      }
    }
    r = y - x * beta;
  }
  return beta;
}

Matrix lasso_path(const Matrix& x, const Vector& y, const std::vector<double>& lambdas) {
  Matrix out(x.cols(), static_cast<Index>(lambdas.size()));
  std::optional<Vector> warm;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    Vector beta = lasso_path(x, y, lambdas[k], warm);
    out.col(static_cast<Index>(k)) = beta;
    warm = std::move(beta);
  }
  return out;
}

}  // namespace splitknock
