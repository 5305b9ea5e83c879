#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "splitknock/errors.hpp"
#include "splitknock/split_lasso.hpp"

using namespace splitknock;

namespace {

Dataset random_dataset(Rng& rng, Index n, Index p, double noise = 1.0) {
  const Matrix x = oracle::gaussian_matrix(rng, n, p);
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < p; j += 2) beta(j) = j % 4 == 0 ? 1.0 : -1.0;
  const Vector y = x * beta + noise * oracle::gaussian_vector(rng, n);
  return Dataset(x, y);
}

Matrix line_d(Index p) {
  Matrix d = Matrix::Zero(p - 1, p);
  for (Index i = 0; i + 1 < p; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -1.0;
  }
  return d;
}

// Evaluator whose D beta(lambda) never moves.
class ConstantEvaluator final : public PathEvaluator {
 public:
  explicit ConstantEvaluator(Vector d) : d_(std::move(d)) {}
  Index m() const override { return d_.size(); }
  PathPoint solve_at(double, const Vector&, const Vector&) const override {
    PathPoint p;
    p.d_beta = d_;
    p.gamma = Vector::Zero(d_.size());
    p.resid = Vector::Zero(d_.size());
    p.converged = true;
    return p;
  }

 private:
  Vector d_;
};

BetaPath constant_path(const Vector& d, double nu) {
  BetaPath path;
  path.nu = nu;
  path.grid = LambdaGrid::log_spaced(d.cwiseAbs().maxCoeff() / nu, 40, 1e-3);
  const Index k = path.grid.size();
  path.d_beta = d.replicate(1, k);
  path.gamma = Matrix::Zero(d.size(), k);
  path.resid = Matrix::Zero(d.size(), k);
  path.d_beta_inf = d;
  path.evaluator = std::make_shared<ConstantEvaluator>(d);
  return path;
}

}  // namespace

TEST_CASE("LambdaGrid is log spaced from lambda_max") {
  const LambdaGrid g = LambdaGrid::log_spaced(2.0, 5, 1e-2);
  REQUIRE(g.size() == 5);
  CHECK(g.values.front() == 2.0);
  CHECK(g.values.back() == doctest::Approx(0.02).epsilon(1e-14));
  for (std::size_t k = 1; k < g.values.size(); ++k) {
    CHECK(g.values[k] < g.values[k - 1]);
    CHECK(g.values[k] / g.values[k - 1] == doctest::Approx(std::pow(1e-2, 0.25)));
  }
  CHECK(LambdaGrid::log_spaced(0.0, 5, 1e-2).empty());
}

TEST_CASE("lambda_max: zero response and scalar closed form") {
  Rng rng(1);
  const Matrix x = oracle::gaussian_matrix(rng, 20, 3);
  CHECK(lambda_max(Dataset(x, Vector::Zero(20)), Matrix::Identity(3, 3), 1.0) == 0.0);

  // p = 1, D = [1], X^T X / n = 1, X^T y / n = c.
  const double c = -0.7;
  Matrix x1(2, 1);
  x1 << 1.0, 1.0;
  const Vector y1 = (Vector(2) << c, c).finished();
  for (const double nu : {0.1, 1.0, 10.0}) {
    const double got = lambda_max(Dataset(x1, y1), Matrix::Identity(1, 1), nu);
    CHECK(got == doctest::Approx(std::abs(c) / (nu + 1.0)).epsilon(1e-14));
  }
}

TEST_CASE("(beta_inf, 0) is optimal just above lambda_max") {
  Rng rng(2);
  const Dataset data = random_dataset(rng, 40, 6);
  const SplitLassoProblem problem(data, line_d(6), 0.5);
  const Vector zero = Vector::Zero(5);
  CHECK(problem.kkt(problem.beta_inf(), zero, problem.lambda_max() * 1.01).within(1e-10));
  const PathPoint pt = problem.solve_at(problem.lambda_max() * 1.5);
  CHECK(pt.gamma.isZero(0.0));
  CHECK((pt.beta - problem.beta_inf()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + problem.beta_inf().norm()));
  // Direct linear solve of (X^T X / n + D^T D / nu) beta = X^T y / n.
  const Matrix d = line_d(6);
  const Matrix m = data.X().transpose() * data.X() / 40.0 + d.transpose() * d / 0.5;
  const Vector direct = m.fullPivLu().solve(data.X().transpose() * data.y() / 40.0);
  CHECK((problem.beta_inf() - direct).norm() <= 1e-10 * direct.norm());
}

TEST_CASE("singular system is rejected") {
  const Matrix x = Matrix::Zero(5, 3);
  const Dataset data(x, Vector::Ones(5));
  const Matrix d = line_d(3);  // D^T D is singular along the ones vector
  CHECK_THROWS_AS(SplitLassoProblem(data, d, 1.0), Error);
}

TEST_CASE("path objective matches proximal-gradient oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset data = random_dataset(rng, 30, 2);
    const Matrix d = oracle::gaussian_matrix(rng, 2, 2);
    const double nu = trial % 2 ? 1.0 : 0.3;
    const double lmax = lambda_max(data, d, nu);
    const BetaPath path = solve_beta_path(data, d, nu, LambdaGrid::log_spaced(lmax, 15, 1e-2));
    CHECK(path.all_converged());
    oracle::ProxSolution warm;
    for (Index k = 0; k < path.grid.size(); ++k) {
      const double lambda = path.grid.values[static_cast<std::size_t>(k)];
      warm = oracle::prox_gradient_split_lasso(data.X(), data.y(), d, nu, lambda, &warm);
      const double got = oracle::split_lasso_objective(data.X(), data.y(), d, nu, lambda, path.beta.col(k),
                                                       path.gamma.col(k));
      CHECK(std::abs(got - warm.objective) <= 1e-8);
    }
  }
}

TEST_CASE("every converged path point carries a KKT certificate") {
  Rng rng(4);
  for (int trial = 0; trial < 4; ++trial) {
    const Index p = 8 + trial;
    const Dataset data = random_dataset(rng, 60, p);
    const Matrix d = line_d(p);
    const double nu = std::pow(10.0, trial - 1);
    const auto problem = std::make_shared<SplitLassoProblem>(data, d, nu);
    const BetaPath path = solve_beta_path(problem, LambdaGrid::log_spaced(problem->lambda_max(), 50, 1e-3));
    for (Index k = 0; k < path.grid.size(); ++k) {
      REQUIRE(path.converged[static_cast<std::size_t>(k)]);
      const double lambda = path.grid.values[static_cast<std::size_t>(k)];
      CHECK(problem->kkt(path.beta.col(k), path.gamma.col(k), lambda).within(1e-6));
      CHECK((path.d_beta.col(k) - d * path.beta.col(k)).norm() <= 1e-12 * (1.0 + path.d_beta.col(k).norm()));
    }
  }
}

TEST_CASE("small lambda with D = I recovers least squares") {
  Rng rng(5);
  const Dataset data = random_dataset(rng, 50, 4);
  const SplitLassoProblem problem(data, Matrix::Identity(4, 4), 1.0);
  const PathPoint pt = problem.solve_at(problem.lambda_max() * 1e-9);
  const Vector ls = data.X().colPivHouseholderQr().solve(data.y());
  CHECK((pt.beta - ls).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("refining the grid shrinks consecutive steps") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset data = random_dataset(rng, 40, 6);
    const Matrix d = line_d(6);
    const double lmax = lambda_max(data, d, 1.0);
    double previous = std::numeric_limits<double>::infinity();
    for (const Index count : {10, 20, 40}) {
      const BetaPath path = solve_beta_path(data, d, 1.0, LambdaGrid::log_spaced(lmax, count, 1e-2));
      double largest = 0.0;
      for (Index k = 1; k < path.grid.size(); ++k) {
        largest = std::max(largest, (path.beta.col(k) - path.beta.col(k - 1)).norm());
      }
      CHECK(largest <= previous);
      previous = largest;
    }
  }
}

TEST_CASE("Z and Z~ on a constant path solve exactly") {
  const Vector d = (Vector(4) << 2.0, -0.5, 1.2, 0.0).finished();
  const double nu = 0.5;
  const BetaPath path = constant_path(d, nu);
  const auto [z, r] = compute_Z_r(path, 30);
  for (Index i = 0; i < 3; ++i) {
    CHECK(z(i) == doctest::Approx(std::abs(d(i)) / nu).epsilon(1e-12));
    CHECK(r(i) == (d(i) > 0 ? 1 : -1));
  }
  CHECK(z(3) == 0.0);
  CHECK(r(3) == 0);

  const Vector zeta = (Vector(4) << -1.0, 0.25, 3.0, 0.5).finished();
  const Vector zt = compute_Z_tilde(path, zeta, 30);
  for (Index i = 0; i < 4; ++i) {
    const double a = std::abs(d(i) / nu + zeta(i));
    // Anything above the top of the grid is read off exactly; below it the
    // bisection plus secant recovers the root of a constant function.
    CHECK(zt(i) == doctest::Approx(a).epsilon(1e-12));
  }
  CHECK_THROWS_AS(compute_Z_tilde(path, Vector::Zero(3), 30), Error);
}

TEST_CASE("all-zero path gives Z = 0 and r = 0") {
  Rng rng(7);
  const Dataset data(oracle::gaussian_matrix(rng, 20, 3), Vector::Zero(20));
  const BetaPath path = solve_beta_path(data, Matrix::Identity(3, 3), 1.0,
                                        LambdaGrid::log_spaced(lambda_max(data, Matrix::Identity(3, 3), 1.0), 20, 1e-3));
  const auto [z, r] = compute_Z_r(path, 30);
  CHECK(z.isZero(0.0));
  CHECK(r.isZero());
}

TEST_CASE("zeta = 0 makes Z~ equal to Z bit for bit") {
  Rng rng(8);
  const Dataset data = random_dataset(rng, 80, 10);
  const Matrix d = line_d(10);
  const BetaPath path = solve_beta_path(data, d, 1.0, LambdaGrid::log_spaced(lambda_max(data, d, 1.0), 60, 1e-3));
  const auto [z, r] = compute_Z_r(path, 30);
  const Vector zt = compute_Z_tilde(path, Vector::Zero(d.rows()), 30);
  CHECK(z == zt);
  for (Index i = 0; i < z.size(); ++i) {
    if (z(i) == 0.0) CHECK(r(i) == 0);
  }
}

TEST_CASE("Z brackets the activation seen by the proximal-gradient oracle") {
  Rng rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    const Dataset data = random_dataset(rng, 40, 4);
    const Matrix d = line_d(4);
    const double nu = 1.0;
    const double lmax = lambda_max(data, d, nu);
    const BetaPath path = solve_beta_path(data, d, nu, LambdaGrid::log_spaced(lmax, 100, 1e-3));
    const auto [z, r] = compute_Z_r(path, 30);
    const double delta = 1e-3 * lmax;
    for (Index i = 0; i < d.rows(); ++i) {
      if (z(i) <= 2.0 * delta) continue;
      const auto above = oracle::prox_gradient_split_lasso(data.X(), data.y(), d, nu, z(i) + delta);
      const auto below = oracle::prox_gradient_split_lasso(data.X(), data.y(), d, nu, z(i) - delta);
      CHECK(above.gamma(i) == 0.0);
      CHECK(below.gamma(i) != 0.0);
      CHECK((below.gamma(i) > 0.0 ? 1 : -1) == r(i));
    }
  }
}

TEST_CASE("Z and Z~ are invariant under row permutations") {
  Rng rng(10);
  const Dataset data = random_dataset(rng, 50, 6);
  std::vector<Index> perm(50);
  std::iota(perm.begin(), perm.end(), Index{0});
  rng.shuffle(perm.begin(), perm.end());
  const Dataset permuted = restrict_rows(data, perm);
  const Matrix d = line_d(6);
  const Vector zeta = 0.1 * oracle::gaussian_vector(rng, 5);
  const double lmax = lambda_max(data, d, 1.0);
  const BetaPath a = solve_beta_path(data, d, 1.0, LambdaGrid::log_spaced(lmax, 80, 1e-3));
  const BetaPath b = solve_beta_path(permuted, d, 1.0, LambdaGrid::log_spaced(lmax, 80, 1e-3));
  CHECK((compute_Z_r(a, 30).first - compute_Z_r(b, 30).first).cwiseAbs().maxCoeff() <= 1e-9 * lmax);
  CHECK(compute_Z_r(a, 30).second == compute_Z_r(b, 30).second);
  CHECK((compute_Z_tilde(a, zeta, 30) - compute_Z_tilde(b, zeta, 30)).cwiseAbs().maxCoeff() <= 1e-9 * lmax);
}

TEST_CASE("lasso: full shrinkage and orthonormal closed form") {
  Rng rng(11);
  const Matrix x = oracle::gaussian_matrix(rng, 30, 5);
  const Vector y = oracle::gaussian_vector(rng, 30);
  CHECK(lasso_path(x, y, lasso_lambda_max(x, y) * 1.0001).isZero(0.0));

  // Orthonormal columns scaled so that X^T X / n = I.
  const Matrix q = Eigen::HouseholderQR<Matrix>(oracle::gaussian_matrix(rng, 30, 5)).householderQ() *
                   Matrix::Identity(30, 5);
  const Matrix xo = std::sqrt(30.0) * q;
  const Vector xty = xo.transpose() * y / 30.0;
  const double lambda = 0.5 * xty.cwiseAbs().maxCoeff();
  const Vector got = lasso_path(xo, y, lambda);
  for (Index j = 0; j < 5; ++j) CHECK(std::abs(got(j) - soft_threshold(xty(j), lambda)) <= 1e-10);
}

TEST_CASE("lasso: KKT on random instances") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 40;
    const Index p = trial % 2 ? 20 : 80;
    const Matrix x = oracle::gaussian_matrix(rng, n, p);
    const Vector y = x.leftCols(3) * Vector::Ones(3) + oracle::gaussian_vector(rng, n);
    const double lambda = lasso_lambda_max(x, y) * (0.05 + 0.1 * trial);
    const Vector b = lasso_path(x, y, lambda);
    const Vector g = x.transpose() * (y - x * b) / static_cast<double>(n);
    for (Index j = 0; j < p; ++j) {
      CHECK(std::abs(g(j)) <= lambda + 1e-8);
      if (b(j) != 0.0) CHECK(std::abs(g(j) - lambda * (b(j) > 0 ? 1.0 : -1.0)) <= 1e-8);
    }
  }
}

TEST_CASE("lasso path columns match single solves") {
  Rng rng(13);
  const Matrix x = oracle::gaussian_matrix(rng, 30, 10);
  const Vector y = oracle::gaussian_vector(rng, 30);
  const double lmax = lasso_lambda_max(x, y);
  const std::vector<double> lambdas{lmax, 0.5 * lmax, 0.2 * lmax, 0.05 * lmax};
  const Matrix path = lasso_path(x, y, lambdas);
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    CHECK((path.col(static_cast<Index>(k)) - lasso_path(x, y, lambdas[k])).cwiseAbs().maxCoeff() <= 1e-7);
  }
}
