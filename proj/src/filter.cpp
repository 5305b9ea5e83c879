#include "splitknock/filter.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>

#include "splitknock/detail/pipeline.hpp"
#include "splitknock/errors.hpp"
#include "splitknock/knockoff_copy.hpp"
#include "splitknock/rng.hpp"
#include "splitknock/split_lasso.hpp"

namespace splitknock {
namespace {

void check_pair(const Vector& z, const Vector& z_tilde, double tie_tol) {
  if (z.size() != z_tilde.size()) {
    throw Error(ErrorKind::DimensionMismatch, "W: Z has " + std::to_string(z.size()) +
                                                  " entries, Z~ has " + std::to_string(z_tilde.size()));
  }
  if (!all_finite(z) || !all_finite(z_tilde)) {
    throw Error(ErrorKind::NonFiniteInput, "W: Z and Z~ must be finite");
  }
  if (!(tie_tol >= 0.0)) throw Error(ErrorKind::InvalidParameter, "W: tie tolerance must be >= 0");
}

double direction(double z, double zt, double tie_tol) {
  const double diff = z - zt;
  if (std::abs(diff) <= tie_tol) return 0.0;
  return diff > 0.0 ? 1.0 : -1.0;
}

}  // namespace

Vector w_statistics(const Vector& z, const Vector& z_tilde, double tie_tol) {
  check_pair(z, z_tilde, tie_tol);
  Vector w(z.size());
  for (Index i = 0; i < z.size(); ++i) w(i) = z(i) * direction(z(i), z_tilde(i), tie_tol);
  return w;
}

Vector w_statistics_max(const Vector& z, const Vector& z_tilde, double tie_tol) {
  check_pair(z, z_tilde, tie_tol);
  Vector w(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    w(i) = std::max(z(i), z_tilde(i)) * direction(z(i), z_tilde(i), tie_tol);
  }
  return w;
}

double threshold(const Vector& w, double q, bool plus) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidParameter, "threshold: q must lie in (0, 1)");
  if (!all_finite(w)) throw Error(ErrorKind::NonFiniteInput, "threshold: W must be finite");
  std::vector<double> pos;
  std::vector<double> neg;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) pos.push_back(w(i));
    if (w(i) < 0.0) neg.push_back(-w(i));
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::vector<double> candidates;
  candidates.reserve(pos.size() + neg.size());
  std::merge(pos.begin(), pos.end(), neg.begin(), neg.end(), std::back_inserter(candidates));
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double offset = plus ? 1.0 : 0.0;
  for (const double t : candidates) {
    const auto n_pos = pos.end() - std::lower_bound(pos.begin(), pos.end(), t);
    const auto n_neg = neg.end() - std::lower_bound(neg.begin(), neg.end(), t);
    const double ratio =
        (static_cast<double>(n_neg) + offset) / static_cast<double>(std::max<std::ptrdiff_t>(1, n_pos));
    if (ratio <= q) return t;
  }
  return kInfinity;
}

Selection select(const Vector& w, double t, const Eigen::VectorXi& r) {
  if (w.size() != r.size()) throw Error(ErrorKind::DimensionMismatch, "select: W and r differ in length");
  Selection out;
  if (!(t < kInfinity)) return out;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) >= t) {
      if (r(i) == 0) {
        throw Error(ErrorKind::InternalInvariantViolation,
                    "coordinate " + std::to_string(i) + " selected but never entered the path");
      }
      out.selected.push_back(i);
      out.signs.push_back(r(i));
    }
  }
  return out;
}

Selection reselect(const SelectionResult& result, double q, bool plus, double* t_out) {
  const double t = threshold(result.W, q, plus);
  if (t_out != nullptr) *t_out = t;
  Selection local = select(result.W, t, result.r);
  for (auto& idx : local.selected) idx = result.coordinates[static_cast<std::size_t>(idx)];
  return local;
}

namespace detail {

SelectionResult run_on_halves(const Dataset& half1, const Dataset& half2, const Matrix& d,
                              const SplitConfig& config, const PipelineHooks& hooks) {
  config.validate(0);
  const Index m = d.rows();
  const Index p = d.cols();
  if (half1.p() != p || half2.p() != p) {
    throw Error(ErrorKind::DimensionMismatch, "pipeline: D has " + std::to_string(p) +
                                                  " columns but X has " + std::to_string(half1.p()));
  }
  if (half2.n() < m + p) {
    throw Error(ErrorKind::InsufficientSamples,
                "the copy half needs n2 >= m + p, got n2 = " + std::to_string(half2.n()) +
                    ", m + p = " + std::to_string(m + p) + " (screen features first)");
  }

  auto problem = std::make_shared<const SplitLassoProblem>(half1, d, config.nu);
  const LambdaGrid grid =
      LambdaGrid::log_spaced(problem->lambda_max(), config.lambda_count, config.lambda_min_ratio);
  const BetaPath path = solve_beta_path(problem, grid);
  if (!path.all_converged() && !config.allow_nonconverged) {
    throw Error(ErrorKind::NonConvergedPath,
                "the Split LASSO path did not converge at every grid point");
  }

  const Dataset copy_half = hooks.zero_copy_response ? Dataset(half2.X(), Vector::Zero(half2.n())) : half2;
  const AugmentedDesign aug = build_augmented(copy_half, d, config.nu);
  const SymMatrix c_nu = compute_C_nu(aug);
  const Vector s = s_equicorrelated(c_nu, config.nu);
  const KnockoffCopy copy = construct_copy(aug, s, c_nu);
  const Vector zeta = compute_zeta(copy, aug);

  const ActivationLevels z_levels = activation_levels(path, Vector::Zero(m), config.refine_bisection_steps);
  const ActivationLevels zt_levels = activation_levels(path, zeta, config.refine_bisection_steps);

  SelectionResult out;
  out.config = config;
  out.Z = z_levels.level;
  out.Z_tilde = zt_levels.level;
  out.r = z_levels.sign;
  out.W = w_statistics(out.Z, out.Z_tilde, 1e-9 * problem->lambda_max());
  out.coordinates.resize(static_cast<std::size_t>(m));
  std::iota(out.coordinates.begin(), out.coordinates.end(), Index{0});
  out.T = threshold(out.W, config.q, config.plus);
  Selection sel = select(out.W, out.T, out.r);
  out.selected = std::move(sel.selected);
  out.signs = std::move(sel.signs);

  out.diagnostics.converged = path.converged;
  out.diagnostics.s = s;
  out.diagnostics.nu = config.nu;
  out.diagnostics.lambda_max = problem->lambda_max();
  out.diagnostics.nonconverged_refinements =
      z_levels.nonconverged_refinements + zt_levels.nonconverged_refinements;
  if (out.diagnostics.nonconverged_refinements > 0 && !config.allow_nonconverged) {
    throw Error(ErrorKind::NonConvergedPath, "a Split LASSO solve during activation refinement did not converge");
  }
  return out;
}

DataSplit make_split(Index n, const SplitConfig& config) {
  Rng rng(config.seed);
  return split_samples(n, config.n1, rng, config.first_n1_split ? SplitMode::FirstN1 : SplitMode::Random);
}

SelectionResult run_split_knockoff(const Dataset& data, const LinearTransform& transform,
                                   const SplitConfig& config, const PipelineHooks& hooks) {
  config.validate(data.n());
  const DataSplit split = make_split(data.n(), config);
  const Index need = transform.m() + transform.p();
  if (static_cast<Index>(split.idx2.size()) < need) {
    throw Error(ErrorKind::InsufficientSamples,
                "n - n1 = " + std::to_string(split.idx2.size()) + " but the copy half needs m + p = " +
                    std::to_string(need) + " rows (screen features first)");
  }
  SelectionResult out = run_on_halves(restrict_rows(data, split.idx1), restrict_rows(data, split.idx2),
                                      transform.D(), config, hooks);
  out.diagnostics.sample_split = true;
  out.diagnostics.idx1 = split.idx1;
  out.diagnostics.idx2 = split.idx2;
  return out;
}

SelectionResult run_no_split(const Dataset& data, const LinearTransform& transform,
                             const SplitConfig& config, const PipelineHooks& hooks) {
  config.validate(0);
  SelectionResult out = run_on_halves(data, data, transform.D(), config, hooks);
  out.diagnostics.sample_split = false;
  out.diagnostics.idx1.resize(static_cast<std::size_t>(data.n()));
  std::iota(out.diagnostics.idx1.begin(), out.diagnostics.idx1.end(), Index{0});
  out.diagnostics.idx2 = out.diagnostics.idx1;
  return out;
}

}  // namespace detail

SelectionResult run_split_knockoff(const Dataset& data, const LinearTransform& transform,
                                   const SplitConfig& config) {
  return detail::run_split_knockoff(data, transform, config, {});
}

SelectionResult run_no_split(const Dataset& data, const LinearTransform& transform,
                             const SplitConfig& config) {
  return detail::run_no_split(data, transform, config, {});
}

}  // namespace splitknock
