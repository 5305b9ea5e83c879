#include "splitknock/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <thread>

#include "splitknock/detail/pipeline.hpp"
#include "splitknock/errors.hpp"
#include "splitknock/screening.hpp"
#include "splitknock/split_lasso.hpp"

namespace splitknock {
namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void check_selection(const std::vector<Index>& selected, const std::vector<int>& signs,
                     const Vector& gamma_star) {
  if (selected.size() != signs.size()) {
    throw Error(ErrorKind::DimensionMismatch, "selected and signs differ in length");
  }
  for (const Index i : selected) {
    if (i < 0 || i >= gamma_star.size()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "selected index " + std::to_string(i) + " outside gamma* of length " +
                      std::to_string(gamma_star.size()));
    }
  }
}

Index sign_errors(const std::vector<Index>& selected, const std::vector<int>& signs,
                  const Vector& gamma_star) {
  Index errors = 0;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    if (signs[k] != sign_of(gamma_star(selected[k]))) ++errors;
  }
  return errors;
}

double quantile(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

VariantMetrics metrics_for(const SelectionResult& result, const Vector& gamma_star, double q,
                           bool plus) {
  VariantMetrics out;
  const Selection sel = reselect(result, q, plus, &out.threshold);
  out.fdp_dir = fdp_dir(sel.selected, sel.signs, gamma_star);
  out.mfdp_dir = mfdp_dir(sel.selected, sel.signs, gamma_star, q);
  out.power = power_dir(sel.selected, sel.signs, gamma_star);
  out.n_selected = static_cast<Index>(sel.selected.size());
  return out;
}

ReplicateRecord run_cell(const ExperimentSpec& spec, Index nu_index, Index replicate) {
  ReplicateRecord rec;
  rec.nu_index = nu_index;
  rec.replicate = replicate;
  rec.seed = spec.base_seed + static_cast<std::uint64_t>(replicate);
  rec.nu = spec.cv_nu ? std::numeric_limits<double>::quiet_NaN()
                      : spec.nu_grid[static_cast<std::size_t>(nu_index)];
  try {
    const Instance inst = generate_instance(spec, rec.seed);
    SplitConfig config;
    config.nu = spec.cv_nu ? 1.0 : rec.nu;
    config.q = spec.q;
    config.plus = true;
    config.n1 = spec.n1;
    config.lambda_count = spec.lambda_count;
    config.seed = derive_seed(rec.seed, 1);
    Rng cv_rng(derive_seed(rec.seed, 2));
    const Matrix& d = inst.transform.D();

    SelectionResult result;
    switch (spec.mode) {
      case ExperimentMode::Split: {
        if (spec.cv_nu) {
          const DataSplit split = detail::make_split(inst.data.n(), config);
          config.nu = cv_select_nu(restrict_rows(inst.data, split.idx1), d, spec.nu_grid,
                                   spec.cv_folds, cv_rng)
                          .nu_star;
        }
        result = run_split_knockoff(inst.data, inst.transform, config);
        break;
      }
      case ExperimentMode::NoSplit: {
        if (spec.cv_nu) {
          config.nu = cv_select_nu(inst.data, d, spec.nu_grid, spec.cv_folds, cv_rng).nu_star;
        }
        result = run_no_split(inst.data, inst.transform, config);
        break;
      }
      case ExperimentMode::Hd: {
        HdOptions options;
        options.lambda_beta = spec.lambda_beta;
        options.lambda_gamma = spec.lambda_gamma;
        if (spec.cv_nu) {
          options.choose_nu = [&](const Dataset& half1, const Matrix& d_cols) {
            return cv_select_nu(half1, d_cols, spec.nu_grid, spec.cv_folds, cv_rng).nu_star;
          };
        }
        result = run_hd_pipeline(inst.data, inst.transform, config, options).selection;
        break;
      }
    }
    rec.nu = result.config.nu;
    rec.knockoff = metrics_for(result, inst.truth.gamma_star, spec.q, false);
    rec.knockoff_plus = metrics_for(result, inst.truth.gamma_star, spec.q, true);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

double fdp_dir(const std::vector<Index>& selected, const std::vector<int>& signs,
               const Vector& gamma_star) {
  check_selection(selected, signs, gamma_star);
  const double denom = static_cast<double>(std::max<std::size_t>(selected.size(), 1));
  return static_cast<double>(sign_errors(selected, signs, gamma_star)) / denom;
}

double fdp_dir(const SelectionResult& result, const Vector& gamma_star) {
  return fdp_dir(result.selected, result.signs, gamma_star);
}

double mfdp_dir(const std::vector<Index>& selected, const std::vector<int>& signs,
                const Vector& gamma_star, double q) {
  if (!(q > 0.0)) throw Error(ErrorKind::InvalidParameter, "mfdp: q must be > 0");
  check_selection(selected, signs, gamma_star);
  return static_cast<double>(sign_errors(selected, signs, gamma_star)) /
         (static_cast<double>(selected.size()) + 1.0 / q);
}

double power_dir(const std::vector<Index>& selected, const std::vector<int>& signs,
                 const Vector& gamma_star) {
  check_selection(selected, signs, gamma_star);
  const Index nonzero = (gamma_star.array() != 0.0).count();
  if (nonzero == 0) return 1.0;
  const Index correct = static_cast<Index>(selected.size()) - sign_errors(selected, signs, gamma_star);
  return static_cast<double>(correct) / static_cast<double>(nonzero);
}

double power_dir(const SelectionResult& result, const Vector& gamma_star) {
  return power_dir(result.selected, result.signs, gamma_star);
}

double fdp_classical(const std::vector<Index>& selected, const Vector& gamma_star) {
  Index nulls = 0;
  for (const Index i : selected) {
    if (gamma_star(i) == 0.0) ++nulls;
  }
  return static_cast<double>(nulls) / static_cast<double>(std::max<std::size_t>(selected.size(), 1));
}

std::string_view to_string(ExperimentMode mode) noexcept {
  switch (mode) {
    case ExperimentMode::Split: return "split";
    case ExperimentMode::NoSplit: return "no-split";
    case ExperimentMode::Hd: return "hd";
  }
  return "unknown";
}

std::string_view to_string(Variant variant) noexcept {
  return variant == Variant::Knockoff ? "knockoff" : "knockoff+";
}

Vector make_beta_star(BetaPattern pattern, Index p) {
  if (p < 1) throw Error(ErrorKind::InvalidParameter, "beta pattern needs p >= 1");
  Vector beta = Vector::Zero(p);
  switch (pattern) {
    case BetaPattern::Periodic20:
      for (Index i = 1; i <= std::min<Index>(20, p); ++i) {
        if (i % 3 == 0 || i % 3 == 2) beta(i - 1) = 1.0;
      }
      break;
  }
  return beta;
}

void ExperimentSpec::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidParameter, "experiment: " + what); };
  if (n < 2 || p < 1) bad("n >= 2 and p >= 1 required");
  if (!(rho >= 0.0 && rho < 1.0)) bad("rho must lie in [0, 1)");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) bad("sigma must be finite and >= 0");
  if (!(q > 0.0 && q < 1.0)) bad("q must lie in (0, 1)");
  if (nu_grid.empty()) bad("nu grid is empty");
  for (const double nu : nu_grid) {
    if (!(nu > 0.0) || !std::isfinite(nu)) bad("nu grid values must be positive");
  }
  if (replicates < 1) bad("replicate count must be >= 1");
  if (mode != ExperimentMode::NoSplit && (n1 < 1 || n1 >= n)) bad("n1 must satisfy 0 < n1 < n");
  if (cv_nu && cv_folds < 2) throw Error(ErrorKind::InvalidFolds, "experiment: folds must be >= 2");
  if (jobs < 1) bad("jobs must be >= 1");
  if (transform == TransformKind::Custom) bad("custom transforms are not supported in experiments");
}

Instance generate_instance(const ExperimentSpec& spec, std::uint64_t replicate_seed) {
  spec.validate();
  Rng rng(replicate_seed);
  Matrix x = sample_ar1_design(rng, spec.n, spec.p, spec.rho);
  GroundTruth truth;
  truth.beta_star = make_beta_star(spec.pattern, spec.p);
  truth.sigma = spec.sigma;
  Vector y = x * truth.beta_star;
  if (spec.sigma > 0.0) {
    for (Index i = 0; i < spec.n; ++i) y(i) += spec.sigma * rng.normal();
  }
  LinearTransform transform = make_transform(spec.transform, spec.p, spec.edges);
  truth.gamma_star = transform.D() * truth.beta_star;
  return Instance{Dataset(std::move(x), std::move(y)), std::move(truth), std::move(transform)};
}

SummaryStat summarize(std::vector<double> values, bool rate) {
  SummaryStat out;
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return SummaryStat{nan, nan, nan, nan};
  }
  const double count = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  double ss = 0.0;
  for (const double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = values.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  out.lo = quantile(values, 0.1);
  out.hi = quantile(values, 0.9);
  if (rate) {
    out.lo = std::clamp(out.lo, 0.0, 1.0);
    out.hi = std::clamp(out.hi, 0.0, 1.0);
  }
  return out;
}

const NuSummary& ExperimentReport::summary(Index nu_index, Variant variant) const {
  for (const auto& s : summaries) {
    if (s.nu_index == nu_index && s.variant == variant) return s;
  }
  throw Error(ErrorKind::InvalidIndex, "no summary for nu index " + std::to_string(nu_index));
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentReport report;
  report.spec = spec;
  const Index nu_count = spec.cv_nu ? 1 : static_cast<Index>(spec.nu_grid.size());
  const Index cells = nu_count * spec.replicates;
  report.records.resize(static_cast<std::size_t>(cells));

  std::atomic<Index> next{0};
  auto worker = [&]() {
    for (Index c = next++; c < cells; c = next++) {
      report.records[static_cast<std::size_t>(c)] = run_cell(spec, c / spec.replicates, c % spec.replicates);
    }
  };
  const int threads = static_cast<int>(std::min<Index>(spec.jobs, cells));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (Index k = 0; k < nu_count; ++k) {
    for (const Variant v : {Variant::Knockoff, Variant::KnockoffPlus}) {
      NuSummary s;
      s.nu_index = k;
      s.nu = spec.cv_nu ? std::numeric_limits<double>::quiet_NaN()
                        : spec.nu_grid[static_cast<std::size_t>(k)];
      s.variant = v;
      std::vector<double> fdp, mfdp, power, nsel;
      for (Index r = 0; r < spec.replicates; ++r) {
        const auto& rec = report.records[static_cast<std::size_t>(k * spec.replicates + r)];
        if (rec.failed) {
          ++s.n_failed;
          continue;
        }
        ++s.n_ok;
        const VariantMetrics& m = rec.metrics(v);
        fdp.push_back(m.fdp_dir);
        mfdp.push_back(m.mfdp_dir);
        power.push_back(m.power);
        nsel.push_back(static_cast<double>(m.n_selected));
      }
      s.fdp_dir = summarize(std::move(fdp), true);
      s.mfdp_dir = summarize(std::move(mfdp), true);
      s.power = summarize(std::move(power), true);
      s.n_selected = summarize(std::move(nsel), false);
      report.summaries.push_back(s);
    }
  }
  return report;
}

CvResult cv_select_nu(const Dataset& data1, const Matrix& d, const std::vector<double>& nu_grid,
                      int folds, Rng& rng, const CvOptions& options) {
  if (nu_grid.empty()) throw Error(ErrorKind::InvalidParameter, "cv: nu grid is empty");
  const Index n = data1.n();
  if (folds < 2 || n < folds) {
    throw Error(ErrorKind::InvalidFolds, "cv needs 2 <= folds <= n1, got folds = " +
                                             std::to_string(folds) + ", n1 = " + std::to_string(n));
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<Dataset> train(static_cast<std::size_t>(folds));
  std::vector<Dataset> valid(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> tr;
    std::vector<Index> va;
    for (Index j = 0; j < n; ++j) (j % folds == f ? va : tr).push_back(order[static_cast<std::size_t>(j)]);
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    train[static_cast<std::size_t>(f)] = restrict_rows(data1, tr);
    valid[static_cast<std::size_t>(f)] = restrict_rows(data1, va);
  }

  CvResult out;
  for (const double nu : nu_grid) {
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
      const Dataset& tr = train[static_cast<std::size_t>(f)];
      const Dataset& va = valid[static_cast<std::size_t>(f)];
      auto problem = std::make_shared<const SplitLassoProblem>(tr, d, nu);
      const LambdaGrid grid =
          LambdaGrid::log_spaced(problem->lambda_max(), options.lambda_count, options.lambda_min_ratio);
      double best = SplitLassoProblem::prediction_mse(va, problem->beta_inf());
      if (!grid.empty()) {
        const BetaPath path = solve_beta_path(problem, grid);
        const Matrix resid = (va.X() * path.beta).colwise() - va.y();
        best = std::min(best, resid.colwise().squaredNorm().minCoeff() / static_cast<double>(va.n()));
      }
      total += best;
    }
    out.table.push_back(CvRow{nu, total / static_cast<double>(folds)});
  }
  out.nu_star = out.table.front().nu;
  double best_mse = out.table.front().mse;
  for (const auto& row : out.table) {
    if (row.mse < best_mse || (row.mse == best_mse && row.nu < out.nu_star)) {
      best_mse = row.mse;
      out.nu_star = row.nu;
    }
  }
  return out;
}

}  // namespace splitknock
