#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitknock/filter.hpp"
#include "splitknock/model.hpp"
#include "splitknock/numerics.hpp"
#include "splitknock/rng.hpp"

namespace splitknock {

struct GroundTruth {
  Vector beta_star;
  Vector gamma_star;  // D beta_star
  double sigma = 1.0;
};

// Directional false discovery proportion: selected coordinates whose
// estimated sign differs from sign(gamma*_i), over max(|S|, 1).
double fdp_dir(const std::vector<Index>& selected, const std::vector<int>& signs,
               const Vector& gamma_star);
double fdp_dir(const SelectionResult& result, const Vector& gamma_star);

// Same numerator over |S| + 1/q.
double mfdp_dir(const std::vector<Index>& selected, const std::vector<int>& signs,
                const Vector& gamma_star, double q);

// Correct-sign selections over the number of nonzero gamma*_i; 1 when
// gamma* has no nonzero entry.
double power_dir(const std::vector<Index>& selected, const std::vector<int>& signs,
                 const Vector& gamma_star);
double power_dir(const SelectionResult& result, const Vector& gamma_star);

// Null selections (gamma*_i = 0) over max(|S|, 1).
double fdp_classical(const std::vector<Index>& selected, const Vector& gamma_star);

enum class BetaPattern {
  // beta*_i = 1 for 1-based i <= 20 with i mod 3 in {0, 2}, else 0.
  Periodic20,
};

enum class ExperimentMode { Split, NoSplit, Hd };

std::string_view to_string(ExperimentMode mode) noexcept;

Vector make_beta_star(BetaPattern pattern, Index p);

struct ExperimentSpec {
  std::string scenario = "d2";
  Index n = 500;
  Index p = 100;
  double rho = 0.5;
  TransformKind transform = TransformKind::LineDifference;
  std::vector<Edge> edges;  // graph transforms only
  BetaPattern pattern = BetaPattern::Periodic20;
  double sigma = 1.0;
  double q = 0.2;
  std::vector<double> nu_grid{1.0};
  // Pick nu per replicate by cross validation over nu_grid on the path half
  // instead of sweeping the grid.
  bool cv_nu = false;
  int cv_folds = 5;
  Index replicates = 1;
  std::uint64_t base_seed = 0;
  ExperimentMode mode = ExperimentMode::Split;
  Index n1 = 200;
  Index lambda_count = 200;
  std::optional<double> lambda_beta;   // hd mode
  std::optional<double> lambda_gamma;  // hd mode
  int jobs = 1;

  // Throws InvalidParameter.
  void validate() const;
};

struct Instance {
  Dataset data;
  GroundTruth truth;
  LinearTransform transform;
};

// AR(1) design, beta* from the pattern, y = X beta* + sigma * eps. A pure
// function of (spec, replicate_seed).
Instance generate_instance(const ExperimentSpec& spec, std::uint64_t replicate_seed);

enum class Variant { Knockoff, KnockoffPlus };

std::string_view to_string(Variant variant) noexcept;

struct VariantMetrics {
  double fdp_dir = 0.0;
  double mfdp_dir = 0.0;
  double power = 0.0;
  Index n_selected = 0;
  double threshold = kInfinity;
};

struct ReplicateRecord {
  Index nu_index = 0;  // into spec.nu_grid; 0 when cv_nu
  double nu = 0.0;     // value used (the CV choice when cv_nu)
  Index replicate = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  VariantMetrics knockoff;
  VariantMetrics knockoff_plus;

  const VariantMetrics& metrics(Variant v) const {
    return v == Variant::Knockoff ? knockoff : knockoff_plus;
  }
};

struct SummaryStat {
  double mean = 0.0;
  double sd = 0.0;
  double lo = 0.0;  // 10% empirical quantile, clamped to [0, 1] for rates
  double hi = 0.0;  // 90% empirical quantile, clamped to [0, 1] for rates
};

struct NuSummary {
  Index nu_index = 0;
  double nu = 0.0;  // NaN when cv_nu
  Variant variant = Variant::Knockoff;
  Index n_ok = 0;
  Index n_failed = 0;
  SummaryStat fdp_dir;
  SummaryStat mfdp_dir;
  SummaryStat power;
  SummaryStat n_selected;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ReplicateRecord> records;  // sorted by (nu_index, replicate)
  std::vector<NuSummary> summaries;      // sorted by (nu_index, variant)

  const NuSummary& summary(Index nu_index, Variant variant) const;
};

// Every (nu, replicate) cell: fresh instance from seed base_seed + replicate,
// fresh split, the configured pipeline, and metrics for both variants from
// one W. Failed cells are kept in `records` and left out of the summaries.
// The result does not depend on spec.jobs.
ExperimentReport run_experiment(const ExperimentSpec& spec);

SummaryStat summarize(std::vector<double> values, bool rate);

struct CvRow {
  double nu = 0.0;
  double mse = 0.0;  // fold average of the per-fold minimum over lambda
};

struct CvResult {
  double nu_star = 0.0;
  std::vector<CvRow> table;  // in nu_grid order
};

struct CvOptions {
  Index lambda_count = 50;
  double lambda_min_ratio = 1e-3;
};

// k-fold CV of the Split LASSO prediction error for each nu. Ties go to the
// smaller nu. Throws InvalidFolds when folds < 2 or a fold would be empty.
CvResult cv_select_nu(const Dataset& data1, const Matrix& d, const std::vector<double>& nu_grid,
                      int folds, Rng& rng, const CvOptions& options = {});

}  // namespace splitknock
