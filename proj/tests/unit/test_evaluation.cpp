#include <cmath>
#include <thread>

#include "doctest.h"
#include "oracles.hpp"
#include "splitknock/errors.hpp"
#include "splitknock/evaluation.hpp"

using namespace splitknock;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.n = 160;
  spec.p = 20;
  spec.n1 = 60;
  spec.lambda_count = 80;
  spec.nu_grid = {1.0, 10.0};
  spec.replicates = 3;
  spec.base_seed = 40;
  return spec;
}

}  // namespace

TEST_CASE("fdp_dir and power_dir worked examples") {
  // 0-based positions for the 1-based set {1, 2, 3}.
  const std::vector<Index> sel{0, 1, 2};
  const std::vector<int> signs{1, -1, 1};
  const Vector g = vec({1.0, 2.0, 0.0});
  CHECK(fdp_dir(sel, signs, g) == doctest::Approx(2.0 / 3.0));
  CHECK(fdp_dir({}, {}, g) == 0.0);
  CHECK(mfdp_dir(sel, signs, g, 0.2) == doctest::Approx(2.0 / 8.0));
  CHECK(fdp_classical(sel, g) == doctest::Approx(1.0 / 3.0));

  const Vector g2 = vec({2.0, -1.0});
  CHECK(power_dir({0, 1}, {1, -1}, g2) == 1.0);
  CHECK(power_dir({}, {}, g2) == 0.0);
  CHECK(power_dir({0}, {1}, g2) == 0.5);
  CHECK(power_dir({0}, {1}, Vector::Zero(2)) == 1.0);
}

TEST_CASE("metric ranges and the directional bound") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const Index m = 1 + static_cast<Index>(rng.uniform_index(30));
    Vector g(m);
    for (Index i = 0; i < m; ++i) g(i) = static_cast<double>(static_cast<int>(rng.uniform_index(3)) - 1);
    std::vector<Index> sel;
    std::vector<int> signs;
    for (Index i = 0; i < m; ++i) {
      if (rng.uniform() < 0.4) {
        sel.push_back(i);
        signs.push_back(rng.uniform() < 0.5 ? -1 : 1);
      }
    }
    const double f = fdp_dir(sel, signs, g);
    const double pw = power_dir(sel, signs, g);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(pw >= 0.0);
    CHECK(pw <= 1.0);
    CHECK(f >= fdp_classical(sel, g));
    CHECK(mfdp_dir(sel, signs, g, 0.2) <= f + 1e-15);
  }
}

TEST_CASE("beta pattern support") {
  const Vector b = make_beta_star(BetaPattern::Periodic20, 100);
  std::vector<Index> support;
  for (Index i = 0; i < 100; ++i) {
    if (b(i) != 0.0) support.push_back(i + 1);
  }
  CHECK(support == std::vector<Index>{2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18, 20});
  CHECK((b.array() == 1.0).count() == 13);
}

TEST_CASE("generated instances follow the scenario") {
  ExperimentSpec spec;
  spec.scenario = "d1";
  spec.transform = TransformKind::Identity;
  spec.sigma = 0.0;
  spec.n = 50;
  spec.p = 30;
  spec.n1 = 20;
  const Instance inst = generate_instance(spec, 3);
  CHECK(inst.truth.gamma_star == inst.truth.beta_star);
  CHECK((inst.data.y() - inst.data.X() * inst.truth.beta_star).norm() <= 1e-12);
  CHECK((inst.transform.D() * inst.truth.beta_star - inst.truth.gamma_star).norm() <= 1e-12);
  const Instance again = generate_instance(spec, 3);
  CHECK(again.data.X() == inst.data.X());
  CHECK(again.data.y() == inst.data.y());
  CHECK(generate_instance(spec, 4).data.X() != inst.data.X());

  ExperimentSpec d3;
  d3.transform = TransformKind::Stacked;
  d3.n = 40;
  d3.p = 25;
  d3.n1 = 16;
  const Instance s = generate_instance(d3, 1);
  CHECK(s.transform.m() == 49);
  CHECK((s.transform.D() * s.truth.beta_star - s.truth.gamma_star).norm() <= 1e-12);
}

TEST_CASE("ExperimentSpec validation") {
  ExperimentSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());
  spec.nu_grid.clear();
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_spec();
  spec.replicates = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("a single replicate equals a manual pipeline run") {
  ExperimentSpec spec = small_spec();
  spec.nu_grid = {1.0};
  spec.replicates = 1;
  const ExperimentReport report = run_experiment(spec);
  REQUIRE(report.records.size() == 1);
  const ReplicateRecord& rec = report.records[0];
  REQUIRE_FALSE(rec.failed);
  CHECK(rec.seed == spec.base_seed);

  const Instance inst = generate_instance(spec, spec.base_seed);
  SplitConfig config;
  config.nu = 1.0;
  config.q = spec.q;
  config.n1 = spec.n1;
  config.lambda_count = spec.lambda_count;
  config.seed = derive_seed(spec.base_seed, 1);
  const SelectionResult res = run_split_knockoff(inst.data, inst.transform, config);
  CHECK(rec.knockoff_plus.fdp_dir == fdp_dir(res, inst.truth.gamma_star));
  CHECK(rec.knockoff_plus.power == power_dir(res, inst.truth.gamma_star));
  CHECK(rec.knockoff_plus.n_selected == static_cast<Index>(res.selected.size()));
  CHECK(rec.knockoff_plus.threshold == res.T);
  double t = 0.0;
  const Selection plain = reselect(res, spec.q, false, &t);
  CHECK(rec.knockoff.threshold == t);
  CHECK(rec.knockoff.fdp_dir == fdp_dir(plain.selected, plain.signs, inst.truth.gamma_star));
  CHECK(report.summary(0, Variant::KnockoffPlus).fdp_dir.mean == rec.knockoff_plus.fdp_dir);
}

TEST_CASE("report does not depend on the number of workers") {
  ExperimentSpec spec = small_spec();
  spec.jobs = 1;
  const ExperimentReport serial = run_experiment(spec);
  spec.jobs = 4;
  const ExperimentReport parallel = run_experiment(spec);
  REQUIRE(serial.records.size() == 6);
  REQUIRE(parallel.records.size() == 6);
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    const auto& a = serial.records[i];
    const auto& b = parallel.records[i];
    CHECK(a.nu_index == b.nu_index);
    CHECK(a.replicate == b.replicate);
    CHECK(a.knockoff_plus.fdp_dir == b.knockoff_plus.fdp_dir);
    CHECK(a.knockoff_plus.power == b.knockoff_plus.power);
    CHECK(a.knockoff.threshold == b.knockoff.threshold);
  }
  for (std::size_t i = 0; i < serial.summaries.size(); ++i) {
    CHECK(serial.summaries[i].power.mean == parallel.summaries[i].power.mean);
    CHECK(serial.summaries[i].fdp_dir.sd == parallel.summaries[i].fdp_dir.sd);
  }
}

TEST_CASE("failed replicates are recorded and excluded") {
  ExperimentSpec spec = small_spec();
  spec.n1 = 150;  // leaves too few rows for the copy
  spec.nu_grid = {1.0};
  const ExperimentReport report = run_experiment(spec);
  for (const auto& rec : report.records) {
    CHECK(rec.failed);
    CHECK_FALSE(rec.error.empty());
  }
  const NuSummary& s = report.summary(0, Variant::KnockoffPlus);
  CHECK(s.n_ok == 0);
  CHECK(s.n_failed == 3);
}

TEST_CASE("summaries clamp rate intervals") {
  const SummaryStat s = summarize({0.0, 0.0, 0.0, 1.0, 1.0}, true);
  CHECK(s.mean == doctest::Approx(0.4));
  CHECK(s.lo >= 0.0);
  CHECK(s.hi <= 1.0);
  const SummaryStat one = summarize({0.5}, true);
  CHECK(one.mean == 0.5);
  CHECK(one.sd == 0.0);
}

TEST_CASE("cv_select_nu: single grid, determinism, bad folds") {
  ExperimentSpec spec = small_spec();
  const Instance inst = generate_instance(spec, 5);
  const Dataset half = restrict_rows(inst.data, std::vector<Index>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12,
                                                                   13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23,
                                                                   24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34,
                                                                   35, 36, 37, 38, 39});
  const Matrix& d = inst.transform.D();
  Rng rng(1);
  const CvResult single = cv_select_nu(half, d, {3.0}, 5, rng);
  CHECK(single.nu_star == 3.0);
  REQUIRE(single.table.size() == 1);

  const std::vector<double> grid{0.1, 1.0, 10.0, 100.0};
  Rng a(7);
  Rng b(7);
  const CvResult ra = cv_select_nu(half, d, grid, 5, a);
  const CvResult rb = cv_select_nu(half, d, grid, 5, b);
  CHECK(ra.nu_star == rb.nu_star);
  REQUIRE(ra.table.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ra.table[i].nu == grid[i]);
    CHECK(ra.table[i].mse == rb.table[i].mse);
    CHECK(ra.table[i].mse > 0.0);
  }
  double best = ra.table[0].mse;
  for (const auto& row : ra.table) best = std::min(best, row.mse);
  for (const auto& row : ra.table) {
    if (row.nu == ra.nu_star) CHECK(row.mse == best);
  }

  const auto kind = [&](int folds) {
    try {
      Rng r(1);
      cv_select_nu(half, d, grid, folds, r);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InternalInvariantViolation;
  };
  CHECK(kind(1) == ErrorKind::InvalidFolds);
  CHECK(kind(41) == ErrorKind::InvalidFolds);
}

TEST_CASE("D2 with cross-validated nu keeps power above 0.55") {
  ExperimentSpec spec;
  spec.scenario = "d2";
  spec.cv_nu = true;
  spec.nu_grid.clear();
  for (int k = 0; k <= 10; ++k) spec.nu_grid.push_back(std::pow(10.0, 0.2 * k));
  spec.replicates = 20;
  spec.base_seed = 500;
  spec.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const ExperimentReport report = run_experiment(spec);
  const NuSummary& plus = report.summary(0, Variant::KnockoffPlus);
  MESSAGE("CV nu: knockoff+ FDR_dir " << plus.fdp_dir.mean << ", power " << plus.power.mean);
  CHECK(plus.n_failed == 0);
  CHECK(plus.power.mean >= 0.55);
}
