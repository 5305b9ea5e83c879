#pragma once

#include <limits>
#include <vector>

#include "splitknock/model.hpp"
#include "splitknock/numerics.hpp"

namespace splitknock {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// W_i = Z_i * sign(Z_i - Z~_i); |Z_i - Z~_i| <= tie_tol gives W_i = 0.
Vector w_statistics(const Vector& z, const Vector& z_tilde, double tie_tol = 0.0);

// W'_i = max(Z_i, Z~_i) * sign(Z_i - Z~_i), same tie rule. W' <= W elementwise.
Vector w_statistics_max(const Vector& z, const Vector& z_tilde, double tie_tol = 0.0);

// Smallest t among the distinct nonzero |W_i| with
//   (#{W_i <= -t} + plus) / max(1, #{W_i >= t}) <= q,
// or +infinity when no candidate qualifies.
double threshold(const Vector& w, double q, bool plus);

struct Selection {
  std::vector<Index> selected;  // positions i with W_i >= T, ascending
  std::vector<int> signs;       // r_i at those positions
};

Selection select(const Vector& w, double t, const Eigen::VectorXi& r);

struct PipelineDiagnostics {
  std::vector<bool> converged;
  Vector s;
  double nu = 0.0;
  double lambda_max = 0.0;
  int nonconverged_refinements = 0;
  bool sample_split = true;
  std::vector<Index> idx1;  // rows used for the path (0-based)
  std::vector<Index> idx2;  // rows used for the copy (0-based)
  std::vector<Index> screened_beta;  // columns kept by screening; empty = all
};

struct SelectionResult {
  // Entry k of W / Z / Z_tilde / r refers to transformed coordinate
  // coordinates[k] (0-based). Without screening this is 0..m-1.
  Vector W;
  Vector Z;
  Vector Z_tilde;
  Eigen::VectorXi r;
  std::vector<Index> coordinates;
  double T = kInfinity;
  std::vector<Index> selected;  // original coordinates, ascending
  std::vector<int> signs;       // aligned with selected
  SplitConfig config;
  PipelineDiagnostics diagnostics;
};

// Full procedure: split rows, Split LASSO path on the first half, knockoff
// copy and zeta on the second, Z / Z~ / r, W, threshold and selection.
// Requires n - n1 >= m + p (InsufficientSamples otherwise) and a converged
// path unless config.allow_nonconverged.
SelectionResult run_split_knockoff(const Dataset& data, const LinearTransform& transform,
                                   const SplitConfig& config);

// Same steps with both halves equal to the full dataset. Requires n >= m + p.
SelectionResult run_no_split(const Dataset& data, const LinearTransform& transform,
                             const SplitConfig& config);

// Selection recomputed from an existing result's W at another (q, plus).
Selection reselect(const SelectionResult& result, double q, bool plus, double* t_out = nullptr);

}  // namespace splitknock
