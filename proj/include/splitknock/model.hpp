#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitknock/numerics.hpp"

namespace splitknock {

// Regression observations: X is n x p, y has length n. All entries finite.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix x, Vector y);

  const Matrix& X() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  Index n() const noexcept { return x_.rows(); }
  Index p() const noexcept { return x_.cols(); }

 private:
  Matrix x_;
  Vector y_;
};

enum class TransformKind { Identity, LineDifference, GraphDifference, Stacked, Custom };

std::string_view to_string(TransformKind kind) noexcept;

// Directed edge between 1-based coordinates. The row of D for this edge has
// +1 at `tail` and -1 at `head`, so (D beta)_e = beta_tail - beta_head.
struct Edge {
  Index tail = 0;
  Index head = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class LinearTransform {
 public:
  LinearTransform() = default;

  // Wraps an arbitrary m x p matrix as a Custom transform.
  static LinearTransform custom(Matrix d);

  const Matrix& D() const noexcept { return d_; }
  TransformKind kind() const noexcept { return kind_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  Index m() const noexcept { return d_.rows(); }
  Index p() const noexcept { return d_.cols(); }

 private:
  friend LinearTransform make_transform(TransformKind, Index, std::span<const Edge>);
  LinearTransform(TransformKind kind, Matrix d, std::vector<Edge> edges);

  TransformKind kind_ = TransformKind::Custom;
  Matrix d_;
  std::vector<Edge> edges_;
};

// identity: I_p. line_difference: (p-1) x p with D(i,i) = 1, D(i,i+1) = -1.
// graph_difference: one row per edge. stacked: identity over line_difference.
// Custom is rejected here; use LinearTransform::custom.
LinearTransform make_transform(TransformKind kind, Index p, std::span<const Edge> edges = {});

enum class SMethod { Equicorrelated };

struct SplitConfig {
  double nu = 1.0;
  double q = 0.2;
  bool plus = true;
  Index n1 = 0;
  Index lambda_count = 200;
  double lambda_min_ratio = 1e-3;
  std::uint64_t seed = 0;
  SMethod s_method = SMethod::Equicorrelated;
  int refine_bisection_steps = 30;
  bool allow_nonconverged = false;
  // Put the first n1 rows into the path-estimation half instead of a random
  // partition. Used by regression tests.
  bool first_n1_split = false;

  // Throws InvalidParameter / InvalidSplit. Pass n = 0 to skip the n1 check.
  void validate(Index n) const;
};

// 0-based row indices, each list sorted ascending.
struct DataSplit {
  std::vector<Index> idx1;
  std::vector<Index> idx2;
};

enum class SplitMode { Random, FirstN1 };

DataSplit split_samples(Index n, Index n1, Rng& rng, SplitMode mode = SplitMode::Random);

// Row subset in the order given by idx (0-based). Empty or out-of-range
// index lists throw InvalidIndex.
Dataset restrict_rows(const Dataset& data, std::span<const Index> idx);

// Divides each column by its root mean square, ||x_j|| / sqrt(n). Zero
// columns are left untouched.
Dataset standardize(const Dataset& data);

// Columns / rows of a matrix picked by 0-based indices.
Matrix select_columns(const Matrix& m, std::span<const Index> cols);
Matrix select_rows(const Matrix& m, std::span<const Index> rows);

}  // namespace splitknock
