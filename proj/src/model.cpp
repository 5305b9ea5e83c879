#include "splitknock/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "splitknock/errors.hpp"

namespace splitknock {

Dataset::Dataset(Matrix x, Vector y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != y_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "dataset: X has " + std::to_string(x_.rows()) +
                                                  " rows but y has length " +
                                                  std::to_string(y_.size()));
  }
  if (!x_.allFinite() || !y_.allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "dataset: non-finite entries");
  }
}

std::string_view to_string(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::Identity: return "identity";
    case TransformKind::LineDifference: return "line_difference";
    case TransformKind::GraphDifference: return "graph_difference";
    case TransformKind::Stacked: return "stacked";
    case TransformKind::Custom: return "custom";
  }
  return "custom";
}

LinearTransform::LinearTransform(TransformKind kind, Matrix d, std::vector<Edge> edges)
    : kind_(kind), d_(std::move(d)), edges_(std::move(edges)) {}

LinearTransform LinearTransform::custom(Matrix d) {
  if (d.rows() < 1 || d.cols() < 1) {
    throw Error(ErrorKind::InvalidParameter, "custom transform must be non-empty");
  }
  if (!d.allFinite()) throw Error(ErrorKind::NonFiniteInput, "custom transform: non-finite");
  return LinearTransform(TransformKind::Custom, std::move(d), {});
}

namespace {

Matrix line_difference(Index p) {
  Matrix d = Matrix::Zero(p - 1, p);
  for (Index i = 0; i + 1 < p; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -1.0;
  }
  return d;
}

}  // namespace

LinearTransform make_transform(TransformKind kind, Index p, std::span<const Edge> edges) {
  if (p < 1) throw Error(ErrorKind::InvalidParameter, "transform: p must be positive");
  switch (kind) {
    case TransformKind::Identity:
      return LinearTransform(kind, Matrix::Identity(p, p), {});
    case TransformKind::LineDifference:
      if (p < 2) throw Error(ErrorKind::InvalidParameter, "line difference needs p >= 2");
      return LinearTransform(kind, line_difference(p), {});
    case TransformKind::Stacked: {
      if (p < 2) throw Error(ErrorKind::InvalidParameter, "stacked transform needs p >= 2");
      Matrix d(2 * p - 1, p);
      d << Matrix::Identity(p, p), line_difference(p);
      return LinearTransform(kind, std::move(d), {});
    }
    case TransformKind::GraphDifference: {
      if (p < 2) throw Error(ErrorKind::InvalidParameter, "graph difference needs p >= 2");
      if (edges.empty()) throw Error(ErrorKind::InvalidEdge, "graph difference needs edges");
      std::set<std::pair<Index, Index>> seen;
      Matrix d = Matrix::Zero(static_cast<Index>(edges.size()), p);
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [tail, head] = edges[e];
        if (tail < 1 || tail > p || head < 1 || head > p) {
          throw Error(ErrorKind::InvalidEdge, "edge (" + std::to_string(tail) + "," +
                                                  std::to_string(head) + ") outside [1," +
                                                  std::to_string(p) + "]");
        }
        if (tail == head) {
          throw Error(ErrorKind::InvalidEdge, "self-loop at " + std::to_string(tail));
        }
        if (!seen.emplace(std::min(tail, head), std::max(tail, head)).second) {
          throw Error(ErrorKind::InvalidEdge, "duplicate edge (" + std::to_string(tail) + "," +
                                                  std::to_string(head) + ")");
        }
        d(static_cast<Index>(e), tail - 1) = 1.0;
        d(static_cast<Index>(e), head - 1) = -1.0;
      }
      return LinearTransform(kind, std::move(d), {edges.begin(), edges.end()});
    }
    case TransformKind::Custom:
      break;
  }
  throw Error(ErrorKind::InvalidParameter, "make_transform: use LinearTransform::custom");
}

void SplitConfig::validate(Index n) const {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw Error(ErrorKind::InvalidParameter, "nu must be positive and finite");
  }
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidParameter, "q must lie in (0, 1)");
  if (lambda_count < 1) throw Error(ErrorKind::InvalidParameter, "lambda_count must be >= 1");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "lambda_min_ratio must lie in (0, 1)");
  }
  if (refine_bisection_steps < 0) {
    throw Error(ErrorKind::InvalidParameter, "refine_bisection_steps must be >= 0");
  }
  if (n > 0 && (n1 <= 0 || n1 >= n)) {
    throw Error(ErrorKind::InvalidSplit, "n1 = " + std::to_string(n1) + " must satisfy 0 < n1 < " +
                                             std::to_string(n));
  }
}

DataSplit split_samples(Index n, Index n1, Rng& rng, SplitMode mode) {
  if (n1 <= 0 || n1 >= n) {
    throw Error(ErrorKind::InvalidSplit,
                "n1 = " + std::to_string(n1) + " must satisfy 0 < n1 < n = " + std::to_string(n));
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (mode == SplitMode::Random) rng.shuffle(order.begin(), order.end());
  DataSplit split;
  split.idx1.assign(order.begin(), order.begin() + n1);
  split.idx2.assign(order.begin() + n1, order.end());
  std::sort(split.idx1.begin(), split.idx1.end());
  std::sort(split.idx2.begin(), split.idx2.end());
  return split;
}

Dataset restrict_rows(const Dataset& data, std::span<const Index> idx) {
  if (idx.empty()) throw Error(ErrorKind::InvalidIndex, "restrict: empty index list");
  std::vector<bool> used(static_cast<std::size_t>(data.n()), false);
  for (const Index i : idx) {
    if (i < 0 || i >= data.n()) {
      throw Error(ErrorKind::InvalidIndex, "restrict: row " + std::to_string(i) + " out of range");
    }
    if (used[static_cast<std::size_t>(i)]) {
      throw Error(ErrorKind::InvalidIndex, "restrict: row " + std::to_string(i) + " repeated");
    }
    used[static_cast<std::size_t>(i)] = true;
  }
  const auto rows = static_cast<Index>(idx.size());
  Matrix x(rows, data.p());
  Vector y(rows);
  for (Index r = 0; r < rows; ++r) {
    x.row(r) = data.X().row(idx[static_cast<std::size_t>(r)]);
    y(r) = data.y()(idx[static_cast<std::size_t>(r)]);
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset standardize(const Dataset& data) {
  Matrix x = data.X();
  const double root_n = std::sqrt(static_cast<double>(data.n()));
  for (Index j = 0; j < x.cols(); ++j) {
    const double scale = x.col(j).norm() / root_n;
    if (scale > 0.0) x.col(j) /= scale;
  }
  return Dataset(std::move(x), data.y());
}

Matrix select_columns(const Matrix& m, std::span<const Index> cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace splitknock
