#pragma once

// Hot numeric loops, each in two builds: `serial` is the reference kept for
// tests and benchmarks, `parallel` is the OpenMP version used by the library.
// Both evaluate every output element with the same arithmetic in the same
// order, so their results are bitwise identical regardless of thread count.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "motiflab/matrix.hpp"

namespace motiflab::kernels {

struct WeightedEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0.0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

inline double euclidean(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// 1 - cos(a, b); zero vectors are at distance 1 from everything.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) noexcept {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot(a, b) / (na * nb);
}

// Distance from each point to its k-th nearest neighbour, counting the point
// itself as the first (k is clamped to [1, n]).
//
// mutual_reachability_mst: Prim's algorithm over the complete graph with weight
// max(core[a], core[b], d(a, b)), rooted at point 0. Edge i attaches the
// (i+1)-th vertex; ties go to the lower vertex index.
//
// cosine_similarity: all row pairs; a zero-norm row yields NaN in its row/column.
//
// summed_cosine_distances: for each member row, the sum of cosine distances to
// every other member row.

namespace serial {
std::vector<double> core_distances(const Matrix& points, std::size_t k);
std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                  std::span<const double> core);
Matrix cosine_similarity(const Matrix& rows);
std::vector<double> summed_cosine_distances(const Matrix& rows,
                                            std::span<const std::size_t> members);
}  // namespace serial

namespace parallel {
std::vector<double> core_distances(const Matrix& points, std::size_t k);
std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                  std::span<const double> core);
Matrix cosine_similarity(const Matrix& rows);
std::vector<double> summed_cosine_distances(const Matrix& rows,
                                            std::span<const std::size_t> members);
}  // namespace parallel

}  // namespace motiflab::kernels
