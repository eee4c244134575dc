#pragma once

// Per-element bodies shared by the serial and OpenMP kernels.

#include <algorithm>
#include <limits>
#include <vector>

#include "motiflab/kernels.hpp"

namespace motiflab::kernels::detail {

inline double core_distance_of(const Matrix& points, std::size_t i, std::size_t k,
                               std::vector<double>& scratch) {
  const std::size_t n = points.rows();
  scratch.resize(n);
  const auto pi = points.row(i);
  for (std::size_t j = 0; j < n; ++j) scratch[j] = (i == j) ? 0.0 : euclidean(pi, points.row(j));
  const std::size_t kk = std::clamp<std::size_t>(k, 1, n) - 1;
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kk),
                   scratch.end());
  return scratch[kk];
}

inline double mutual_reachability(const Matrix& points, std::span<const double> core,
                                  std::size_t a, std::size_t b) {
  return std::max({core[a], core[b], euclidean(points.row(a), points.row(b))});
}

// Strict (weight, index) order; used for both the Prim frontier minimum and the
// per-thread reductions so every build picks the same vertex.
inline bool better(double w, std::size_t idx, double best_w, std::size_t best_idx) {
  return w < best_w || (w == best_w && idx < best_idx);
}

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::vector<double> row_norms(const Matrix& rows) {
  std::vector<double> norms(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) norms[i] = std::sqrt(dot(rows.row(i), rows.row(i)));
  return norms;
}

inline double cosine_entry(const Matrix& rows, const std::vector<double>& norms, std::size_t i,
                           std::size_t j) {
  if (norms[i] == 0.0 || norms[j] == 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (i == j) return 1.0;
  return dot(rows.row(i), rows.row(j)) / (norms[i] * norms[j]);
}

inline double summed_distance_of(const Matrix& rows, std::span<const std::size_t> members,
                                 std::size_t m) {
  double s = 0.0;
  const auto r = rows.row(members[m]);
  for (std::size_t o = 0; o < members.size(); ++o) {
    if (o != m) s += cosine_distance(r, rows.row(members[o]));
  }
  return s;
}

}  // namespace motiflab::kernels::detail
