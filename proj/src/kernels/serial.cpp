#include "detail.hpp"

namespace motiflab::kernels::serial {

std::vector<double> core_distances(const Matrix& points, std::size_t k) {
  std::vector<double> core(points.rows());
  std::vector<double> scratch;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    core[i] = detail::core_distance_of(points, i, k, scratch);
  }
  return core;
}

std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                  std::span<const double> core) {
  const std::size_t n = points.rows();
  std::vector<WeightedEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);

  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, detail::kInf);
  std::vector<std::size_t> source(n, detail::kNone);

  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    double next_w = detail::kInf;
    std::size_t next = detail::kNone;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = detail::mutual_reachability(points, core, current, j);
      if (d < best[j]) {
        best[j] = d;
        source[j] = current;
      }
      if (detail::better(best[j], j, next_w, next)) {
        next_w = best[j];
        next = j;
      }
    }
    edges.push_back({source[next], next, best[next]});
    in_tree[next] = 1;
    current = next;
  }
  return edges;
}

Matrix cosine_similarity(const Matrix& rows) {
  const std::size_t n = rows.rows();
  const auto norms = detail::row_norms(rows);
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      sim(i, j) = sim(j, i) = detail::cosine_entry(rows, norms, i, j);
    }
  }
  return sim;
}

std::vector<double> summed_cosine_distances(const Matrix& rows,
                                            std::span<const std::size_t> members) {
  std::vector<double> out(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    out[m] = detail::summed_distance_of(rows, members, m);
  }
  return out;
}

}  // namespace motiflab::kernels::serial
