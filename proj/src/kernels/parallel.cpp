#include "detail.hpp"

namespace motiflab::kernels::parallel {

namespace {
using Index = std::ptrdiff_t;
}

std::vector<double> core_distances(const Matrix& points, std::size_t k) {
  const auto n = static_cast<Index>(points.rows());
  std::vector<double> core(points.rows());
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (Index i = 0; i < n; ++i) {
      core[static_cast<std::size_t>(i)] =
          detail::core_distance_of(points, static_cast<std::size_t>(i), k, scratch);
    }
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
#pragma omp parallel
    {
      double local_w = detail::kInf;
      std::size_t local = detail::kNone;
#pragma omp for schedule(static) nowait
      for (Index jj = 0; jj < static_cast<Index>(n); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        if (in_tree[j]) continue;
        const double d = detail::mutual_reachability(points, core, current, j);
        if (d < best[j]) {
          best[j] = d;
          source[j] = current;
        }
        if (detail::better(best[j], j, local_w, local)) {
          local_w = best[j];
          local = j;
        }
      }
#pragma omp critical(motiflab_prim_min)
      if (detail::better(local_w, local, next_w, next)) {
        next_w = local_w;
        next = local;
      }
    }
    edges.push_back({source[next], next, best[next]});
    in_tree[next] = 1;
    current = next;
  }
  return edges;
}

Matrix cosine_similarity(const Matrix& rows) {
  const auto n = static_cast<Index>(rows.rows());
  const auto norms = detail::row_norms(rows);
  Matrix sim(rows.rows(), rows.rows());
#pragma omp parallel for schedule(dynamic, 1)
  for (Index ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = i; j < rows.rows(); ++j) {
      const double v = detail::cosine_entry(rows, norms, i, j);
      sim(i, j) = v;
      sim(j, i) = v;
    }
  }
  return sim;
}

std::vector<double> summed_cosine_distances(const Matrix& rows,
                                            std::span<const std::size_t> members) {
  const auto m = static_cast<Index>(members.size());
  std::vector<double> out(members.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    out[static_cast<std::size_t>(i)] =
        detail::summed_distance_of(rows, members, static_cast<std::size_t>(i));
  }
  return out;
}

}  // namespace motiflab::kernels::parallel
