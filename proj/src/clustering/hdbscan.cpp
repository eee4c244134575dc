#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

#include "motiflab/clustering.hpp"

namespace motiflab::clustering {

std::string to_string(Selection s) { return s == Selection::eom ? "eom" : "leaf"; }

Selection parse_selection(std::string_view s) {
  if (s == "eom") return Selection::eom;
  if (s == "leaf") return Selection::leaf;
  throw ConfigError("unknown cluster selection '" + std::string(s) + "' (expected eom or leaf)");
}

void HdbscanParams::validate() const {
  if (min_cluster_size < 2) throw ConfigError("hdbscan.min_cluster_size must be >= 2");
  if (min_samples < 1) throw ConfigError("hdbscan.min_samples must be >= 1");
}

namespace detail {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) x = std::exchange(parent_[x], root);
    return root;
  }

  /// The representative of `keep` stays the representative.
  void attach(std::size_t keep, std::size_t other) { parent_[find(other)] = find(keep); }

  std::size_t& raw(std::size_t x) { return parent_[x]; }

 private:
  std::vector<std::size_t> parent_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::vector<LinkageRow> single_linkage(std::size_t n, std::vector<kernels::WeightedEdge> mst) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const auto& a, const auto& b) { return a.weight < b.weight; });
  std::vector<LinkageRow> rows;
  rows.reserve(mst.size());
  UnionFind uf(2 * n);
  std::vector<std::size_t> size(2 * n, 1);
  std::size_t next = n;
  for (const auto& e : mst) {
    const std::size_t a = uf.find(e.from);
    const std::size_t b = uf.find(e.to);
    rows.push_back({a, b, e.weight, size[a] + size[b]});
    uf.raw(a) = next;
    uf.raw(b) = next;
    size[next] = size[a] + size[b];
    ++next;
  }
  return rows;
}

std::vector<CondensedRow> condense_tree(const std::vector<LinkageRow>& linkage, std::size_t n,
                                        std::size_t min_cluster_size) {
  std::vector<CondensedRow> out;
  if (linkage.empty()) return out;
  const std::size_t root = 2 * n - 2;
  const auto node_size = [&](std::size_t node) {
    return node < n ? std::size_t{1} : linkage[node - n].size;
  };

  // Breadth-first order over the dendrogram below `start`.
  const auto bfs = [&](std::size_t start) {
    std::vector<std::size_t> order;
    std::vector<std::size_t> level{start};
    while (!level.empty()) {
      order.insert(order.end(), level.begin(), level.end());
      std::vector<std::size_t> next;
      for (std::size_t x : level) {
        if (x >= n) {
          next.push_back(linkage[x - n].left);
          next.push_back(linkage[x - n].right);
        }
      }
      level = std::move(next);
    }
    return order;
  };

  std::vector<std::size_t> relabel(root + 1, 0);
  std::vector<char> ignore(root + 1, 0);
  relabel[root] = n;
  std::size_t next_label = n + 1;

  for (std::size_t node : bfs(root)) {
    if (ignore[node] || node < n) continue;
    const auto& row = linkage[node - n];
    const double lambda = row.distance > 0.0 ? 1.0 / row.distance : kInf;
    const std::size_t left = row.left, right = row.right;
    const std::size_t left_count = node_size(left), right_count = node_size(right);
    const std::size_t parent = relabel[node];

    const auto emit_points = [&](std::size_t sub) {
      for (std::size_t x : bfs(sub)) {
        if (x < n) out.push_back({parent, x, lambda, 1});
        ignore[x] = 1;
      }
    };

    if (left_count >= min_cluster_size && right_count >= min_cluster_size) {
      relabel[left] = next_label++;
      out.push_back({parent, relabel[left], lambda, left_count});
      relabel[right] = next_label++;
      out.push_back({parent, relabel[right], lambda, right_count});
    } else if (left_count < min_cluster_size && right_count < min_cluster_size) {
      emit_points(left);
      emit_points(right);
    } else if (left_count < min_cluster_size) {
      relabel[right] = parent;
      emit_points(left);
    } else {
      relabel[left] = parent;
      emit_points(right);
    }
  }
  return out;
}

std::vector<double> cluster_stability(const std::vector<CondensedRow>& tree, std::size_t n) {
  if (tree.empty()) return {};
  std::size_t max_id = n;
  for (const auto& r : tree) max_id = std::max({max_id, r.parent, r.child});
  const std::size_t clusters = max_id + 1 - n;

  std::vector<double> birth(clusters, 0.0);
  for (const auto& r : tree) {
    if (r.child >= n) birth[r.child - n] = r.lambda;
  }
  std::vector<double> stability(clusters, 0.0);
  for (const auto& r : tree) {
    const double b = birth[r.parent - n];
    // lambda == birth contributes nothing; the guard also keeps inf - inf out.
    if (r.lambda != b) stability[r.parent - n] += (r.lambda - b) * static_cast<double>(r.child_size);
  }
  return stability;
}

namespace {

std::vector<std::vector<std::size_t>> cluster_children(const std::vector<CondensedRow>& tree,
                                                       std::size_t n, std::size_t clusters) {
  std::vector<std::vector<std::size_t>> children(clusters);
  for (const auto& r : tree) {
    if (r.child_size > 1) children[r.parent - n].push_back(r.child);
  }
  return children;
}

}  // namespace

std::vector<std::size_t> select_clusters(const std::vector<CondensedRow>& tree, std::size_t n,
                                         std::vector<double> stability, Selection selection,
                                         bool allow_single_cluster) {
  const std::size_t clusters = stability.size();
  if (clusters == 0) return {};
  const auto children = cluster_children(tree, n, clusters);
  std::vector<char> selected(clusters, 0);

  if (selection == Selection::eom) {
    const std::size_t lowest = allow_single_cluster ? 0 : 1;
    for (std::size_t c = lowest; c < clusters; ++c) selected[c] = 1;
    for (std::size_t c = clusters; c-- > lowest;) {
      double subtree = 0.0;
      for (std::size_t ch : children[c]) subtree += stability[ch - n];
      if (subtree > stability[c]) {
        selected[c] = 0;
        stability[c] = subtree;
      } else {
        std::deque<std::size_t> queue(children[c].begin(), children[c].end());
        while (!queue.empty()) {
          const std::size_t x = queue.front();
          queue.pop_front();
          selected[x - n] = 0;
          queue.insert(queue.end(), children[x - n].begin(), children[x - n].end());
        }
      }
    }
  } else {
    bool any_leaf = false;
    for (std::size_t c = 1; c < clusters; ++c) {
      if (children[c].empty()) {
        selected[c] = 1;
        any_leaf = true;
      }
    }
    // No split at all: the root is the only candidate.
    if (!any_leaf) selected[0] = 1;
  }

  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < clusters; ++c) {
    if (selected[c]) out.push_back(c + n);
  }
  return out;
}

std::vector<int> label_points(const std::vector<CondensedRow>& tree, std::size_t n,
                              const std::vector<std::size_t>& selected, bool allow_single_cluster) {
  std::vector<int> labels(n, -1);
  if (tree.empty()) return labels;
  std::size_t max_id = n;
  for (const auto& r : tree) max_id = std::max({max_id, r.parent, r.child});
  std::vector<int> label_of(max_id + 1, -1);
  for (std::size_t i = 0; i < selected.size(); ++i) label_of[selected[i]] = static_cast<int>(i);

  UnionFind uf(max_id + 1);
  for (const auto& r : tree) {
    if (label_of[r.child] < 0 || r.child < n) uf.attach(r.parent, r.child);
  }

  const std::size_t root = n;
  double root_max_lambda = -kInf;
  for (const auto& r : tree) {
    if (r.parent == root) root_max_lambda = std::max(root_max_lambda, r.lambda);
  }
  for (const auto& r : tree) {
    if (r.child >= n) continue;
    const std::size_t cluster = uf.find(r.child);
    if (cluster != root) {
      labels[r.child] = label_of[cluster];
    } else if (allow_single_cluster && selected.size() == 1 && selected.front() == root &&
               r.lambda >= root_max_lambda) {
      labels[r.child] = label_of[root];
    }
  }
  return labels;
}

}  // namespace detail

HdbscanResult hdbscan(const Matrix& points, const HdbscanParams& p) {
  p.validate();
  const std::size_t n = points.rows();
  HdbscanResult result;
  result.labels.assign(n, -1);
  if (n < 2 || n < p.min_cluster_size) return result;

  const auto core = kernels::parallel::core_distances(points, p.min_samples);
  auto mst = kernels::parallel::mutual_reachability_mst(points, core);
  const auto linkage = detail::single_linkage(n, std::move(mst));
  const auto tree = detail::condense_tree(linkage, n, p.min_cluster_size);
  const auto stability = detail::cluster_stability(tree, n);
  const auto selected =
      detail::select_clusters(tree, n, stability, p.selection, p.allow_single_cluster);
  result.labels = detail::label_points(tree, n, selected, p.allow_single_cluster);
  for (std::size_t c : selected) result.stability.push_back(stability[c - n]);
  // The root can be selected (leaf mode, no split) without labelling anything.
  if (std::ranges::none_of(result.labels, [](int l) { return l >= 0; })) result.stability.clear();
  return result;
}

}  // namespace motiflab::clustering
