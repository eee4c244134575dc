#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "motiflab/analytics.hpp"

namespace motiflab::analytics {

std::vector<double> MotifMatrix::row_sums() const {
  std::vector<double> out(counts.rows(), 0.0);
  for (std::size_t r = 0; r < counts.rows(); ++r) {
    for (double v : counts.row(r)) out[r] += v;
  }
  return out;
}

std::vector<double> MotifMatrix::col_sums() const {
  std::vector<double> out(counts.cols(), 0.0);
  for (std::size_t r = 0; r < counts.rows(); ++r) {
    const auto row = counts.row(r);
    for (std::size_t c = 0; c < counts.cols(); ++c) out[c] += row[c];
  }
  return out;
}

MotifMatrix build_motif_matrix(std::span<const extraction::MotifRecord> records,
                               const clustering::MotifCatalog& catalog,
                               const corpus::Corpus& corpus, bool dedup_per_chunk) {
  MotifMatrix m;
  std::map<std::string, std::size_t, std::less<>> row_of;
  for (const auto& n : corpus.novels) {
    row_of.emplace(n.id, m.novels.size());
    m.novels.push_back({n.id, n.title, n.period});
  }
  for (const auto& c : catalog.clusters) m.motifs.push_back({c.cluster_id, c.label.value_or("")});
  m.counts = Matrix(m.novels.size(), m.motifs.size());

  for (std::size_t col = 0; col < catalog.clusters.size(); ++col) {
    std::set<std::pair<std::size_t, std::size_t>> seen;  // (row, chunk)
    for (std::size_t idx : catalog.clusters[col].members) {
      if (idx >= records.size()) {
        throw PreconditionError("cluster " + std::to_string(catalog.clusters[col].cluster_id) +
                                " references record " + std::to_string(idx) + " of " +
                                std::to_string(records.size()));
      }
      const auto& r = records[idx];
      const auto it = row_of.find(r.novel_id);
      if (it == row_of.end()) {
        throw PreconditionError("motif record references unknown novel '" + r.novel_id + "'");
      }
      if (dedup_per_chunk && !seen.emplace(it->second, r.chunk_index).second) continue;
      m.counts(it->second, col) += 1.0;
    }
  }
  return m;
}

PeriodFreqTable period_relative_frequencies(const MotifMatrix& m,
                                            std::span<const corpus::Period> periods) {
  PeriodFreqTable t;
  t.periods.assign(periods.begin(), periods.end());
  t.totals.assign(periods.size(), 0.0);
  t.rel_freq = Matrix(periods.size(), m.counts.cols());
  const auto slot = [&](corpus::Period p) {
    const auto it = std::find(t.periods.begin(), t.periods.end(), p);
    return static_cast<std::size_t>(it - t.periods.begin());
  };

  for (std::size_t r = 0; r < m.novels.size(); ++r) {
    const std::size_t p = slot(m.novels[r].period);
    if (p == t.periods.size()) {
      throw PreconditionError("novel '" + m.novels[r].id + "' has period " +
                              std::string(corpus::to_string(m.novels[r].period)) +
                              ", which is not in the configured period set");
    }
    const auto row = m.counts.row(r);
    auto out = t.rel_freq.row(p);
    for (std::size_t c = 0; c < row.size(); ++c) {
      out[c] += row[c];
      t.totals[p] += row[c];
    }
  }
  for (std::size_t p = 0; p < t.periods.size(); ++p) {
    if (t.totals[p] == 0.0) {
      throw PreconditionError("period " + std::string(corpus::to_string(t.periods[p])) +
                              " has no clustered motif records");
    }
    for (double& v : t.rel_freq.row(p)) v /= t.totals[p];
  }
  return t;
}

std::string to_string(StdMode m) { return m == StdMode::population ? "population" : "sample"; }

StdMode parse_std_mode(std::string_view s) {
  if (s == "population") return StdMode::population;
  if (s == "sample") return StdMode::sample;
  throw ConfigError("unknown std_mode '" + std::string(s) + "' (expected population or sample)");
}

std::vector<double> persistence_scores(const PeriodFreqTable& t) {
  const std::size_t np = t.rel_freq.rows();
  std::vector<double> out(t.rel_freq.cols(), 0.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    // Shifted about the first period so equal frequencies give that value exactly.
    const double base = np ? t.rel_freq(0, c) : 0.0;
    double shift = 0.0;
    for (std::size_t p = 0; p < np; ++p) shift += t.rel_freq(p, c) - base;
    out[c] = base + shift / static_cast<double>(np);
  }
  return out;
}

std::vector<double> fluctuation_scores(const PeriodFreqTable& t, StdMode mode) {
  const std::size_t np = t.rel_freq.rows();
  const double denom = static_cast<double>(mode == StdMode::sample ? np - 1 : np);
  if (denom <= 0.0) throw PreconditionError("sample standard deviation needs at least two periods");
  const auto mean = persistence_scores(t);
  std::vector<double> out(mean.size(), 0.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    double ss = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      const double d = t.rel_freq(p, c) - mean[c];
      ss += d * d;
    }
    out[c] = std::sqrt(ss / denom);
  }
  return out;
}

std::vector<std::size_t> rank_descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

SimilarityMatrix similarity_matrix(const MotifMatrix& m) {
  const auto sums = m.row_sums();
  for (std::size_t r = 0; r < sums.size(); ++r) {
    if (sums[r] == 0.0) {
      throw PreconditionError("novel '" + m.novels[r].id +
                              "' has no clustered motifs; its similarity is undefined");
    }
  }
  SimilarityMatrix s{m.novels, kernels::parallel::cosine_similarity(m.counts)};
  for (double& v : s.sim.data()) v = std::clamp(v, 0.0, 1.0);
  return s;
}

std::vector<RankedPair> ranked_pairs(const SimilarityMatrix& s) {
  std::vector<RankedPair> out;
  const std::size_t n = s.sim.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.push_back({i, j, s.sim(i, j)});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedPair& x, const RankedPair& y) {
    return x.similarity > y.similarity;
  });
  return out;
}

UniquenessTable uniqueness_scores(const MotifMatrix& m) {
  const auto rows = m.row_sums();
  const auto cols = m.col_sums();
  const double grand = std::accumulate(rows.begin(), rows.end(), 0.0);
  if (grand <= 0.0) throw PreconditionError("uniqueness: the matrix has no counts");
  UniquenessTable u{Matrix(m.counts.rows(), m.counts.cols())};
  for (std::size_t r = 0; r < m.counts.rows(); ++r) {
    for (std::size_t c = 0; c < m.counts.cols(); ++c) {
      if (cols[c] == 0.0) {
        u.lift(r, c) = std::numeric_limits<double>::quiet_NaN();
      } else if (rows[r] == 0.0) {
        u.lift(r, c) = 0.0;
      } else {
        u.lift(r, c) = (m.counts(r, c) / rows[r]) / (cols[c] / grand);
      }
    }
  }
  return u;
}

std::vector<std::size_t> top_k(const UniquenessTable& u, const MotifMatrix& m, std::size_t n,
                               std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t c = 0; c < u.lift.cols(); ++c) {
    if (!std::isnan(u.lift(n, c))) idx.push_back(c);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tuple(u.lift(n, a), m.counts(n, a)) > std::tuple(u.lift(n, b), m.counts(n, b));
  });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

Json network_export(const SimilarityMatrix& s, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw PreconditionError("network threshold must lie in [0, 1]");
  }
  Json nodes = Json::array();
  for (const auto& n : s.novels) {
    nodes.push_back(Json{{"id", n.id}, {"title", n.title}, {"period", corpus::to_string(n.period)}});
  }
  Json links = Json::array();
  for (std::size_t i = 0; i < s.novels.size(); ++i) {
    for (std::size_t j = i + 1; j < s.novels.size(); ++j) {
      const double w = s.sim(i, j);
      if (w >= threshold) {
        links.push_back(Json{{"source", s.novels[i].id}, {"target", s.novels[j].id}, {"weight", w}});
      }
    }
  }
  return Json{{"directed", false},
              {"multigraph", false},
              {"graph", Json{{"threshold", threshold}}},
              {"nodes", std::move(nodes)},
              {"links", std::move(links)}};
}

}  // namespace motiflab::analytics
