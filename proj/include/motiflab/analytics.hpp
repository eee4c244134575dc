#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motiflab/clustering.hpp"
#include "motiflab/corpus.hpp"
#include "motiflab/extraction.hpp"
#include "motiflab/matrix.hpp"

namespace motiflab::analytics {

struct NovelMeta {
  std::string id;
  std::string title;
  corpus::Period period = corpus::Period::Imperial;
};

struct MotifMeta {
  int cluster_id = 0;
  std::string label;
};

/// Novels x motifs occurrence counts. Entries are whole numbers stored as
/// doubles so the matrix feeds the numeric kernels directly.
struct MotifMatrix {
  std::vector<NovelMeta> novels;
  std::vector<MotifMeta> motifs;
  Matrix counts;

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

/// Rows follow corpus order, columns follow catalog order. With
/// `dedup_per_chunk`, a motif counts at most once per (novel, chunk).
MotifMatrix build_motif_matrix(std::span<const extraction::MotifRecord> records,
                               const clustering::MotifCatalog& catalog,
                               const corpus::Corpus& corpus, bool dedup_per_chunk = false);

struct PeriodFreqTable {
  std::vector<corpus::Period> periods;
  std::vector<double> totals;  // clustered records per period
  Matrix rel_freq;             // periods x motifs
};

/// Every novel's period must be in `periods`, and every period needs at least
/// one clustered record.
PeriodFreqTable period_relative_frequencies(const MotifMatrix& m,
                                            std::span<const corpus::Period> periods);

enum class StdMode { population, sample };
std::string to_string(StdMode m);
StdMode parse_std_mode(std::string_view s);

std::vector<double> fluctuation_scores(const PeriodFreqTable& t, StdMode mode = StdMode::population);
std::vector<double> persistence_scores(const PeriodFreqTable& t);

/// Column indices by score descending, ties to the lower index.
std::vector<std::size_t> rank_descending(std::span<const double> scores);

struct SimilarityMatrix {
  std::vector<NovelMeta> novels;
  Matrix sim;
};

struct RankedPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double similarity = 0.0;
};

/// Cosine of row vectors, clamped to [0, 1]. A novel with no clustered
/// records is a PreconditionError naming it.
SimilarityMatrix similarity_matrix(const MotifMatrix& m);

/// All i < j pairs ordered by (-similarity, i, j).
std::vector<RankedPair> ranked_pairs(const SimilarityMatrix& s);

/// lift[n][m] = (counts / rowsum(n)) / (colsum(m) / grand_total); NaN where the
/// motif never occurs, 0 for a novel without clustered records.
struct UniquenessTable {
  Matrix lift;
};
UniquenessTable uniqueness_scores(const MotifMatrix& m);

/// Column indices of the k highest lifts for novel `n`; ties go to the larger
/// count, then the lower column.
std::vector<std::size_t> top_k(const UniquenessTable& u, const MotifMatrix& m, std::size_t n,
                               std::size_t k);

/// Node-link graph: nodes are novels, links are pairs with sim >= threshold.
Json network_export(const SimilarityMatrix& s, double threshold);

// Published pair list replay.

struct FixturePair {
  std::size_t a = 0;  // index into titles
  std::size_t b = 0;
  double similarity = 0.0;
  std::size_t line = 0;
};

struct SimilarityFixture {
  std::vector<NovelMeta> novels;  // id == title
  std::vector<FixturePair> pairs;  // file order
};

/// Format: "Novel: <title> | <period>" declarations, then one
/// "<title> and <title>: similarity <score>" line per pair. '#' starts a comment.
SimilarityFixture parse_similarity_fixture(std::string_view text);
SimilarityFixture load_similarity_fixture(const std::filesystem::path& path);

struct FixtureReport {
  std::size_t pair_count = 0;
  std::size_t expected_pairs = 0;
  double min_similarity = 0.0;
  double max_similarity = 0.0;
  std::vector<std::string> violations;
  SimilarityMatrix sim;

  bool ok() const { return violations.empty(); }
};

/// Checks range [0, 1], descending file order, no duplicate or self pairs and
/// completeness (every pair of declared novels exactly once).
FixtureReport verify_fixture(const SimilarityFixture& f);

}  // namespace motiflab::analytics
