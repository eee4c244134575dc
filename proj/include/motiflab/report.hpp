#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motiflab/analytics.hpp"
#include "motiflab/clustering.hpp"
#include "motiflab/common.hpp"

namespace motiflab::report {

/// Parameters and checksums of a pipeline run, one section per stage. The
/// digest is SHA-256 over the canonical (key-sorted, compact) JSON of every
/// field except the digest itself.
class RunManifest {
 public:
  RunManifest();

  /// Top-level field.
  void set(const std::string& key, Json value);
  const Json& get(const std::string& key) const;
  bool has(const std::string& key) const;

  /// Replaces a stage section wholesale so reruns do not accumulate stale keys.
  void set_stage(const std::string& stage, Json params);
  const Json& stage(const std::string& stage) const;
  bool has_stage(const std::string& stage) const;

  std::string digest() const;
  /// Fields plus "digest".
  Json to_json() const;
  static RunManifest from_json(const Json& j);

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);

 private:
  Json data_;
};

struct Artifact {
  std::string name;  // file name inside the report directory
  std::string contents;
};

struct Rendered {
  std::vector<Artifact> files;
  std::vector<std::string> warnings;
};

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view s);

/// Shortest decimal text that parses back to the same double.
std::string full_precision(double v);

/// appendix_a.txt / appendix_a.csv: motifs by occurrence count descending (ties
/// by cluster id), numbered from 1, "label - N occurrences". Counts come from
/// the matrix column sums. Unlabeled clusters are a PreconditionError.
Rendered emit_motif_appendix(const clustering::MotifCatalog& catalog,
                             const analytics::MotifMatrix& matrix, std::string_view digest);

/// figure_a_fluctuating.csv, figure_b_persistent.csv and appendix_d.txt: the
/// top k motifs under each score with their per-period frequencies. k beyond
/// the motif count is capped with a warning.
Rendered emit_figure_data(std::span<const double> fluctuation, std::span<const double> persistence,
                          const analytics::PeriodFreqTable& table,
                          const analytics::MotifMatrix& matrix, std::size_t k,
                          std::string_view digest);

/// appendix_c.txt (two decimals) and appendix_c.csv (full precision): every
/// pair, most similar first. Also similarity_matrix.csv.
Rendered emit_similarity_report(const analytics::SimilarityMatrix& sim, std::string_view digest);

/// appendix_b.txt / appendix_b.csv: per novel, the k most unique motifs.
/// Also uniqueness.csv with the full lift table.
Rendered emit_uniqueness_report(const analytics::UniquenessTable& uniq,
                                const analytics::MotifMatrix& matrix, std::size_t k,
                                std::string_view digest);

/// motif_matrix.csv, period_frequencies.csv, fluctuation.csv, persistence.csv.
Rendered emit_metric_tables(const analytics::MotifMatrix& matrix,
                            const analytics::PeriodFreqTable& table,
                            std::span<const double> fluctuation,
                            std::span<const double> persistence, std::string_view digest);

/// network.json: the node-link document with the digest attached.
Rendered emit_network(Json network, std::string_view digest);

/// Writes each artifact atomically under `dir`.
void write_rendered(const std::filesystem::path& dir, const Rendered& r);

}  // namespace motiflab::report
