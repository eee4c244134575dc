#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motiflab/extraction.hpp"
#include "motiflab/gateway.hpp"
#include "motiflab/kernels.hpp"
#include "motiflab/matrix.hpp"

namespace motiflab::clustering {

enum class Metric { cosine, euclidean };
std::string to_string(Metric m);
Metric parse_metric(std::string_view s);

/// Row i embeds records[record_index[i]].
struct EmbeddingMatrix {
  Matrix rows;
  std::vector<std::size_t> record_index;
};

/// One embedding per record through the gateway. Rows are L2-normalized when
/// `downstream` is cosine. Any non-finite component is a FormatError.
EmbeddingMatrix embed_records(std::span<const extraction::MotifRecord> records,
                              gateway::ModelGateway& gateway, const std::string& model,
                              Metric downstream = Metric::cosine);

// Binary matrix file, little-endian:
//   0  char[8]  magic "MOTIFEMB"
//   8  uint32   format version (1)
//  12  uint32   dtype (1 = float64)
//  16  uint64   row count
//  24  uint64   dimension
//  32  float64  rows * dimension values, row-major
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

enum class ReducerMethod { none, pca, external };
std::string to_string(ReducerMethod m);
ReducerMethod parse_reducer_method(std::string_view s);

/// n_neighbors and min_dist are carried for the record and for external
/// reducers; PCA does not use them.
struct ReducerParams {
  ReducerMethod method = ReducerMethod::pca;
  std::size_t n_components = 5;
  std::size_t n_neighbors = 5;
  double min_dist = 0.09;
  Metric metric = Metric::cosine;
  std::uint64_t seed = 0;
  std::filesystem::path external_path;  // matrix file, method == external

  void validate() const;
};

/// PCA projects centered rows onto the leading covariance eigenvectors, each
/// sign-fixed so its largest-magnitude entry is positive. With the cosine
/// metric rows are L2-normalized first.
Matrix reduce(const Matrix& m, const ReducerParams& p);

enum class Selection { eom, leaf };
std::string to_string(Selection s);
Selection parse_selection(std::string_view s);

struct HdbscanParams {
  std::size_t min_cluster_size = 10;
  std::size_t min_samples = 10;
  Selection selection = Selection::eom;
  bool allow_single_cluster = false;

  void validate() const;
};

struct HdbscanResult {
  std::vector<int> labels;         // -1 for outliers, clusters dense from 0
  std::vector<double> stability;   // per cluster label
};

/// Euclidean HDBSCAN.
HdbscanResult hdbscan(const Matrix& points, const HdbscanParams& p);

namespace detail {

struct LinkageRow {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

struct CondensedRow {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;
  std::size_t child_size = 0;
};

/// Node ids: points are [0, n), merge i creates node n + i.
std::vector<LinkageRow> single_linkage(std::size_t n, std::vector<kernels::WeightedEdge> mst);

/// Condensed clusters are numbered from n (the root) upward.
std::vector<CondensedRow> condense_tree(const std::vector<LinkageRow>& linkage, std::size_t n,
                                        std::size_t min_cluster_size);

/// Stability per condensed cluster, indexed by (cluster id - n).
std::vector<double> cluster_stability(const std::vector<CondensedRow>& tree, std::size_t n);

/// Selected condensed cluster ids, ascending.
std::vector<std::size_t> select_clusters(const std::vector<CondensedRow>& tree, std::size_t n,
                                         std::vector<double> stability, Selection selection,
                                         bool allow_single_cluster);

std::vector<int> label_points(const std::vector<CondensedRow>& tree, std::size_t n,
                              const std::vector<std::size_t>& selected, bool allow_single_cluster);

}  // namespace detail

struct MotifCluster {
  int cluster_id = 0;
  std::vector<std::size_t> members;  // record indices, ascending
  std::size_t occurrence_count = 0;
  double stability = 0.0;
  std::size_t medoid_record = 0;
  std::string medoid_sentence;
  std::optional<std::string> label;
  bool label_fallback = false;
  bool label_truncated = false;
};

struct MotifCatalog {
  std::vector<MotifCluster> clusters;
  std::vector<std::size_t> outliers;  // record indices, ascending
  std::size_t record_count = 0;
  ReducerParams reducer;
  HdbscanParams params;
  std::string label_prompt_checksum;  // set by labeling
};

/// `embeddings` rows align with records and drive the medoid (minimum summed
/// cosine distance to co-members, ties to the lower record index).
MotifCatalog build_catalog(std::span<const extraction::MotifRecord> records,
                           std::span<const int> labels, const Matrix& embeddings,
                           std::span<const double> stability = {});

Json to_json(const ReducerParams& p);
ReducerParams reducer_params_from_json(const Json& j);
Json to_json(const HdbscanParams& p);
HdbscanParams hdbscan_params_from_json(const Json& j);

Json to_json(const MotifCatalog& c, std::span<const extraction::MotifRecord> records);
/// Rebuilds a catalog; record refs must resolve against `records`.
MotifCatalog catalog_from_json(const Json& j, std::span<const extraction::MotifRecord> records);

}  // namespace motiflab::clustering
