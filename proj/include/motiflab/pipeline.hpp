#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "motiflab/analytics.hpp"
#include "motiflab/clustering.hpp"
#include "motiflab/corpus.hpp"
#include "motiflab/extraction.hpp"
#include "motiflab/gateway.hpp"
#include "motiflab/labeling.hpp"
#include "motiflab/tokenizer.hpp"

namespace motiflab::pipeline {

struct BackendConfig {
  std::string kind = "mock";  // mock | openai
  std::string model;
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_s = 120;
  int max_retries = 3;
  int retry_backoff_ms = 500;
  std::filesystem::path mock_table;  // optional canned replies, user_content -> reply
  std::size_t embedding_dim = 8;     // mock embedder only
};

struct AnalyticsConfig {
  std::vector<corpus::Period> periods{std::begin(corpus::kAllPeriods),
                                      std::end(corpus::kAllPeriods)};
  analytics::StdMode std_mode = analytics::StdMode::population;
  bool dedup_per_chunk = false;
  double network_threshold = 0.0;
  std::size_t uniqueness_k = 3;
  std::size_t figure_k = 5;
};

struct PipelineConfig {
  std::filesystem::path corpus_manifest;
  std::filesystem::path output_dir;
  std::filesystem::path cache_dir;  // empty disables the response cache
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
  bool offline = false;
  bool record_timestamps = false;

  corpus::TokenizerSpec tokenizer;
  std::vector<std::string> extra_terminators;

  BackendConfig extraction_backend;
  BackendConfig labeling_backend;
  BackendConfig embedding_backend;

  extraction::ExtractionSettings extraction;
  labeling::LabelRequestSpec labeling;
  clustering::ReducerParams reducer;
  clustering::HdbscanParams hdbscan;
  AnalyticsConfig analytics;

  /// ConfigError on any invalid combination.
  void validate() const;
  corpus::SplitOptions split_options() const;
};

/// Strict JSON config: unknown keys are a ConfigError. Relative paths resolve
/// against `base_dir`. API keys are never read from the file.
PipelineConfig parse_config(const Json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

enum class Stage { ingest, extract, embed, cluster, label, analyze, report };
inline constexpr Stage kAllStages[] = {Stage::ingest, Stage::extract, Stage::embed,
                                       Stage::cluster, Stage::label, Stage::analyze,
                                       Stage::report};
std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

/// Artifact names relative to the output directory.
namespace artifacts {
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kCorpus = "stages/corpus.json";
inline constexpr std::string_view kChunks = "stages/chunks.jsonl";
inline constexpr std::string_view kMotifs = "stages/motifs.jsonl";
inline constexpr std::string_view kWarnings = "stages/extraction_warnings.jsonl";
inline constexpr std::string_view kEmbeddings = "stages/embeddings.bin";
inline constexpr std::string_view kReduced = "stages/reduced.bin";
inline constexpr std::string_view kCatalog = "stages/catalog.json";
inline constexpr std::string_view kLabeledCatalog = "stages/catalog.labeled.json";
inline constexpr std::string_view kAnalytics = "stages/analytics.json";
}  // namespace artifacts

/// The artifact each stage must leave behind; later stages check these.
std::string_view primary_artifact(Stage s);

struct StageSummary {
  Stage stage = Stage::ingest;
  std::vector<std::string> lines;  // human-readable progress notes
  gateway::GatewayStats stats;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  /// Runs one stage. Prerequisites are checked first: the first missing
  /// artifact in pipeline order raises MissingArtifactError.
  StageSummary run(Stage s);
  std::vector<StageSummary> run_all();

  std::filesystem::path path_of(std::string_view artifact) const;
  const PipelineConfig& config() const noexcept { return cfg_; }

 private:
  void require_through(Stage s) const;
  StageSummary ingest();
  StageSummary extract();
  StageSummary embed();
  StageSummary cluster();
  StageSummary label();
  StageSummary analyze();
  StageSummary report();

  PipelineConfig cfg_;
};

/// Analysis results as stored between the analyze and report stages.
struct AnalysisBundle {
  analytics::MotifMatrix matrix;
  analytics::PeriodFreqTable table;
  std::vector<double> fluctuation;
  std::vector<double> persistence;
  analytics::SimilarityMatrix similarity;
  analytics::UniquenessTable uniqueness;
};
Json to_json(const AnalysisBundle& b);
AnalysisBundle bundle_from_json(const Json& j);

}  // namespace motiflab::pipeline
