#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <limits>

#include <fmt/format.h>

#include "motiflab/backends.hpp"
#include "motiflab/pipeline.hpp"
#include "motiflab/report.hpp"

namespace motiflab::pipeline {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::extract: return "extract";
    case Stage::embed: return "embed";
    case Stage::cluster: return "cluster";
    case Stage::label: return "label";
    case Stage::analyze: return "analyze";
    case Stage::report: return "report";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string_view primary_artifact(Stage s) {
  switch (s) {
    case Stage::ingest: return artifacts::kChunks;
    case Stage::extract: return artifacts::kMotifs;
    case Stage::embed: return artifacts::kEmbeddings;
    case Stage::cluster: return artifacts::kCatalog;
    case Stage::label: return artifacts::kLabeledCatalog;
    case Stage::analyze: return artifacts::kAnalytics;
    case Stage::report: return "appendix_a.txt";
  }
  return "";
}

namespace {

std::vector<std::string_view> produced_by(Stage s) {
  switch (s) {
    case Stage::ingest: return {artifacts::kCorpus, artifacts::kChunks};
    case Stage::extract: return {artifacts::kMotifs};
    case Stage::embed: return {artifacts::kEmbeddings};
    case Stage::cluster: return {artifacts::kCatalog, artifacts::kReduced};
    case Stage::label: return {artifacts::kLabeledCatalog};
    case Stage::analyze: return {artifacts::kAnalytics};
    case Stage::report: return {};
  }
  return {};
}

// ---- JSON helpers for the analysis bundle; NaN travels as null. ----

Json number_json(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

double number_of(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json vector_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

std::vector<double> vector_of(const Json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(number_of(x));
  return v;
}

Json matrix_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", vector_json(m.data())}};
}

Matrix matrix_of(const Json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                vector_of(j.at("data")));
}

Json novels_json(const std::vector<analytics::NovelMeta>& novels) {
  Json a = Json::array();
  for (const auto& n : novels) {
    a.push_back(Json{{"id", n.id}, {"title", n.title}, {"period", corpus::to_string(n.period)}});
  }
  return a;
}

std::vector<analytics::NovelMeta> novels_of(const Json& j) {
  std::vector<analytics::NovelMeta> out;
  for (const auto& n : j) {
    out.push_back({n.at("id").get<std::string>(), n.at("title").get<std::string>(),
                   corpus::parse_period(n.at("period").get<std::string>())});
  }
  return out;
}

// ---- stage IO ----

std::vector<extraction::MotifRecord> load_records(const std::filesystem::path& p) {
  std::vector<extraction::MotifRecord> out;
  for (const auto& j : read_jsonl(p)) out.push_back(extraction::motif_from_json(j));
  return out;
}

corpus::Corpus load_corpus_meta(const std::filesystem::path& p) {
  const Json j = Json::parse(read_file(p));
  corpus::Corpus c;
  for (const auto& n : j.at("novels")) c.novels.push_back(corpus::novel_from_json(n));
  return c;
}

clustering::MotifCatalog load_catalog(const std::filesystem::path& p,
                                      std::span<const extraction::MotifRecord> records) {
  return clustering::catalog_from_json(Json::parse(read_file(p)), records);
}

void write_json(const std::filesystem::path& p, const Json& j) {
  write_file_atomic(p, j.dump(2) + "\n");
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::shared_ptr<gateway::ModelGateway> make_gateway(const PipelineConfig& cfg,
                                                    const BackendConfig& b) {
  std::shared_ptr<gateway::Backend> backend;
  if (b.kind == "mock") {
    gateway::MockOptions opts;
    opts.embedding_dim = b.embedding_dim;
    if (!b.mock_table.empty()) opts.canned = gateway::load_canned_table(b.mock_table);
    opts.responders.emplace(std::string(extraction::kExtractionPromptText),
                            [](const gateway::ChatRequest& r) -> std::optional<std::string> {
                              return gateway::synthetic_motif_reply(r);
                            });
    opts.responders.emplace(cfg.labeling.system_prompt,
                            [](const gateway::ChatRequest& r) -> std::optional<std::string> {
                              return gateway::first_item_reply(r);
                            });
    backend = std::make_shared<gateway::MockBackend>(std::move(opts));
  } else {
    const char* key = std::getenv(b.api_key_env.c_str());
    if (key == nullptr && !cfg.offline) {
      throw ConfigError("environment variable " + b.api_key_env +
                        " is not set (needed by the '" + b.model + "' backend)");
    }
    backend = std::make_shared<gateway::OpenAICompatibleBackend>(gateway::OpenAIOptions{
        b.base_url, key ? key : "", std::chrono::seconds(b.timeout_s)});
  }
  gateway::GatewayOptions opts;
  opts.cache_dir = cfg.cache_dir;
  opts.retry.max_attempts = b.max_retries;
  opts.retry.base_backoff = std::chrono::milliseconds(b.retry_backoff_ms);
  opts.parallelism = cfg.parallelism;
  opts.offline = cfg.offline;
  return std::make_shared<gateway::ModelGateway>(std::move(backend), opts);
}

std::string stats_line(const gateway::GatewayStats& s) {
  return fmt::format("{} backend calls, {} cache hits, {} retries", s.backend_calls(), s.cache_hits,
                     s.retries);
}

}  // namespace

Json to_json(const AnalysisBundle& b) {
  Json motifs = Json::array();
  for (const auto& m : b.matrix.motifs) motifs.push_back(Json{{"cluster_id", m.cluster_id}, {"label", m.label}});
  Json periods = Json::array();
  for (auto p : b.table.periods) periods.push_back(corpus::to_string(p));
  return Json{{"novels", novels_json(b.matrix.novels)},
              {"motifs", std::move(motifs)},
              {"counts", matrix_json(b.matrix.counts)},
              {"periods", std::move(periods)},
              {"period_totals", vector_json(b.table.totals)},
              {"rel_freq", matrix_json(b.table.rel_freq)},
              {"fluctuation", vector_json(b.fluctuation)},
              {"persistence", vector_json(b.persistence)},
              {"similarity", matrix_json(b.similarity.sim)},
              {"uniqueness", matrix_json(b.uniqueness.lift)}};
}

AnalysisBundle bundle_from_json(const Json& j) {
  try {
    AnalysisBundle b;
    b.matrix.novels = novels_of(j.at("novels"));
    for (const auto& m : j.at("motifs")) {
      b.matrix.motifs.push_back({m.at("cluster_id").get<int>(), m.at("label").get<std::string>()});
    }
    b.matrix.counts = matrix_of(j.at("counts"));
    for (const auto& p : j.at("periods")) b.table.periods.push_back(corpus::parse_period(p.get<std::string>()));
    b.table.totals = vector_of(j.at("period_totals"));
    b.table.rel_freq = matrix_of(j.at("rel_freq"));
    b.fluctuation = vector_of(j.at("fluctuation"));
    b.persistence = vector_of(j.at("persistence"));
    b.similarity = {b.matrix.novels, matrix_of(j.at("similarity"))};
    b.uniqueness = {matrix_of(j.at("uniqueness"))};
    return b;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed analytics artifact: ") + e.what());
  }
}

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::filesystem::path Pipeline::path_of(std::string_view artifact) const {
  return cfg_.output_dir / std::filesystem::path(artifact);
}

void Pipeline::require_through(Stage s) const {
  for (Stage t : kAllStages) {
    if (t == s) return;
    for (auto a : produced_by(t)) {
      if (!std::filesystem::exists(path_of(a))) {
        throw MissingArtifactError(path_of(a).string(), std::string(to_string(t)));
      }
    }
  }
}

StageSummary Pipeline::run(Stage s) {
  require_through(s);
  switch (s) {
    case Stage::ingest: return ingest();
    case Stage::extract: return extract();
    case Stage::embed: return embed();
    case Stage::cluster: return cluster();
    case Stage::label: return label();
    case Stage::analyze: return analyze();
    case Stage::report: return report();
  }
  throw Error("unknown stage");
}

std::vector<StageSummary> Pipeline::run_all() {
  std::vector<StageSummary> out;
  for (Stage s : kAllStages) out.push_back(run(s));
  return out;
}

namespace {

report::RunManifest open_manifest(const std::filesystem::path& p) {
  if (std::filesystem::exists(p)) return report::RunManifest::load(p);
  report::RunManifest m;
  m.set("tool", "motiflab");
  m.set("format_version", 1);
  return m;
}

void close_stage(report::RunManifest& m, const PipelineConfig& cfg, Stage s, Json params,
                 const std::filesystem::path& path) {
  if (cfg.record_timestamps) params["completed_at"] = utc_now();
  m.set("seed", cfg.seed);
  m.set_stage(std::string(to_string(s)), std::move(params));
  m.save(path);
}

}  // namespace

StageSummary Pipeline::ingest() {
  StageSummary out{Stage::ingest, {}, {}};
  const auto corpus = corpus::load_corpus(cfg_.corpus_manifest);
  const auto split = cfg_.split_options();

  std::vector<Json> chunk_lines;
  std::size_t oversized = 0, tokens = 0;
  Json novels = Json::array();
  for (const auto& novel : corpus.novels) {
    const auto chunks = corpus::chunk_novel(novel, cfg_.tokenizer, split);
    for (const auto& c : chunks) {
      oversized += c.oversized_sentence;
      tokens += c.token_count;
      chunk_lines.push_back(corpus::to_json(c));
    }
    Json meta = corpus::to_json(novel, false);
    meta["text_sha256"] = sha256_hex(novel.text);
    meta["chunks"] = chunks.size();
    novels.push_back(std::move(meta));
    out.lines.push_back(fmt::format("{}: {} chunks", novel.id, chunks.size()));
  }
  write_file_atomic(path_of(artifacts::kChunks), to_jsonl(chunk_lines));
  write_json(path_of(artifacts::kCorpus), Json{{"digest", corpus.digest()}, {"novels", novels}});

  auto manifest = open_manifest(path_of(artifacts::kManifest));
  manifest.set("corpus_digest", corpus.digest());
  close_stage(manifest, cfg_, Stage::ingest,
              Json{{"tokenizer", cfg_.tokenizer.name},
                   {"max_tokens", cfg_.tokenizer.max_tokens},
                   {"sentence_terminators", split.terminators},
                   {"novels", corpus.novels.size()},
                   {"chunks", chunk_lines.size()},
                   {"oversized_chunks", oversized},
                   {"tokens", tokens}},
              path_of(artifacts::kManifest));
  out.lines.push_back(fmt::format("{} chunks from {} novels ({} oversized)", chunk_lines.size(),
                                  corpus.novels.size(), oversized));
  return out;
}

StageSummary Pipeline::extract() {
  StageSummary out{Stage::extract, {}, {}};
  std::vector<corpus::Chunk> chunks;
  for (const auto& j : read_jsonl(path_of(artifacts::kChunks))) chunks.push_back(corpus::chunk_from_json(j));

  auto gw = make_gateway(cfg_, cfg_.extraction_backend);
  const extraction::ExtractionPrompt prompt;
  const auto write_warnings = [&](const extraction::ExtractionResult& r) {
    std::vector<Json> lines;
    for (const auto& w : r.warnings) {
      lines.push_back(Json{{"novel_id", w.novel_id}, {"chunk_index", w.chunk_index}, {"message", w.message}});
    }
    write_file_atomic(path_of(artifacts::kWarnings), to_jsonl(lines));
  };

  extraction::ExtractionResult result;
  try {
    result = extraction::extract_corpus(chunks, *gw, prompt, cfg_.extraction);
  } catch (const extraction::ExtractionFailed& e) {
    write_warnings(e.partial());
    throw;
  }
  std::vector<Json> lines;
  for (const auto& r : result.records) lines.push_back(extraction::to_json(r));
  write_file_atomic(path_of(artifacts::kMotifs), to_jsonl(lines));
  write_warnings(result);

  auto manifest = open_manifest(path_of(artifacts::kManifest));
  close_stage(manifest, cfg_, Stage::extract,
              Json{{"backend", cfg_.extraction_backend.kind},
                   {"model", cfg_.extraction.model},
                   {"prompt_sha256", prompt.checksum()},
                   {"temperature", cfg_.extraction.temperature},
                   {"max_output_tokens", cfg_.extraction.max_output_tokens},
                   {"failure_threshold", cfg_.extraction.failure_threshold},
                   {"chunks", result.chunks_total},
                   {"chunks_failed", result.chunks_failed},
                   {"records", result.records.size()},
                   {"warnings", result.warnings.size()}},
              path_of(artifacts::kManifest));
  out.stats = gw->stats();
  out.lines.push_back(fmt::format("{} motif records from {} chunks ({} failed, {} warnings)",
                                  result.records.size(), result.chunks_total, result.chunks_failed,
                                  result.warnings.size()));
  out.lines.push_back(stats_line(out.stats));
  return out;
}

StageSummary Pipeline::embed() {
  StageSummary out{Stage::embed, {}, {}};
  const auto records = load_records(path_of(artifacts::kMotifs));
  auto gw = make_gateway(cfg_, cfg_.embedding_backend);
  const auto emb = clustering::embed_records(records, *gw, cfg_.embedding_backend.model, cfg_.reducer.metric);
  clustering::write_matrix_file(path_of(artifacts::kEmbeddings), emb.rows);

  auto manifest = open_manifest(path_of(artifacts::kManifest));
  close_stage(manifest, cfg_, Stage::embed,
              Json{{"backend", cfg_.embedding_backend.kind},
                   {"model", cfg_.embedding_backend.model},
                   {"rows", emb.rows.rows()},
                   {"dimension", emb.rows.cols()},
                   {"l2_normalized", cfg_.reducer.metric == clustering::Metric::cosine}},
              path_of(artifacts::kManifest));
  out.stats = gw->stats();
  out.lines.push_back(fmt::format("{} embeddings of dimension {}", emb.rows.rows(), emb.rows.cols()));
  out.lines.push_back(stats_line(out.stats));
  return out;
}

StageSummary Pipeline::cluster() {
  StageSummary out{Stage::cluster, {}, {}};
  const auto records = load_records(path_of(artifacts::kMotifs));
  const auto emb = clustering::read_matrix_file(path_of(artifacts::kEmbeddings));
  if (emb.rows() != records.size()) {
    throw FormatError("embeddings hold " + std::to_string(emb.rows()) + " rows for " +
                      std::to_string(records.size()) + " motif records (rerun 'embed')");
  }
  const auto reduced = clustering::reduce(emb, cfg_.reducer);
  clustering::write_matrix_file(path_of(artifacts::kReduced), reduced);
  const auto res = clustering::hdbscan(reduced, cfg_.hdbscan);
  auto catalog = clustering::build_catalog(records, res.labels, emb, res.stability);
  catalog.reducer = cfg_.reducer;
  catalog.params = cfg_.hdbscan;
  write_json(path_of(artifacts::kCatalog), clustering::to_json(catalog, records));

  Json reducer = clustering::to_json(cfg_.reducer);
  if (cfg_.reducer.method == clustering::ReducerMethod::pca) {
    reducer["variant"] = "pca in place of umap; n_neighbors and min_dist unused";
  }
  auto manifest = open_manifest(path_of(artifacts::kManifest));
  close_stage(manifest, cfg_, Stage::cluster,
              Json{{"reducer", std::move(reducer)},
                   {"hdbscan", clustering::to_json(cfg_.hdbscan)},
                   {"records", records.size()},
                   {"clusters", catalog.clusters.size()},
                   {"outliers", catalog.outliers.size()}},
              path_of(artifacts::kManifest));
  out.lines.push_back(fmt::format("{} clusters, {} of {} records are outliers",
                                  catalog.clusters.size(), catalog.outliers.size(), records.size()));
  return out;
}

StageSummary Pipeline::label() {
  StageSummary out{Stage::label, {}, {}};
  const auto records = load_records(path_of(artifacts::kMotifs));
  const auto emb = clustering::read_matrix_file(path_of(artifacts::kEmbeddings));
  auto catalog = load_catalog(path_of(artifacts::kCatalog), records);
  auto gw = make_gateway(cfg_, cfg_.labeling_backend);
  labeling::label_all(catalog, records, emb, *gw, cfg_.labeling);
  write_json(path_of(artifacts::kLabeledCatalog), clustering::to_json(catalog, records));

  std::size_t fallback = 0, truncated = 0;
  for (const auto& c : catalog.clusters) {
    fallback += c.label_fallback;
    truncated += c.label_truncated;
  }
  auto manifest = open_manifest(path_of(artifacts::kManifest));
  close_stage(manifest, cfg_, Stage::label,
              Json{{"backend", cfg_.labeling_backend.kind},
                   {"model", cfg_.labeling.model},
                   {"prompt_sha256", cfg_.labeling.checksum()},
                   {"k_representatives", cfg_.labeling.k_representatives},
                   {"max_label_words", cfg_.labeling.max_label_words},
                   {"temperature", cfg_.labeling.temperature},
                   {"max_output_tokens", cfg_.labeling.max_output_tokens},
                   {"labels", catalog.clusters.size()},
                   {"fallback_labels", fallback},
                   {"truncated_labels", truncated}},
              path_of(artifacts::kManifest));
  out.stats = gw->stats();
  out.lines.push_back(fmt::format("{} labels ({} fallback, {} truncated)", catalog.clusters.size(),
                                  fallback, truncated));
  out.lines.push_back(stats_line(out.stats));
  return out;
}

StageSummary Pipeline::analyze() {
  StageSummary out{Stage::analyze, {}, {}};
  const auto corpus = load_corpus_meta(path_of(artifacts::kCorpus));
  const auto records = load_records(path_of(artifacts::kMotifs));
  const auto catalog = load_catalog(path_of(artifacts::kLabeledCatalog), records);

  AnalysisBundle b;
  b.matrix = analytics::build_motif_matrix(records, catalog, corpus, cfg_.analytics.dedup_per_chunk);
  b.table = analytics::period_relative_frequencies(b.matrix, cfg_.analytics.periods);
  b.fluctuation = analytics::fluctuation_scores(b.table, cfg_.analytics.std_mode);
  b.persistence = analytics::persistence_scores(b.table);
  b.similarity = analytics::similarity_matrix(b.matrix);
  b.uniqueness = analytics::uniqueness_scores(b.matrix);
  write_json(path_of(artifacts::kAnalytics), to_json(b));

  Json periods = Json::array();
  for (auto p : cfg_.analytics.periods) periods.push_back(corpus::to_string(p));
  auto manifest = open_manifest(path_of(artifacts::kManifest));
  close_stage(manifest, cfg_, Stage::analyze,
              Json{{"periods", std::move(periods)},
                   {"std_mode", analytics::to_string(cfg_.analytics.std_mode)},
                   {"dedup_per_chunk", cfg_.analytics.dedup_per_chunk},
                   {"novel_vectors", "raw occurrence counts"},
                   {"similarity", "cosine"},
                   {"uniqueness", "(count / novel_total) / (motif_total / grand_total)"},
                   {"novels", b.matrix.novels.size()},
                   {"motifs", b.matrix.motifs.size()}},
              path_of(artifacts::kManifest));
  out.lines.push_back(fmt::format("{} novels x {} motifs analysed", b.matrix.novels.size(),
                                  b.matrix.motifs.size()));
  return out;
}

StageSummary Pipeline::report() {
  StageSummary out{Stage::report, {}, {}};
  const auto records = load_records(path_of(artifacts::kMotifs));
  const auto catalog = load_catalog(path_of(artifacts::kLabeledCatalog), records);
  const auto b = bundle_from_json(Json::parse(read_file(path_of(artifacts::kAnalytics))));

  auto manifest = open_manifest(path_of(artifacts::kManifest));
  Json params{{"uniqueness_k", cfg_.analytics.uniqueness_k},
              {"figure_k", cfg_.analytics.figure_k},
              {"network_threshold", cfg_.analytics.network_threshold}};
  if (cfg_.record_timestamps) params["completed_at"] = utc_now();
  manifest.set("seed", cfg_.seed);
  manifest.set_stage("report", std::move(params));
  const std::string digest = manifest.digest();

  std::vector<report::Rendered> parts;
  parts.push_back(report::emit_motif_appendix(catalog, b.matrix, digest));
  parts.push_back(report::emit_uniqueness_report(b.uniqueness, b.matrix, cfg_.analytics.uniqueness_k, digest));
  parts.push_back(report::emit_similarity_report(b.similarity, digest));
  parts.push_back(report::emit_figure_data(b.fluctuation, b.persistence, b.table, b.matrix,
                                           cfg_.analytics.figure_k, digest));
  parts.push_back(report::emit_metric_tables(b.matrix, b.table, b.fluctuation, b.persistence, digest));
  parts.push_back(report::emit_network(
      analytics::network_export(b.similarity, cfg_.analytics.network_threshold), digest));

  std::size_t files = 0;
  for (const auto& p : parts) {
    report::write_rendered(cfg_.output_dir, p);
    files += p.files.size();
    for (const auto& w : p.warnings) out.lines.push_back("warning: " + w);
  }
  manifest.save(path_of(artifacts::kManifest));
  out.lines.push_back(fmt::format("{} report files written, manifest digest {}", files, digest));
  return out;
}

}  // namespace motiflab::pipeline
