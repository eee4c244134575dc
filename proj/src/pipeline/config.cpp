#include <algorithm>
#include <set>

#include "motiflab/pipeline.hpp"

namespace motiflab::pipeline {

namespace {

// Reads typed fields from one JSON object and rejects anything left unread.
class Section {
 public:
  Section(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(path(key) + " has the wrong type");
    }
  }

  void read_path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    read(key, s);
    if (!s.empty()) out = base / s;
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path(key));
  }

  const Json* raw(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (seen_.count(key)) continue;
      if (key == "api_key") {
        throw ConfigError(path(key) + ": API keys are never read from config files; set the "
                                      "environment variable named by api_key_env");
      }
      throw ConfigError("unknown config key " + path(key));
    }
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

BackendConfig parse_backend(Section s, const std::filesystem::path& base, std::string model) {
  BackendConfig b;
  b.model = std::move(model);
  s.read("kind", b.kind);
  s.read("model", b.model);
  s.read("base_url", b.base_url);
  s.read("api_key_env", b.api_key_env);
  s.read("timeout_s", b.timeout_s);
  s.read("max_retries", b.max_retries);
  s.read("retry_backoff_ms", b.retry_backoff_ms);
  s.read_path("mock_table", b.mock_table, base);
  s.read("embedding_dim", b.embedding_dim);
  s.finish();
  return b;
}

void validate_backend(const BackendConfig& b, const std::string& role) {
  const std::string where = "backends." + role;
  if (b.kind != "mock" && b.kind != "openai") {
    throw ConfigError(where + ".kind must be 'mock' or 'openai', got '" + b.kind + "'");
  }
  if (trim(b.model).empty()) throw ConfigError(where + ".model must not be empty");
  if (b.timeout_s < 1) throw ConfigError(where + ".timeout_s must be >= 1");
  if (b.max_retries < 1) throw ConfigError(where + ".max_retries must be >= 1");
  if (b.retry_backoff_ms < 0) throw ConfigError(where + ".retry_backoff_ms must be >= 0");
  if (b.embedding_dim < 1) throw ConfigError(where + ".embedding_dim must be >= 1");
  if (b.kind == "openai" && trim(b.api_key_env).empty()) {
    throw ConfigError(where + ".api_key_env must name an environment variable");
  }
}

}  // namespace

corpus::SplitOptions PipelineConfig::split_options() const {
  corpus::SplitOptions opts;
  opts.terminators.insert(opts.terminators.end(), extra_terminators.begin(),
                          extra_terminators.end());
  return opts;
}

void PipelineConfig::validate() const {
  if (corpus_manifest.empty()) throw ConfigError("corpus_manifest is required");
  if (output_dir.empty()) throw ConfigError("output_dir is required");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (!corpus::has_tokenizer(tokenizer.name)) {
    throw ConfigError("tokenizer.name '" + tokenizer.name + "' is not a registered tokenizer");
  }
  if (tokenizer.max_tokens < 1) throw ConfigError("tokenizer.max_tokens must be >= 1");
  for (const auto& t : extra_terminators) {
    if (t.empty()) throw ConfigError("tokenizer.extra_terminators must not contain empty strings");
  }
  validate_backend(extraction_backend, "extraction");
  validate_backend(labeling_backend, "labeling");
  validate_backend(embedding_backend, "embedding");
  if (!(extraction.temperature >= 0.0)) throw ConfigError("extraction.temperature must be >= 0");
  if (extraction.max_output_tokens < 1) throw ConfigError("extraction.max_output_tokens must be >= 1");
  if (!(extraction.failure_threshold >= 0.0 && extraction.failure_threshold <= 1.0)) {
    throw ConfigError("extraction.failure_threshold must lie in [0, 1]");
  }
  labeling.validate();
  if (!(labeling.temperature >= 0.0)) throw ConfigError("labeling.temperature must be >= 0");
  if (labeling.max_output_tokens < 1) throw ConfigError("labeling.max_output_tokens must be >= 1");
  reducer.validate();
  hdbscan.validate();
  if (analytics.periods.empty()) throw ConfigError("analytics.periods must not be empty");
  const std::set<corpus::Period> distinct(analytics.periods.begin(), analytics.periods.end());
  if (distinct.size() != analytics.periods.size()) {
    throw ConfigError("analytics.periods lists a period twice");
  }
  if (analytics.std_mode == analytics::StdMode::sample && analytics.periods.size() < 2) {
    throw ConfigError("analytics.std_mode 'sample' needs at least two periods");
  }
  if (!(analytics.network_threshold >= 0.0 && analytics.network_threshold <= 1.0)) {
    throw ConfigError("analytics.network_threshold must lie in [0, 1]");
  }
  if (analytics.uniqueness_k < 1) throw ConfigError("analytics.uniqueness_k must be >= 1");
  if (analytics.figure_k < 1) throw ConfigError("analytics.figure_k must be >= 1");
}

PipelineConfig parse_config(const Json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  Section root(j, "");
  root.read_path("corpus_manifest", c.corpus_manifest, base_dir);
  root.read_path("output_dir", c.output_dir, base_dir);
  root.read_path("cache_dir", c.cache_dir, base_dir);
  root.read("seed", c.seed);
  root.read("parallelism", c.parallelism);
  root.read("offline", c.offline);
  root.read("record_timestamps", c.record_timestamps);

  if (auto s = root.child("tokenizer")) {
    s->read("name", c.tokenizer.name);
    s->read("max_tokens", c.tokenizer.max_tokens);
    s->read("extra_terminators", c.extra_terminators);
    s->finish();
  }

  c.extraction_backend.model = c.extraction.model;
  c.labeling_backend.model = c.labeling.model;
  c.embedding_backend.model = "mock-embedder";
  if (auto s = root.child("backends")) {
    if (auto b = s->child("extraction")) c.extraction_backend = parse_backend(*b, base_dir, c.extraction.model);
    if (auto b = s->child("labeling")) c.labeling_backend = parse_backend(*b, base_dir, c.labeling.model);
    if (auto b = s->child("embedding")) c.embedding_backend = parse_backend(*b, base_dir, "mock-embedder");
    s->finish();
  }
  c.extraction.model = c.extraction_backend.model;
  c.labeling.model = c.labeling_backend.model;

  if (auto s = root.child("extraction")) {
    s->read("temperature", c.extraction.temperature);
    s->read("max_output_tokens", c.extraction.max_output_tokens);
    s->read("failure_threshold", c.extraction.failure_threshold);
    s->finish();
  }
  if (auto s = root.child("labeling")) {
    s->read("k_representatives", c.labeling.k_representatives);
    s->read("max_label_words", c.labeling.max_label_words);
    s->read("prompt_template", c.labeling.prompt_template);
    s->read("temperature", c.labeling.temperature);
    s->read("max_output_tokens", c.labeling.max_output_tokens);
    s->finish();
  }
  if (const Json* r = root.raw("reducer")) {
    c.reducer = clustering::reducer_params_from_json(*r);
    if (!c.reducer.external_path.empty()) c.reducer.external_path = base_dir / c.reducer.external_path;
  }
  if (const Json* h = root.raw("hdbscan")) c.hdbscan = clustering::hdbscan_params_from_json(*h);
  if (auto s = root.child("analytics")) {
    std::optional<std::vector<std::string>> periods;
    std::string std_mode = analytics::to_string(c.analytics.std_mode);
    if (const Json* p = s->raw("periods")) {
      try {
        periods = p->get<std::vector<std::string>>();
      } catch (const Json::exception&) {
        throw ConfigError("analytics.periods must be a list of period names");
      }
    }
    s->read("std_mode", std_mode);
    s->read("dedup_per_chunk", c.analytics.dedup_per_chunk);
    s->read("network_threshold", c.analytics.network_threshold);
    s->read("uniqueness_k", c.analytics.uniqueness_k);
    s->read("figure_k", c.analytics.figure_k);
    s->finish();
    if (periods) {
      c.analytics.periods.clear();
      for (const auto& p : *periods) {
        try {
          c.analytics.periods.push_back(corpus::parse_period(p));
        } catch (const FormatError& e) {
          throw ConfigError(std::string("analytics.periods: ") + e.what());
        }
      }
    }
    c.analytics.std_mode = analytics::parse_std_mode(std_mode);
  }
  root.finish();
  // The reducer seed follows the run seed so the manifest carries one value.
  c.reducer.seed = c.seed;
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  auto c = parse_config(j, path.parent_path());
  c.validate();
  return c;
}

}  // namespace motiflab::pipeline
