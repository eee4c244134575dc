#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "motiflab/gateway.hpp"

namespace motiflab::gateway {

namespace fs = std::filesystem;

void ChatRequest::validate() const {
  if (model.empty()) throw PreconditionError("chat request: empty model id");
  if (trim(system_prompt).empty()) throw PreconditionError("chat request: empty system prompt");
  if (trim(user_content).empty()) throw PreconditionError("chat request: empty user content");
  if (!(temperature >= 0.0)) throw PreconditionError("chat request: temperature must be >= 0");
  if (max_output_tokens < 1) throw PreconditionError("chat request: max_output_tokens must be >= 1");
}

Json ChatRequest::canonical_body() const {
  return Json{{"model", model},
              {"messages",
               Json::array({Json{{"role", "system"}, {"content", system_prompt}},
                            Json{{"role", "user"}, {"content", user_content}}})},
              {"temperature", temperature},
              {"max_tokens", max_output_tokens}};
}

void EmbeddingRequest::validate() const {
  if (model.empty()) throw PreconditionError("embedding request: empty model id");
  if (texts.empty()) throw PreconditionError("embedding request: no texts");
  for (const auto& t : texts) {
    if (t.empty()) throw PreconditionError("embedding request: empty text in batch");
  }
}

CacheKey CacheKey::for_chat(const ChatRequest& req) {
  const Json keyed{{"endpoint", "chat"}, {"body", req.canonical_body()}};
  return {sha256_hex(keyed.dump())};
}

CacheKey CacheKey::for_embedding(const std::string& model, const std::string& text) {
  const Json keyed{{"endpoint", "embedding"}, {"model", model}, {"input", text}};
  return {sha256_hex(keyed.dump())};
}

ModelGateway::ModelGateway(std::shared_ptr<Backend> backend, GatewayOptions opts)
    : backend_(std::move(backend)), opts_(std::move(opts)) {
  if (!backend_) throw PreconditionError("gateway: null backend");
  if (opts_.retry.max_attempts < 1) throw PreconditionError("gateway: max_attempts must be >= 1");
  if (opts_.parallelism < 1) opts_.parallelism = 1;
}

GatewayStats ModelGateway::stats() const {
  return {chat_calls_.load(), embed_calls_.load(), texts_sent_.load(), cache_hits_.load(),
          retries_.load()};
}

void ModelGateway::check_offline(const char* what) const {
  if (opts_.offline && backend_->is_remote()) {
    throw OfflineError(std::string("offline mode: cache miss for ") + what + " and backend '" +
                       backend_->name() + "' is remote");
  }
}

template <typename Fn>
auto ModelGateway::with_retries(Fn&& fn) -> decltype(fn()) {
  auto delay = opts_.retry.base_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= opts_.retry.max_attempts) throw;
    }
    retries_.fetch_add(1);
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay = std::chrono::milliseconds(
        static_cast<long long>(std::llround(static_cast<double>(delay.count()) * opts_.retry.multiplier)));
  }
}

std::optional<std::string> ModelGateway::cache_get(const std::string& kind,
                                                   const CacheKey& key) const {
  if (opts_.cache_dir.empty()) return std::nullopt;
  const fs::path p = opts_.cache_dir / kind / (key.digest + ".json");
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return body;
}

void ModelGateway::cache_put(const std::string& kind, const CacheKey& key,
                             const std::string& payload) const {
  if (opts_.cache_dir.empty()) return;
  write_file_atomic(opts_.cache_dir / kind / (key.digest + ".json"), payload);
}

std::string ModelGateway::chat_complete(const ChatRequest& req) {
  req.validate();
  const auto key = CacheKey::for_chat(req);
  if (auto hit = cache_get("chat", key)) {
    try {
      auto j = Json::parse(*hit);
      cache_hits_.fetch_add(1);
      return j.at("completion").get<std::string>();
    } catch (const Json::exception&) {
      // Corrupt entry: fall through and refetch.
    }
  }
  check_offline("chat completion");
  std::string completion = with_retries([&] {
    chat_calls_.fetch_add(1);
    return backend_->complete(req);
  });
  cache_put("chat", key, Json{{"model", req.model}, {"completion", completion}}.dump());
  return completion;
}

std::vector<std::vector<double>> ModelGateway::embed(const EmbeddingRequest& req) {
  req.validate();
  const std::size_t n = req.texts.size();
  std::vector<std::vector<double>> out(n);
  std::vector<CacheKey> keys(n);
  std::vector<std::size_t> missing;

  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = CacheKey::for_embedding(req.model, req.texts[i]);
    if (auto hit = cache_get("embedding", keys[i])) {
      try {
        out[i] = Json::parse(*hit).at("embedding").get<std::vector<double>>();
        cache_hits_.fetch_add(1);
        continue;
      } catch (const Json::exception&) {
      }
    }
    missing.push_back(i);
  }

  if (!missing.empty()) {
    check_offline("embedding");
    // Duplicate texts are sent once; large miss sets go out in bounded batches.
    std::vector<std::string> unique_texts;
    std::unordered_map<std::string_view, std::size_t> seen;
    std::vector<std::size_t> slot(missing.size());
    for (std::size_t m = 0; m < missing.size(); ++m) {
      const std::string& t = req.texts[missing[m]];
      auto [it, inserted] = seen.try_emplace(t, unique_texts.size());
      if (inserted) unique_texts.push_back(t);
      slot[m] = it->second;
    }
    std::vector<std::vector<double>> fresh;
    fresh.reserve(unique_texts.size());
    const std::size_t batch = std::max<std::size_t>(1, opts_.max_embed_batch);
    for (std::size_t b = 0; b < unique_texts.size(); b += batch) {
      const std::span<const std::string> part(unique_texts.data() + b,
                                              std::min(batch, unique_texts.size() - b));
      auto vectors = with_retries([&] {
        embed_calls_.fetch_add(1);
        return backend_->embed(req.model, part);
      });
      if (vectors.size() != part.size()) {
        throw BackendError("embedding backend returned " + std::to_string(vectors.size()) +
                               " vectors for " + std::to_string(part.size()) + " texts",
                           0, false);
      }
      for (auto& v : vectors) fresh.push_back(std::move(v));
    }
    texts_sent_.fetch_add(unique_texts.size());
    for (std::size_t m = 0; m < missing.size(); ++m) {
      const std::size_t i = missing[m];
      out[i] = fresh[slot[m]];
      cache_put("embedding", keys[i], Json{{"model", req.model}, {"embedding", out[i]}}.dump());
    }
  }

  const std::size_t dim = out.front().size();
  for (const auto& v : out) {
    if (v.size() != dim || dim == 0) {
      throw BackendError("embedding dimension mismatch within batch", 0, false);
    }
  }
  return out;
}

}  // namespace motiflab::gateway
