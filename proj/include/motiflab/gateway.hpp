#pragma once

// All chat-completion and embedding traffic goes through ModelGateway: request
// validation, a content-addressed on-disk cache, bounded retries and offline
// enforcement. Backends only implement the wire exchange.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motiflab/common.hpp"
#include "motiflab/error.hpp"

namespace motiflab::gateway {

struct ChatRequest {
  std::string model;
  std::string system_prompt;
  std::string user_content;
  double temperature = 0.0;
  int max_output_tokens = 512;

  /// Throws PreconditionError on empty prompt/content or negative temperature.
  void validate() const;
  /// Canonical body; key order is fixed so equal requests serialize identically.
  Json canonical_body() const;
};

struct EmbeddingRequest {
  std::string model;
  std::vector<std::string> texts;

  void validate() const;
};

struct CacheKey {
  std::string digest;

  static CacheKey for_chat(const ChatRequest& req);
  static CacheKey for_embedding(const std::string& model, const std::string& text);

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

/// A failed exchange with a model backend. `status` is the HTTP status when one
/// was received (0 for transport failures).
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status, bool retryable)
      : Error(what), status_(status), retryable_(retryable) {}
  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

/// Raised in offline mode when a remote backend would have to be contacted.
class OfflineError : public Error {
 public:
  using Error::Error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Remote backends are forbidden in offline mode; local ones (mock) are not.
  virtual bool is_remote() const = 0;
  virtual std::string complete(const ChatRequest& req) = 0;
  virtual std::vector<std::vector<double>> embed(const std::string& model,
                                                 std::span<const std::string> texts) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{500};
  double multiplier = 2.0;
};

struct GatewayOptions {
  /// Empty disables caching.
  std::filesystem::path cache_dir;
  RetryPolicy retry;
  std::size_t parallelism = 4;
  std::size_t max_embed_batch = 256;
  bool offline = false;
};

struct GatewayStats {
  std::size_t chat_backend_calls = 0;
  std::size_t embed_backend_calls = 0;
  std::size_t embedded_texts_sent = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;

  std::size_t backend_calls() const { return chat_backend_calls + embed_backend_calls; }
};

/// Thread-safe; share one instance across workers.
class ModelGateway {
 public:
  ModelGateway(std::shared_ptr<Backend> backend, GatewayOptions opts);

  std::string chat_complete(const ChatRequest& req);

  /// One vector per input text, all of one dimension. Texts are cached
  /// individually; only cache misses are sent, in a single backend call.
  std::vector<std::vector<double>> embed(const EmbeddingRequest& req);

  std::size_t parallelism() const noexcept { return opts_.parallelism; }
  const Backend& backend() const noexcept { return *backend_; }
  GatewayStats stats() const;

 private:
  template <typename Fn>
  auto with_retries(Fn&& fn) -> decltype(fn());
  void check_offline(const char* what) const;

  std::optional<std::string> cache_get(const std::string& kind, const CacheKey& key) const;
  void cache_put(const std::string& kind, const CacheKey& key, const std::string& payload) const;

  std::shared_ptr<Backend> backend_;
  GatewayOptions opts_;

  std::atomic<std::size_t> chat_calls_{0};
  std::atomic<std::size_t> embed_calls_{0};
  std::atomic<std::size_t> texts_sent_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

}  // namespace motiflab::gateway
