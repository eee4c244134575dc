#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "motiflab/gateway.hpp"

namespace motiflab::gateway {

/// Produces a reply for a request it recognises, or nullopt to defer.
using MockResponder = std::function<std::optional<std::string>(const ChatRequest&)>;

struct MockOptions {
  /// Exact user_content -> completion; consulted before any responder.
  std::map<std::string, std::string> canned;
  /// system_prompt -> responder; consulted after the canned table.
  std::map<std::string, MockResponder> responders;
  std::size_t embedding_dim = 8;
};

/// Deterministic offline backend. Every reply is a pure function of the request.
/// Embeddings are feature-hashed bag-of-words vectors normalised to unit length,
/// so sentences sharing words land close together.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockOptions opts);

  std::string name() const override { return "mock"; }
  bool is_remote() const override { return false; }
  std::string complete(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::string& model,
                                         std::span<const std::string> texts) override;

  static std::vector<double> hash_embedding(const std::string& text, std::size_t dim);

 private:
  MockOptions opts_;
};

/// Loads a canned table from a JSON object {"<user content>": "<completion>", ...}.
std::map<std::string, std::string> load_canned_table(const std::filesystem::path& path);

/// Replies with a numbered list of three motif sentences drawn from a fixed
/// synthetic vocabulary, chosen by hashing the user content.
std::string synthetic_motif_reply(const ChatRequest& req);

/// Replies with the first item of a numbered list in the user content.
std::string first_item_reply(const ChatRequest& req);

struct OpenAIOptions {
  /// e.g. "https://api.openai.com/v1" or "http://localhost:8000/v1".
  std::string base_url;
  std::string api_key;
  std::chrono::seconds timeout{120};
};

/// Chat completions and embeddings over the OpenAI-compatible JSON protocol.
/// 429 and 5xx responses and transport failures are retryable.
class OpenAICompatibleBackend final : public Backend {
 public:
  explicit OpenAICompatibleBackend(OpenAIOptions opts);

  std::string name() const override { return "openai-compatible:" + opts_.base_url; }
  bool is_remote() const override { return true; }
  std::string complete(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::string& model,
                                         std::span<const std::string> texts) override;

 private:
  Json post(const std::string& endpoint, const Json& body) const;

  OpenAIOptions opts_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace motiflab::gateway
