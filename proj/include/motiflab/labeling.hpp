#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motiflab/clustering.hpp"
#include "motiflab/gateway.hpp"

namespace motiflab::labeling {

inline constexpr std::string_view kLabelSystemPrompt =
    "You summarize lists of literary motif sentences into one concise umbrella motif sentence. "
    "Reply with the sentence only.";

/// Placeholder replaced by the numbered member list.
inline constexpr std::string_view kMembersSlot = "{members}";

struct LabelRequestSpec {
  std::size_t k_representatives = 20;
  std::size_t max_label_words = 30;
  std::string prompt_template{kMembersSlot};
  std::string system_prompt{kLabelSystemPrompt};
  std::string model = "mock-labeler";
  double temperature = 0.0;
  int max_output_tokens = 128;

  /// ConfigError unless k >= 1, max words >= 1 and the template holds exactly one slot.
  void validate() const;
  /// SHA-256 over the system prompt and template.
  std::string checksum() const;
};

/// Record indices of the k members nearest the cluster centroid by cosine
/// distance, nearest first, ties by record index. k is capped at the size.
std::vector<std::size_t> representatives(const clustering::MotifCluster& cluster,
                                         const Matrix& embeddings, std::size_t k);

gateway::ChatRequest build_label_request(std::span<const std::string> members,
                                         const LabelRequestSpec& spec);

struct Label {
  std::string text;
  bool fallback = false;
  bool truncated = false;
};

/// Reduces a model reply to its first sentence, then to at most `max_words`
/// words. `truncated` is set when anything was cut.
Label normalize_label(std::string_view reply, std::size_t max_words);

/// Never throws on backend trouble: any gateway failure or an empty reply
/// yields `fallback_sentence` with the fallback flag.
Label summarize_cluster(std::span<const std::string> members, const std::string& fallback_sentence,
                        gateway::ModelGateway& gateway, const LabelRequestSpec& spec);

/// Labels every cluster (in parallel on the gateway's width), then writes the
/// results into the catalog in one pass.
void label_all(clustering::MotifCatalog& catalog,
               std::span<const extraction::MotifRecord> records, const Matrix& embeddings,
               gateway::ModelGateway& gateway, const LabelRequestSpec& spec);

}  // namespace motiflab::labeling
