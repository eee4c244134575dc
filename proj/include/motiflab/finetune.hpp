#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "motiflab/corpus.hpp"
#include "motiflab/gateway.hpp"

namespace motiflab::gateway {

/// Hyperparameters echoed next to an emitted training file. Defaults are the
/// published extraction fine-tune (3 batches, batch size 1, LR multiplier 2).
struct FinetuneSpec {
  std::string base_model = "gpt-4o-2024-08-06";
  std::size_t n_examples = 74;
  std::size_t batches = 3;
  std::size_t batch_size = 1;
  double lr_multiplier = 2.0;
};

struct Annotation {
  corpus::ChunkContext context;
  std::vector<std::string> gold_motifs;
};

using RequestBuilder = std::function<ChatRequest(const corpus::ChunkContext&)>;

/// Formats motif sentences the way the training targets expect: "1. ...\n2. ...".
std::string numbered_list(std::span<const std::string> items);

/// Writes one chat-format JSONL record per annotation (system, user, assistant)
/// to `out_path` and a sidecar `<out_path>.manifest.json` echoing the FinetuneSpec. The
/// sidecar's n_examples is the number of records actually written; a spec whose
/// n_examples disagrees is reported through the returned value, not an error.
/// Throws PreconditionError for an empty set or an annotation with no motifs.
FinetuneSpec emit_finetune_dataset(std::span<const Annotation> annotations, const FinetuneSpec& spec,
                                   const std::filesystem::path& out_path,
                                   const RequestBuilder& build_request);

}  // namespace motiflab::gateway
