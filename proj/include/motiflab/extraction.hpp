#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motiflab/corpus.hpp"
#include "motiflab/gateway.hpp"

namespace motiflab::extraction {

/// The extraction system prompt, byte for byte.
inline constexpr std::string_view kExtractionPromptText =
    "Identify potential literary motifs (recurring recognizable and meaningful patterns of "
    "meaning) from the provided text, expressed as concise, single sentences. Focus on motifs "
    "related to characters, objects, emotions, or events. Only extract motifs from the current "
    "text, ignoring the preceding context. Do not mention character names, and refrain from "
    "providing any additional commentary beyond the list of motifs.";

inline constexpr std::string_view kContextHeader = "PRECEDING CONTEXT:";
inline constexpr std::string_view kCurrentHeader = "CURRENT TEXT:";

struct ExtractionPrompt {
  std::string text{kExtractionPromptText};

  std::string checksum() const { return sha256_hex(text); }
};

struct ExtractionSettings {
  std::string model = "mock-extractor";
  double temperature = 0.0;
  int max_output_tokens = 512;
  /// The run fails when failed_chunks / total_chunks exceeds this.
  double failure_threshold = 0.01;
};

struct MotifRecord {
  std::string novel_id;
  std::size_t chunk_index = 0;
  std::size_t ordinal = 0;  // 0-based position in the model's list
  std::string sentence;

  friend bool operator==(const MotifRecord&, const MotifRecord&) = default;
  friend auto operator<=>(const MotifRecord&, const MotifRecord&) = default;
};

Json to_json(const MotifRecord& r);
MotifRecord motif_from_json(const Json& j);

/// System prompt is the extraction prompt. The user message holds the
/// context block (omitted when empty) and then the current chunk, each under
/// its own header line.
gateway::ChatRequest build_extraction_request(const corpus::ChunkContext& cc,
                                              const ExtractionPrompt& prompt,
                                              const ExtractionSettings& settings = {});

struct ParseResult {
  std::vector<std::string> sentences;
  std::vector<std::string> warnings;
};

/// Accepts numbered or bulleted lists, one sentence per line, or run-on
/// sentences separated by full stops, optionally behind a "Motifs:" label.
/// Strips list markers, drops empty and punctuation-only items and removes
/// exact duplicates keeping the first occurrence.
ParseResult parse_motif_list(std::string_view completion);

struct ExtractionWarning {
  std::string novel_id;
  std::size_t chunk_index = 0;
  std::string message;
};

struct ExtractionResult {
  std::vector<MotifRecord> records;  // sorted by (novel_id, chunk_index, ordinal)
  std::vector<ExtractionWarning> warnings;
  std::size_t chunks_total = 0;
  std::size_t chunks_failed = 0;
};

/// Raised when too many chunks fail; carries the partial result.
class ExtractionFailed : public Error {
 public:
  ExtractionFailed(const std::string& what, ExtractionResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const ExtractionResult& partial() const noexcept { return partial_; }

 private:
  ExtractionResult partial_;
};

/// One chat call per chunk (through the gateway cache), run on the gateway's
/// parallelism. `chunks` holds every novel's chunks, each novel contiguous and
/// in index order.
ExtractionResult extract_corpus(std::span<const corpus::Chunk> chunks,
                                gateway::ModelGateway& gateway, const ExtractionPrompt& prompt,
                                const ExtractionSettings& settings = {});

}  // namespace motiflab::extraction
