#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motiflab/common.hpp"
#include "motiflab/tokenizer.hpp"

namespace motiflab::corpus {

enum class Period { Imperial, Komnenian, Palaiologan };

inline constexpr Period kAllPeriods[] = {Period::Imperial, Period::Komnenian,
                                         Period::Palaiologan};

std::string_view to_string(Period p);
/// Accepts the canonical spelling, case-insensitively. Throws FormatError otherwise.
Period parse_period(std::string_view name);

struct Novel {
  std::string id;
  std::string title;
  Period period = Period::Imperial;
  std::optional<std::string> author;
  std::string text;
};

struct Corpus {
  std::vector<Novel> novels;  // manifest order

  const Novel* find(std::string_view id) const;
  std::vector<Period> periods() const;  // distinct, in canonical order
  /// SHA-256 over ids, metadata and text digests; stable across machines.
  std::string digest() const;
};

/// Reads a JSON manifest of the form
///   {"novels": {"<id>": {"title": "...", "period": "Imperial", "author": "...", "path": "x.txt"}}}
/// Paths are relative to the manifest's directory. Errors name the offending entry.
Corpus load_corpus(const std::filesystem::path& manifest_path);

/// Byte range [begin, end) of one sentence in its source text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct SplitOptions {
  /// Strings that end a sentence when followed by whitespace or end of text.
  std::vector<std::string> terminators{"."};
};

/// Sentences exclude the whitespace between them; that whitespace is exactly
/// the gap between consecutive spans, so the text is recoverable from the spans.
std::vector<SentenceSpan> sentence_spans(std::string_view text, const SplitOptions& opts = {});
std::vector<std::string> split_sentences(std::string_view text, const SplitOptions& opts = {});

struct Chunk {
  std::string novel_id;
  std::size_t index = 0;
  std::string text;
  std::size_t token_count = 0;
  std::size_t first_sentence = 0;  // inclusive
  std::size_t last_sentence = 0;   // inclusive
  bool oversized_sentence = false;

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct ChunkContext {
  Chunk chunk;
  std::string context_text;
};

inline constexpr std::string_view kContextSeparator = "\n";

/// Greedy sentence packing: a sentence joins the open chunk while the chunk
/// stays within max_tokens; a lone sentence over the limit becomes its own
/// chunk with oversized_sentence set. Chunk token counts are sums of the
/// sentence counts.
std::vector<Chunk> chunk_novel(const Novel& novel, const TokenizerSpec& spec,
                               const SplitOptions& opts = {});

/// The chunk at `index` with up to two predecessors joined by kContextSeparator.
ChunkContext context_for(std::span<const Chunk> chunks, std::size_t index);

Json to_json(const Chunk& c);
Chunk chunk_from_json(const Json& j);

Json to_json(const Novel& n, bool include_text = false);
Novel novel_from_json(const Json& j);

}  // namespace motiflab::corpus
