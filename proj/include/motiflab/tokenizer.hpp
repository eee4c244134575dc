#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace motiflab::corpus {

struct TokenizerSpec {
  std::string name = "unicode-word";
  std::size_t max_tokens = 1000;
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Counts tokens with the counter registered under `spec.name`.
/// Throws PreconditionError for an unknown name.
std::size_t count_tokens(std::string_view text, const TokenizerSpec& spec);

/// Built-ins:
///   "unicode-word"  maximal runs of letters/marks/digits are one token, every
///                   punctuation or symbol code point is its own token, and
///                   whitespace/control characters separate.
///   "whitespace"    whitespace-delimited fields.
/// Registering an existing name replaces it.
void register_tokenizer(std::string name, TokenCounter counter);
bool has_tokenizer(std::string_view name);
std::vector<std::string> tokenizer_names();

/// Character classes used by the unicode-word counter and by sentence splitting.
enum class CharClass { Separator, Punctuation, Word };
CharClass classify(char32_t cp);

/// Decodes the code point at `pos`, advancing it. Invalid bytes decode to U+FFFD.
char32_t next_code_point(std::string_view text, std::size_t& pos);

}  // namespace motiflab::corpus
