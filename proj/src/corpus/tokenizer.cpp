#include <map>
#include <mutex>
#include <shared_mutex>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "motiflab/error.hpp"
#include "motiflab/tokenizer.hpp"

namespace motiflab::corpus {

char32_t next_code_point(std::string_view text, std::size_t& pos) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  auto i = static_cast<int32_t>(pos);
  UChar32 c = 0;
  U8_NEXT(s, i, length, c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? U'\uFFFD' : static_cast<char32_t>(c);
}

CharClass classify(char32_t cp) {
  switch (u_charType(static_cast<UChar32>(cp))) {
    case U_SPACE_SEPARATOR:
    case U_LINE_SEPARATOR:
    case U_PARAGRAPH_SEPARATOR:
    case U_CONTROL_CHAR:
      return CharClass::Separator;
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return CharClass::Punctuation;
    default:
      // Letters, marks, numbers, connector punctuation, format and private-use.
      return CharClass::Word;
  }
}

namespace {

std::size_t count_unicode_words(std::string_view text) {
  std::size_t tokens = 0;
  bool in_word = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    switch (classify(next_code_point(text, pos))) {
      case CharClass::Separator:
        in_word = false;
        break;
      case CharClass::Punctuation:
        ++tokens;
        in_word = false;
        break;
      case CharClass::Word:
        if (!in_word) ++tokens;
        in_word = true;
        break;
    }
  }
  return tokens;
}

std::size_t count_whitespace_fields(std::string_view text) {
  std::size_t tokens = 0;
  bool in_field = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const bool sep = classify(next_code_point(text, pos)) == CharClass::Separator;
    if (!sep && !in_field) ++tokens;
    in_field = !sep;
  }
  return tokens;
}

struct Registry {
  std::shared_mutex mutex;
  std::map<std::string, TokenCounter, std::less<>> counters{
      {"unicode-word", count_unicode_words},
      {"whitespace", count_whitespace_fields},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

std::size_t count_tokens(std::string_view text, const TokenizerSpec& spec) {
  TokenCounter counter;
  {
    auto& r = registry();
    std::shared_lock lock(r.mutex);
    const auto it = r.counters.find(spec.name);
    if (it == r.counters.end()) throw PreconditionError("unknown tokenizer: " + spec.name);
    counter = it->second;
  }
  return text.empty() ? 0 : counter(text);
}

void register_tokenizer(std::string name, TokenCounter counter) {
  auto& r = registry();
  std::unique_lock lock(r.mutex);
  r.counters.insert_or_assign(std::move(name), std::move(counter));
}

bool has_tokenizer(std::string_view name) {
  auto& r = registry();
  std::shared_lock lock(r.mutex);
  return r.counters.find(name) != r.counters.end();
}

std::vector<std::string> tokenizer_names() {
  auto& r = registry();
  std::shared_lock lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.counters) names.push_back(name);
  return names;
}

}  // namespace motiflab::corpus
