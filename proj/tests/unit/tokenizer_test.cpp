#include <algorithm>

#include <doctest.h>

#include "motiflab/common.hpp"
#include "motiflab/error.hpp"
#include "motiflab/tokenizer.hpp"

using namespace motiflab;
using corpus::TokenizerSpec;

TEST_SUITE("tokenizer") {
  TEST_CASE("empty and whitespace-only text count zero") {
    CHECK(corpus::count_tokens("", {}) == 0);
    CHECK(corpus::count_tokens(" \n\t ", {}) == 0);
    CHECK(corpus::count_tokens("", {"whitespace", 10}) == 0);
  }

  TEST_CASE("plain words") {
    CHECK(corpus::count_tokens("one two three", {}) == 3);
    CHECK(corpus::count_tokens("one two three", {"whitespace", 10}) == 3);
  }

  TEST_CASE("punctuation is its own token under unicode-word") {
    CHECK(corpus::count_tokens("Hello, world!", {}) == 4);
    CHECK(corpus::count_tokens("Hello, world!", {"whitespace", 10}) == 2);
  }

  TEST_CASE("frozen counts from the reference script") {
    const auto doc = Json::parse(read_file(MOTIFLAB_SOURCE_DIR "/tests/fixtures/token_counts.json"));
    const auto& cases = doc.at("cases");
    REQUIRE(cases.size() >= 10);
    bool saw_long = false;
    for (const auto& c : cases) {
      const auto text = c.at("text").get<std::string>();
      CAPTURE(text.substr(0, 60));
      CHECK(corpus::count_tokens(text, {"unicode-word", 1}) == c.at("unicode-word").get<std::size_t>());
      CHECK(corpus::count_tokens(text, {"whitespace", 1}) == c.at("whitespace").get<std::size_t>());
      saw_long = saw_long || c.at("whitespace").get<std::size_t>() >= 1200;
    }
    CHECK(saw_long);
  }

  TEST_CASE("unknown tokenizer name is an error") {
    CHECK_THROWS_AS(corpus::count_tokens("x", {"bpe-proprietary", 10}), PreconditionError);
    CHECK_FALSE(corpus::has_tokenizer("bpe-proprietary"));
  }

  TEST_CASE("custom tokenizers can be registered") {
    corpus::register_tokenizer("bytes-test", [](std::string_view s) { return s.size(); });
    CHECK(corpus::has_tokenizer("bytes-test"));
    CHECK(corpus::count_tokens("abcd", {"bytes-test", 1}) == 4);
    const auto names = corpus::tokenizer_names();
    CHECK(std::find(names.begin(), names.end(), "unicode-word") != names.end());
  }

  TEST_CASE("invalid UTF-8 decodes to replacement characters") {
    std::string bad = "ab\xff" "cd";
    std::size_t pos = 2;
    CHECK(corpus::next_code_point(bad, pos) == 0xFFFD);
    CHECK(pos == 3);
  }

  TEST_CASE("counting is deterministic") {
    const std::string s = "Ἡ δὲ Καλλιρρόη ... ἐφοβεῖτο; καὶ πάλιν.";
    CHECK(corpus::count_tokens(s, {}) == corpus::count_tokens(s, {}));
  }
}
