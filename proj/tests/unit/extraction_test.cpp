#include <atomic>
#include <set>

#include <doctest.h>

#include "motiflab/backends.hpp"
#include "motiflab/extraction.hpp"
#include "oracles.hpp"

using namespace motiflab;
using extraction::parse_motif_list;

namespace {

std::vector<corpus::Chunk> make_chunks(const std::string& novel, std::size_t n) {
  std::vector<corpus::Chunk> out;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::Chunk c;
    c.novel_id = novel;
    c.index = i;
    c.text = novel + " chunk " + std::to_string(i) + " text.";
    out.push_back(c);
  }
  return out;
}

// Replies with three motifs, except for chunks whose text is in `fail`.
class FaultyBackend final : public gateway::Backend {
 public:
  explicit FaultyBackend(std::set<std::string> fail) : fail_(std::move(fail)) {}
  std::string name() const override { return "faulty"; }
  bool is_remote() const override { return false; }
  std::string complete(const gateway::ChatRequest& req) override {
    ++calls;
    for (const auto& f : fail_) {
      if (req.user_content.ends_with(f)) throw gateway::BackendError("injected", 500, true);
    }
    return gateway::synthetic_motif_reply(req);
  }
  std::vector<std::vector<double>> embed(const std::string&, std::span<const std::string>) override {
    return {};
  }
  std::atomic<int> calls{0};

 private:
  std::set<std::string> fail_;
};

gateway::GatewayOptions opts(const std::filesystem::path& cache = {}) {
  gateway::GatewayOptions o;
  o.cache_dir = cache;
  o.retry.base_backoff = std::chrono::milliseconds(0);
  return o;
}

}  // namespace

TEST_SUITE("extraction") {
  TEST_CASE("the system prompt is pinned") {
    const extraction::ExtractionPrompt prompt;
    CHECK(prompt.text.starts_with("Identify potential literary motifs (recurring recognizable"));
    CHECK(prompt.text.ends_with("beyond the list of motifs."));
    CHECK(prompt.checksum() == sha256_hex(extraction::kExtractionPromptText));
    CHECK(prompt.checksum().size() == 64);
  }

  TEST_CASE("request layout") {
    const auto chunks = make_chunks("n", 6);
    const extraction::ExtractionPrompt prompt;
    const auto first = extraction::build_extraction_request(corpus::context_for(chunks, 0), prompt);
    CHECK(first.system_prompt == prompt.text);
    CHECK(first.user_content == "CURRENT TEXT:\nn chunk 0 text.");

    const auto fifth = extraction::build_extraction_request(corpus::context_for(chunks, 5), prompt);
    CHECK(fifth.user_content ==
          "PRECEDING CONTEXT:\nn chunk 3 text.\nn chunk 4 text.\n\nCURRENT TEXT:\nn chunk 5 text.");
    CHECK(sha256_hex(fifth.system_prompt) == prompt.checksum());
    CHECK(fifth.temperature == 0.0);

    corpus::ChunkContext empty{chunks[0], ""};
    empty.chunk.text = "  ";
    CHECK_THROWS_AS(extraction::build_extraction_request(empty, prompt), PreconditionError);
  }

  TEST_CASE("run-on samples in the published format") {
    CHECK(parse_motif_list("Motifs: Arrival in a new city. Selling of a maiden. Beauty captivates a "
                           "ruler. Maidens guarded in a tower.")
              .sentences == std::vector<std::string>{"Arrival in a new city.", "Selling of a maiden.",
                                                     "Beauty captivates a ruler.",
                                                     "Maidens guarded in a tower."});
    CHECK(parse_motif_list("Motifs: Preparation for departure. Recruitment of warriors. Distribution "
                           "of spoils. Recognition of contributions.")
              .sentences.size() == 4);
    const auto third = parse_motif_list(
        "Motifs: A garden full of beauty and pleasure. Contest between flowers for beauty. Plants "
        "form a chorus in the garden");
    REQUIRE(third.sentences.size() == 3);
    CHECK(third.sentences[2] == "Plants form a chorus in the garden");
  }

  TEST_CASE("numbered and bulleted lists") {
    const auto numbered = parse_motif_list(
        "1. Preparation for departure.\n2. Recruitment of warriors.\n3. Distribution of spoils.\n4. "
        "Recognition of contributions.");
    CHECK(numbered.sentences.size() == 4);
    CHECK(numbered.sentences[0] == "Preparation for departure.");

    const auto mixed = parse_motif_list(
        "Here are the motifs:\n\n1) **A storm at sea.**\n- A letter is intercepted.\n• Love at first "
        "sight.\n10. A ring as a token of recognition\n");
    CHECK(mixed.sentences == std::vector<std::string>{"A storm at sea.", "A letter is intercepted.",
                                                      "Love at first sight.",
                                                      "A ring as a token of recognition"});
    CHECK(mixed.warnings.size() == 1);

    // A number that starts a sentence is not a marker.
    CHECK(parse_motif_list("1453 marks the fall of a city.").sentences ==
          std::vector<std::string>{"1453 marks the fall of a city."});
    CHECK(parse_motif_list("-5 degrees of cold.").sentences.size() == 1);
  }

  TEST_CASE("newline-separated sentences") {
    CHECK(parse_motif_list("A duel\nA wedding feast\r\nA shipwreck").sentences.size() == 3);
  }

  TEST_CASE("empties, punctuation and duplicates") {
    CHECK(parse_motif_list("").sentences.empty());
    CHECK(parse_motif_list("").warnings.empty());
    const auto junk = parse_motif_list("...\n- \n***");
    CHECK(junk.sentences.empty());
    CHECK(junk.warnings.size() == 1);
    CHECK(parse_motif_list("1. A duel.\n2. A duel.\n3. A feast.").sentences ==
          std::vector<std::string>{"A duel.", "A feast."});
  }

  TEST_CASE("parsing is idempotent") {
    const std::vector<std::string> inputs{
        "Motifs: A. B c. D e f.", "1. One.\n2. Two.\n3. One.", "- x y\n- z.", "Ἔρως. Θάνατος. Τύχη"};
    for (const auto& in : inputs) {
      const auto once = parse_motif_list(in).sentences;
      std::string joined;
      for (const auto& s : once) joined += s + "\n";
      CHECK(parse_motif_list(joined).sentences == once);
    }
  }

  TEST_CASE("record json round trip") {
    const extraction::MotifRecord r{"n", 3, 1, "A duel."};
    CHECK(extraction::motif_from_json(extraction::to_json(r)) == r);
    CHECK_THROWS_AS(extraction::motif_from_json(Json{{"novel_id", "n"}}), FormatError);
  }

  TEST_CASE("ten chunks with three motifs each") {
    oracle::TempDir tmp;
    auto chunks = make_chunks("b", 4);
    const auto a = make_chunks("a", 6);
    chunks.insert(chunks.end(), a.begin(), a.end());
    auto backend = std::make_shared<FaultyBackend>(std::set<std::string>{});
    gateway::ModelGateway gw(backend, opts(tmp.path));
    const extraction::ExtractionPrompt prompt;
    const auto result = extraction::extract_corpus(chunks, gw, prompt);
    CHECK(result.records.size() == 30);
    CHECK(result.chunks_total == 10);
    CHECK(result.chunks_failed == 0);
    CHECK(std::is_sorted(result.records.begin(), result.records.end()));
    CHECK(result.records.front().novel_id == "a");
    for (const auto& r : result.records) {
      CHECK(r.chunk_index < (r.novel_id == "a" ? 6u : 4u));
      CHECK_FALSE(trim(r.sentence).empty());
    }

    // Warm cache: same records, no backend traffic.
    gateway::ModelGateway warm(backend, opts(tmp.path));
    const int before = backend->calls;
    const auto again = extraction::extract_corpus(chunks, warm, prompt);
    CHECK(again.records == result.records);
    CHECK(backend->calls == before);
    CHECK(warm.stats().backend_calls() == 0);
  }

  TEST_CASE("failure threshold") {
    const auto chunks = make_chunks("n", 200);
    const extraction::ExtractionPrompt prompt;

    SUBCASE("1 of 200 failing stays under 1%") {
      gateway::ModelGateway gw(std::make_shared<FaultyBackend>(std::set<std::string>{"n chunk 17 text."}),
                               opts());
      const auto r = extraction::extract_corpus(chunks, gw, prompt);
      CHECK(r.chunks_failed == 1);
      std::set<std::size_t> covered;
      for (const auto& rec : r.records) covered.insert(rec.chunk_index);
      CHECK(covered.size() == 199);
      CHECK_FALSE(covered.count(17));
      CHECK(r.records.size() == 199 * 3);
      REQUIRE(r.warnings.size() == 1);
      CHECK(r.warnings[0].chunk_index == 17);
    }
    SUBCASE("3 of 200 failing aborts with the partial result") {
      gateway::ModelGateway gw(std::make_shared<FaultyBackend>(std::set<std::string>{
                                   "n chunk 1 text.", "n chunk 2 text.", "n chunk 3 text."}),
                               opts());
      try {
        extraction::extract_corpus(chunks, gw, prompt);
        FAIL("expected ExtractionFailed");
      } catch (const extraction::ExtractionFailed& e) {
        CHECK(e.partial().chunks_failed == 3);
        CHECK(e.partial().records.size() == 197 * 3);
      }
    }
  }

  TEST_CASE("chunks must be grouped per novel") {
    auto chunks = make_chunks("n", 3);
    std::swap(chunks[0], chunks[2]);
    gateway::ModelGateway gw(std::make_shared<FaultyBackend>(std::set<std::string>{}), opts());
    CHECK_THROWS_AS(extraction::extract_corpus(chunks, gw, extraction::ExtractionPrompt{}),
                    PreconditionError);
  }
}
