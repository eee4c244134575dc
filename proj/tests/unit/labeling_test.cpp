#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "motiflab/backends.hpp"
#include "motiflab/labeling.hpp"
#include "oracles.hpp"

using namespace motiflab;
using namespace motiflab::labeling;

namespace {

std::shared_ptr<gateway::MockBackend> replying(std::string reply) {
  gateway::MockOptions mo;
  mo.responders[std::string(kLabelSystemPrompt)] =
      [reply](const gateway::ChatRequest&) -> std::optional<std::string> { return reply; };
  return std::make_shared<gateway::MockBackend>(mo);
}

struct DownBackend final : gateway::Backend {
  std::string name() const override { return "down"; }
  bool is_remote() const override { return false; }
  std::string complete(const gateway::ChatRequest&) override {
    throw gateway::BackendError("connection refused", 0, true);
  }
  std::vector<std::vector<double>> embed(const std::string&, std::span<const std::string>) override {
    return {};
  }
};

gateway::GatewayOptions no_wait() {
  gateway::GatewayOptions o;
  o.retry.base_backoff = std::chrono::milliseconds(0);
  return o;
}

clustering::MotifCluster cluster_of(std::vector<std::size_t> members) {
  clustering::MotifCluster c;
  c.members = std::move(members);
  c.occurrence_count = c.members.size();
  return c;
}

}  // namespace

TEST_SUITE("labeling") {
  TEST_CASE("spec validation and checksum") {
    LabelRequestSpec spec;
    CHECK(spec.k_representatives == 20);
    CHECK(spec.max_label_words == 30);
    CHECK_NOTHROW(spec.validate());
    spec.prompt_template = "no slot";
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.prompt_template = "{members} and {members}";
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.prompt_template = "Motifs:\n{members}";
    CHECK_NOTHROW(spec.validate());
    spec.k_representatives = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    CHECK(LabelRequestSpec{}.checksum() != spec.checksum());
    CHECK(LabelRequestSpec{}.checksum() == LabelRequestSpec{}.checksum());
  }

  TEST_CASE("request carries a numbered member list") {
    LabelRequestSpec spec;
    spec.prompt_template = "Summarize:\n{members}\nThanks";
    const std::vector<std::string> members{"A duel.", "A fight."};
    const auto req = build_label_request(members, spec);
    CHECK(req.system_prompt == kLabelSystemPrompt);
    CHECK(req.user_content == "Summarize:\n1. A duel.\n2. A fight.\nThanks");
  }

  TEST_CASE("representatives") {
    SUBCASE("k is capped at the cluster size") {
      const Matrix e(3, 2, std::vector<double>{1, 0, 0, 1, 1, 1});
      CHECK(representatives(cluster_of({0, 1, 2}), e, 20).size() == 3);
    }
    SUBCASE("the member at the centroid comes first") {
      const Matrix e(3, 2, std::vector<double>{1, 0, 0.7071, 0.7071, 0, 1});
      CHECK(representatives(cluster_of({0, 1, 2}), e, 1) == std::vector<std::size_t>{1});
    }
    SUBCASE("matches an exhaustive scan") {
      std::mt19937_64 rng(12);
      std::uniform_real_distribution<double> u(-1, 1);
      Matrix e(80, 6);
      for (double& v : e.data()) v = u(rng);
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < 50; ++i) members.push_back(i * 3 / 2);
      REQUIRE(members.size() == 50);
      std::vector<double> centroid(6, 0.0);
      for (auto m : members) for (std::size_t k = 0; k < 6; ++k) centroid[k] += e(m, k) / 50.0;
      std::vector<std::pair<double, std::size_t>> all;
      for (auto m : members) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t k = 0; k < 6; ++k) {
          dot += e(m, k) * centroid[k];
          na += e(m, k) * e(m, k);
          nb += centroid[k] * centroid[k];
        }
        all.emplace_back(1 - dot / std::sqrt(na * nb), m);
      }
      std::sort(all.begin(), all.end());
      const auto got = representatives(cluster_of(members), e, 5);
      REQUIRE(got.size() == 5);
      for (std::size_t i = 0; i < 5; ++i) CHECK(got[i] == all[i].second);
    }
    SUBCASE("ties go to the lower record index") {
      const Matrix e(4, 2, std::vector<double>{1, 0, 0, 1, 1, 0, 0, 1});
      CHECK(representatives(cluster_of({0, 1, 2, 3}), e, 4) == std::vector<std::size_t>{0, 1, 2, 3});
    }
  }

  TEST_CASE("label normalisation") {
    CHECK(normalize_label("Love as an all-consuming flame.", 30).text == "Love as an all-consuming flame.");
    CHECK_FALSE(normalize_label("Love as an all-consuming flame.", 30).truncated);
    CHECK(normalize_label("\"Quoted label.\"", 30).text == "Quoted label.");

    std::string forty;
    for (int i = 0; i < 40; ++i) forty += (i ? " " : "") + std::string("word");
    const auto cut = normalize_label(forty + ".", 30);
    CHECK(cut.truncated);
    CHECK(std::count(cut.text.begin(), cut.text.end(), ' ') == 29);

    const auto two = normalize_label("First sentence here. Then a second one that rambles on.", 30);
    CHECK(two.text == "First sentence here.");
    CHECK(two.truncated);
    CHECK(normalize_label("Line one\nline two", 30).text == "Line one");
    CHECK(normalize_label("   ", 30).text.empty());
  }

  TEST_CASE("summaries and fallbacks") {
    const std::vector<std::string> members{"Fire of love.", "Love burns."};
    LabelRequestSpec spec;
    SUBCASE("model reply is used") {
      gateway::ModelGateway gw(replying("Love as an all-consuming flame."), no_wait());
      const auto l = summarize_cluster(members, "Fire of love.", gw, spec);
      CHECK(l.text == "Love as an all-consuming flame.");
      CHECK_FALSE(l.fallback);
    }
    SUBCASE("backend down falls back to the medoid") {
      gateway::ModelGateway gw(std::make_shared<DownBackend>(), no_wait());
      const auto l = summarize_cluster(members, "Fire of love.", gw, spec);
      CHECK(l.text == "Fire of love.");
      CHECK(l.fallback);
    }
    SUBCASE("empty reply falls back") {
      gateway::ModelGateway gw(replying("  "), no_wait());
      CHECK(summarize_cluster(members, "Fire of love.", gw, spec).fallback);
    }
  }

  TEST_CASE("label_all assigns one label per cluster, deterministically") {
    std::vector<extraction::MotifRecord> records;
    for (int i = 0; i < 12; ++i) records.push_back({"n", static_cast<std::size_t>(i), 0, "Sentence " + std::to_string(i) + "."});
    Matrix e(12, 2);
    for (std::size_t i = 0; i < 12; ++i) {
      e(i, 0) = i < 6 ? 1.0 : 0.1 * i;
      e(i, 1) = i < 6 ? 0.1 * i : 1.0;
    }
    const std::vector<int> labels{0, 0, 0, 0, 0, -1, 1, 1, 1, 1, 1, -1};
    const auto base = clustering::build_catalog(records, labels, e);

    gateway::MockOptions mo;
    mo.responders[std::string(kLabelSystemPrompt)] = [](const gateway::ChatRequest& r) -> std::optional<std::string> {
      return gateway::first_item_reply(r);
    };
    oracle::TempDir tmp;
    auto opts = no_wait();
    opts.cache_dir = tmp.path;
    auto run = [&] {
      auto cat = base;
      gateway::ModelGateway gw(std::make_shared<gateway::MockBackend>(mo), opts);
      label_all(cat, records, e, gw, LabelRequestSpec{});
      return std::make_pair(cat, gw.stats());
    };
    const auto [first, cold] = run();
    const auto [second, warm] = run();
    for (std::size_t c = 0; c < first.clusters.size(); ++c) {
      REQUIRE(first.clusters[c].label.has_value());
      CHECK_FALSE(first.clusters[c].label->empty());
      CHECK(first.clusters[c].label == second.clusters[c].label);
    }
    CHECK(cold.backend_calls() == 2);
    CHECK(warm.backend_calls() == 0);
    CHECK(first.label_prompt_checksum == LabelRequestSpec{}.checksum());
  }
}
