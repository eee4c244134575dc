#include <doctest.h>

#include "motiflab/pipeline.hpp"
#include "motiflab/report.hpp"
#include "oracles.hpp"

using namespace motiflab;
using namespace motiflab::pipeline;

namespace {

const std::filesystem::path kMock = std::filesystem::path(MOTIFLAB_SOURCE_DIR) / "data/mock_corpus";

PipelineConfig mock_config(const std::filesystem::path& root) {
  auto cfg = load_config(kMock / "config.json");
  cfg.output_dir = root / "out";
  cfg.cache_dir = root / "cache";
  cfg.offline = true;
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config is strict") {
    const Json base = Json::parse(R"({"corpus_manifest": "m.json", "output_dir": "out"})");
    const auto cfg = parse_config(base, "/base");
    CHECK(cfg.corpus_manifest == std::filesystem::path("/base/m.json"));
    CHECK(cfg.output_dir == std::filesystem::path("/base/out"));
    CHECK(cfg.cache_dir.empty());
    CHECK(cfg.reducer.seed == cfg.seed);

    auto unknown = base;
    unknown["tokeniser"] = Json::object();
    CHECK_THROWS_WITH_AS(parse_config(unknown, "."), doctest::Contains("unknown config key tokeniser"),
                         ConfigError);

    auto nested = base;
    nested["hdbscan"] = Json{{"min_cluster_size", 5}, {"min_size", 3}};
    CHECK_THROWS_AS(parse_config(nested, "."), ConfigError);

    auto key = base;
    key["backends"] = Json{{"extraction", {{"kind", "openai"}, {"api_key", "sk-secret"}}}};
    try {
      parse_config(key, ".");
      FAIL("api_key accepted");
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      CHECK(what.find("api_key_env") != std::string::npos);
      CHECK(what.find("sk-secret") == std::string::npos);
    }

    auto wrong = base;
    wrong["seed"] = "seven";
    CHECK_THROWS_AS(parse_config(wrong, "."), ConfigError);

    auto periods = base;
    periods["analytics"] = Json{{"periods", {"Imperial", "Imperial"}}};
    CHECK_THROWS_AS(parse_config(periods, ".").validate(), ConfigError);
    periods["analytics"] = Json{{"periods", {"Victorian"}}};
    CHECK_THROWS_AS(parse_config(periods, "."), ConfigError);

    auto threshold = base;
    threshold["analytics"] = Json{{"network_threshold", 1.5}};
    CHECK_THROWS_AS(parse_config(threshold, ".").validate(), ConfigError);
  }

  TEST_CASE("stage names") {
    for (auto s : kAllStages) CHECK(parse_stage(to_string(s)) == s);
    CHECK_FALSE(parse_stage("bogus").has_value());
  }

  TEST_CASE("missing prerequisite names the producing stage") {
    oracle::TempDir tmp;
    Pipeline p(mock_config(tmp.path));
    try {
      p.run(Stage::analyze);
      FAIL("analyze ran without inputs");
    } catch (const MissingArtifactError& e) {
      CHECK(e.producing_stage() == "ingest");
    }
    p.run(Stage::ingest);
    p.run(Stage::extract);
    p.run(Stage::embed);
    try {
      p.run(Stage::analyze);
      FAIL("analyze ran without a catalog");
    } catch (const MissingArtifactError& e) {
      CHECK(e.producing_stage() == "cluster");
      CHECK(std::string(e.what()).find("stages/catalog.json") != std::string::npos);
    }
  }

  TEST_CASE("full run, warm cache and determinism") {
    oracle::TempDir a, b;
    auto cfg_a = mock_config(a.path);
    Pipeline pa(cfg_a);
    const auto summaries = pa.run_all();
    REQUIRE(summaries.size() == std::size(kAllStages));
    CHECK(summaries[1].stats.chat_backend_calls > 0);
    for (auto name : {"appendix_a.txt", "appendix_b.txt", "appendix_c.txt", "appendix_d.txt",
                      "network.json", "manifest.json", "motif_matrix.csv"}) {
      CHECK_MESSAGE(std::filesystem::exists(cfg_a.output_dir / name), name);
    }
    const auto manifest = report::RunManifest::load(cfg_a.output_dir / "manifest.json");
    for (auto s : kAllStages) CHECK(manifest.has_stage(std::string(to_string(s))));
    const auto before = oracle::snapshot(cfg_a.output_dir);
    const auto digest = manifest.digest();
    CHECK(before.at("appendix_c.txt").find("manifest: " + digest) != std::string::npos);

    // A rerun answers every request from the cache.
    const auto again = pa.run(Stage::extract);
    CHECK(again.stats.chat_backend_calls == 0);
    CHECK(again.stats.cache_hits > 0);
    CHECK(pa.run(Stage::embed).stats.embed_backend_calls == 0);
    CHECK(pa.run(Stage::label).stats.chat_backend_calls == 0);

    auto cfg_b = mock_config(b.path);
    cfg_b.parallelism = 1;
    Pipeline(cfg_b).run_all();
    CHECK(oracle::snapshot(cfg_b.output_dir) == before);

    auto cfg_c = mock_config(b.path);
    cfg_c.output_dir = b.path / "seeded";
    cfg_c.seed = cfg_c.reducer.seed = cfg_a.seed + 1;
    Pipeline(cfg_c).run_all();
    CHECK(report::RunManifest::load(cfg_c.output_dir / "manifest.json").digest() != digest);
  }

  TEST_CASE("offline without a cache refuses remote backends") {
    oracle::TempDir tmp;
    auto cfg = mock_config(tmp.path);
    cfg.extraction_backend.kind = "openai";
    cfg.cache_dir.clear();
    Pipeline p(cfg);
    p.run(Stage::ingest);
    CHECK_THROWS(p.run(Stage::extract));
  }
}
