#include <fstream>
#include <regex>

#include <doctest.h>

#include "motiflab/common.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kSource = MOTIFLAB_SOURCE_DIR;

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

oracle::CommandResult cli(const std::string& args) {
  return oracle::run(quote(MOTIFLAB_CLI) + " " + args);
}

std::string mock_args(const oracle::TempDir& tmp) {
  return "--config " + quote(kSource / "data/mock_corpus/config.json") + " --offline --output-dir " +
         quote(tmp.path / "out") + " --cache-dir " + quote(tmp.path / "cache");
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(cli("").exit_code == 2);
    CHECK(cli("no-such-command").exit_code == 2);
    CHECK(cli("ingest").exit_code == 2);  // no --config
    CHECK(cli("--help").exit_code == 0);

    oracle::TempDir tmp;
    auto cfg = motiflab::Json::parse(motiflab::read_file(kSource / "data/mock_corpus/config.json"));
    cfg["corpus_manifest"] = (kSource / "data/mock_corpus/manifest.json").string();
    cfg["colour"] = "blue";
    motiflab::write_file_atomic(tmp.path / "bad.json", cfg.dump());
    const auto r = cli("--config " + quote(tmp.path / "bad.json") + " ingest");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("unknown config key colour") != std::string::npos);
  }

  TEST_CASE("verify-fixture on the published list") {
    oracle::TempDir tmp;
    const auto r = cli("verify-fixture " + quote(kSource / "data/appendix_c.txt") + " --network-out " +
                       quote(tmp.path / "net.json"));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("fixture OK") != std::string::npos);
    CHECK(r.output.find("network edges at threshold 0.70: 9 (pairs listed at or above: 9)") !=
          std::string::npos);
    const auto net = motiflab::Json::parse(motiflab::read_file(tmp.path / "net.json"));
    CHECK(net.at("links").size() == 9);
  }

  TEST_CASE("verify-fixture reports defects") {
    oracle::TempDir tmp;
    auto text = motiflab::read_file(kSource / "data/appendix_c.txt");
    const std::string first = "Aithiopica and Leucippe and Clitophon: similarity 0.81";
    const auto at = text.find(first);
    REQUIRE(at != std::string::npos);
    text.replace(at, first.size(), "Aithiopica and Leucippe and Clitophon: similarity 0.79");
    motiflab::write_file_atomic(tmp.path / "bad.txt", text);
    const auto r = cli("verify-fixture " + quote(tmp.path / "bad.txt"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("ordering violation") != std::string::npos);
    CHECK(cli("verify-fixture " + quote(tmp.path / "absent.txt")).exit_code == 1);
  }

  TEST_CASE("stage errors exit 1") {
    oracle::TempDir tmp;
    const auto r = cli(mock_args(tmp) + " analyze");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("run the 'ingest' stage first") != std::string::npos);
  }

  TEST_CASE("run-all then a single stage") {
    oracle::TempDir tmp;
    const auto r = cli(mock_args(tmp) + " --parallelism 2 run-all");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);
    CHECK(std::regex_search(r.output, std::regex(R"(report: \d+ report files written, manifest digest [0-9a-f]{64})")));
    CHECK(fs::exists(tmp.path / "out/appendix_b.txt"));
    const auto again = cli(mock_args(tmp) + " extract");
    CHECK(again.exit_code == 0);
    CHECK(again.output.find("extract: 0 backend calls") != std::string::npos);
  }
}
