// motiflab command-line driver.
//
// Exit codes: 0 success, 1 stage error, 2 configuration or usage error.

#include <iostream>
#include <map>
#include <optional>
#include <tuple>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "motiflab/analytics.hpp"
#include "motiflab/finetune.hpp"
#include "motiflab/pipeline.hpp"

namespace {

using namespace motiflab;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<std::size_t> k;
  std::optional<std::size_t> figure_k;
  std::optional<std::size_t> parallelism;
  std::string output_dir;
  std::string cache_dir;
  bool offline = false;
};

pipeline::PipelineConfig resolve_config(const Overrides& o) {
  if (o.config.empty()) throw ConfigError("--config is required for pipeline stages");
  auto cfg = pipeline::load_config(o.config);
  if (o.seed) cfg.seed = cfg.reducer.seed = *o.seed;
  if (o.threshold) cfg.analytics.network_threshold = *o.threshold;
  if (o.k) cfg.analytics.uniqueness_k = *o.k;
  if (o.figure_k) cfg.analytics.figure_k = *o.figure_k;
  if (o.parallelism) cfg.parallelism = *o.parallelism;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  if (o.offline) cfg.offline = true;
  cfg.validate();
  return cfg;
}

void print_summary(const pipeline::StageSummary& s) {
  for (const auto& line : s.lines) std::cout << pipeline::to_string(s.stage) << ": " << line << "\n";
}

int run_stage(const Overrides& o, std::optional<pipeline::Stage> stage) {
  const auto cfg = resolve_config(o);
  omp_set_num_threads(static_cast<int>(cfg.parallelism));
  pipeline::Pipeline p(cfg);
  if (stage) {
    print_summary(p.run(*stage));
  } else {
    for (auto s : pipeline::kAllStages) print_summary(p.run(s));
  }
  return 0;
}

int verify_fixture(const std::string& path, double threshold, const std::string& network_out) {
  const auto fixture = analytics::load_similarity_fixture(path);
  const auto report = analytics::verify_fixture(fixture);
  std::cout << fmt::format("novels: {}\npairs: {} (expected {})\nrange: [{:.2f}, {:.2f}]\n",
                           fixture.novels.size(), report.pair_count, report.expected_pairs,
                           report.min_similarity, report.max_similarity);
  for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";

  std::size_t listed = 0;
  for (const auto& p : fixture.pairs) listed += p.similarity >= threshold;
  const Json network = analytics::network_export(report.sim, threshold);
  std::cout << fmt::format("network edges at threshold {:.2f}: {} (pairs listed at or above: {})\n",
                           threshold, network.at("links").size(), listed);
  if (!network_out.empty()) write_file_atomic(network_out, network.dump(2) + "\n");
  const bool ok = report.ok() && network.at("links").size() == listed;
  std::cout << (ok ? "fixture OK\n" : "fixture FAILED\n");
  return ok ? 0 : 1;
}

int finetune_dataset(const Overrides& o, const std::string& annotations_path, const std::string& out) {
  const auto cfg = resolve_config(o);
  pipeline::Pipeline p(cfg);
  const auto chunks_path = p.path_of(pipeline::artifacts::kChunks);
  if (!std::filesystem::exists(chunks_path)) {
    throw MissingArtifactError(chunks_path.string(), "ingest");
  }
  std::map<std::string, std::vector<corpus::Chunk>> by_novel;
  for (const auto& j : read_jsonl(chunks_path)) {
    auto c = corpus::chunk_from_json(j);
    by_novel[c.novel_id].push_back(std::move(c));
  }

  std::vector<gateway::Annotation> annotations;
  for (const auto& j : read_jsonl(annotations_path)) {
    std::string novel;
    std::size_t index = 0;
    std::vector<std::string> motifs;
    try {
      novel = j.at("novel_id").get<std::string>();
      index = j.at("chunk_index").get<std::size_t>();
      motifs = j.at("motifs").get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
      throw FormatError(annotations_path + ": " + e.what());
    }
    const auto it = by_novel.find(novel);
    if (it == by_novel.end() || index >= it->second.size()) {
      throw FormatError(fmt::format("{}: no chunk {}#{}", annotations_path, novel, index));
    }
    annotations.push_back({corpus::context_for(it->second, index), std::move(motifs)});
  }

  const extraction::ExtractionPrompt prompt;
  const auto settings = cfg.extraction;
  const gateway::FinetuneSpec spec;
  const auto effective = gateway::emit_finetune_dataset(
      annotations, spec, out, [&](const corpus::ChunkContext& cc) {
        return extraction::build_extraction_request(cc, prompt, settings);
      });
  std::cout << fmt::format("{} training examples written to {}\n", effective.n_examples, out);
  if (effective.n_examples != spec.n_examples) {
    std::cout << fmt::format("note: the reference fine-tune used {} examples\n", spec.n_examples);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motif extraction, clustering and corpus analytics pipeline"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("-c,--config", o.config, "Pipeline config (JSON)");
  app.add_option("--seed", o.seed, "Override the run seed");
  app.add_option("--threshold", o.threshold, "Network edge threshold in [0, 1]");
  app.add_option("--k", o.k, "Motifs per novel in the uniqueness report");
  app.add_option("--figure-k", o.figure_k, "Motifs per figure data file");
  app.add_option("--parallelism", o.parallelism, "Worker threads for requests and kernels");
  app.add_option("--output-dir", o.output_dir, "Override the output directory");
  app.add_option("--cache-dir", o.cache_dir, "Override the response cache directory");
  app.add_flag("--offline", o.offline, "Never contact remote backends (cache and mock only)");

  std::optional<pipeline::Stage> chosen;
  bool all = false;
  for (auto s : pipeline::kAllStages) {
    auto* sub = app.add_subcommand(std::string(pipeline::to_string(s)),
                                   fmt::format("Run the {} stage", pipeline::to_string(s)));
    sub->fallthrough();
    sub->callback([&chosen, s] { chosen = s; });
  }
  app.add_subcommand("run-all", "Run every stage in order")->fallthrough()->callback([&] { all = true; });

  std::string fixture_path, network_out;
  double fixture_threshold = 0.70;
  bool verify = false;
  auto* vf = app.add_subcommand("verify-fixture", "Check a published pair-similarity list");
  vf->add_option("file", fixture_path, "Fixture file")->required();
  vf->add_option("--network-out", network_out, "Write the node-link network here");
  vf->add_option("--edge-threshold", fixture_threshold, "Edge threshold (default 0.70)");
  vf->fallthrough();
  vf->callback([&] { verify = true; });

  std::string annotations, finetune_out;
  bool finetune = false;
  auto* ft = app.add_subcommand("finetune-dataset", "Emit a chat-format fine-tuning file");
  ft->add_option("--annotations", annotations, "JSONL of {novel_id, chunk_index, motifs}")->required();
  ft->add_option("--out", finetune_out, "Training file to write")->required();
  ft->fallthrough();
  ft->callback([&] { finetune = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (verify) return verify_fixture(fixture_path, o.threshold.value_or(fixture_threshold), network_out);
    if (finetune) return finetune_dataset(o, annotations, finetune_out);
    if (all) return run_stage(o, std::nullopt);
    return run_stage(o, chosen);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
