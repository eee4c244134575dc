#include "motiflab/finetune.hpp"

namespace motiflab::gateway {

std::string numbered_list(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += '\n';
    out += std::to_string(i + 1) + ". " + items[i];
  }
  return out;
}

FinetuneSpec emit_finetune_dataset(std::span<const Annotation> annotations, const FinetuneSpec& spec,
                                   const std::filesystem::path& out_path,
                                   const RequestBuilder& build_request) {
  if (annotations.empty()) throw PreconditionError("fine-tune dataset: no annotations");
  if (spec.batches < 1 || spec.batch_size < 1) {
    throw PreconditionError("fine-tune dataset: batches and batch_size must be >= 1");
  }

  std::vector<Json> records;
  records.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    std::vector<std::string> motifs;
    for (const auto& m : a.gold_motifs) {
      if (auto t = trim(m); !t.empty()) motifs.push_back(std::move(t));
    }
    if (motifs.empty()) {
      throw PreconditionError("fine-tune dataset: annotation " + std::to_string(i) + " (" +
                              a.context.chunk.novel_id + "#" +
                              std::to_string(a.context.chunk.index) + ") has no gold motifs");
    }
    const ChatRequest req = build_request(a.context);
    records.push_back(Json{
        {"messages", Json::array({Json{{"role", "system"}, {"content", req.system_prompt}},
                                  Json{{"role", "user"}, {"content", req.user_content}},
                                  Json{{"role", "assistant"}, {"content", numbered_list(motifs)}}})}});
  }

  const std::string body = to_jsonl(records);
  write_file_atomic(out_path, body);

  FinetuneSpec effective = spec;
  effective.n_examples = records.size();
  const Json manifest{{"base_model", effective.base_model},
                      {"n_examples", effective.n_examples},
                      {"batches", effective.batches},
                      {"batch_size", effective.batch_size},
                      {"lr_multiplier", effective.lr_multiplier},
                      {"training_file", out_path.filename().string()},
                      {"training_file_sha256", sha256_hex(body)}};
  auto sidecar = out_path;
  sidecar += ".manifest.json";
  write_file_atomic(sidecar, manifest.dump(2) + "\n");
  return effective;
}

}  // namespace motiflab::gateway
