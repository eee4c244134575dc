#include <algorithm>
#include <numeric>
#include <sstream>

#include "motiflab/finetune.hpp"
#include "motiflab/labeling.hpp"

namespace motiflab::labeling {

void LabelRequestSpec::validate() const {
  if (k_representatives < 1) throw ConfigError("labeling.k_representatives must be >= 1");
  if (max_label_words < 1) throw ConfigError("labeling.max_label_words must be >= 1");
  const auto first = prompt_template.find(kMembersSlot);
  if (first == std::string::npos ||
      prompt_template.find(kMembersSlot, first + kMembersSlot.size()) != std::string::npos) {
    throw ConfigError("labeling.prompt_template must contain exactly one " +
                      std::string(kMembersSlot) + " slot");
  }
  if (trim(system_prompt).empty()) throw ConfigError("labeling system prompt is empty");
}

std::string LabelRequestSpec::checksum() const {
  return sha256_hex(system_prompt + '\n' + prompt_template);
}

std::vector<std::size_t> representatives(const clustering::MotifCluster& cluster,
                                         const Matrix& embeddings, std::size_t k) {
  if (cluster.members.empty()) throw PreconditionError("representatives: empty cluster");
  const std::size_t d = embeddings.cols();
  std::vector<double> centroid(d, 0.0);
  for (std::size_t m : cluster.members) {
    const auto row = embeddings.row(m);
    for (std::size_t c = 0; c < d; ++c) centroid[c] += row[c];
  }
  for (double& v : centroid) v /= static_cast<double>(cluster.members.size());

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(cluster.members.size());
  for (std::size_t m : cluster.members) {
    scored.emplace_back(kernels::cosine_distance(embeddings.row(m), centroid), m);
  }
  k = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

gateway::ChatRequest build_label_request(std::span<const std::string> members,
                                         const LabelRequestSpec& spec) {
  std::string user = spec.prompt_template;
  user.replace(user.find(kMembersSlot), kMembersSlot.size(), gateway::numbered_list(members));
  return gateway::ChatRequest{spec.model, spec.system_prompt, std::move(user), spec.temperature,
                              spec.max_output_tokens};
}

Label normalize_label(std::string_view reply, std::size_t max_words) {
  Label out;
  std::string text = trim(reply);
  if (const auto nl = text.find('\n'); nl != std::string::npos) {
    out.truncated = !trim(std::string_view(text).substr(nl)).empty();
    text = trim(std::string_view(text).substr(0, nl));
  }
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    text = trim(std::string_view(text).substr(1, text.size() - 2));
  }
  const auto sentences = corpus::split_sentences(text);
  if (sentences.empty()) return out;
  if (sentences.size() > 1) out.truncated = true;
  text = sentences.front();

  std::istringstream words(text);
  std::vector<std::string> kept;
  for (std::string w; words >> w;) kept.push_back(w);
  if (kept.size() > max_words) {
    kept.resize(max_words);
    out.truncated = true;
    text.clear();
    for (std::size_t i = 0; i < kept.size(); ++i) text += (i ? " " : "") + kept[i];
  }
  out.text = std::move(text);
  return out;
}

Label summarize_cluster(std::span<const std::string> members, const std::string& fallback_sentence,
                        gateway::ModelGateway& gateway, const LabelRequestSpec& spec) {
  if (members.empty()) throw PreconditionError("summarize_cluster: no members");
  try {
    auto label = normalize_label(gateway.chat_complete(build_label_request(members, spec)),
                                 spec.max_label_words);
    if (!label.text.empty()) return label;
  } catch (const Error&) {
    // Absorbed: the fallback below is the contract for backend failure.
  }
  return Label{fallback_sentence, true, false};
}

void label_all(clustering::MotifCatalog& catalog,
               std::span<const extraction::MotifRecord> records, const Matrix& embeddings,
               gateway::ModelGateway& gateway, const LabelRequestSpec& spec) {
  spec.validate();
  std::vector<Label> labels(catalog.clusters.size());
  bounded_parallel_for(catalog.clusters.size(), gateway.parallelism(), [&](std::size_t c) {
    const auto& cluster = catalog.clusters[c];
    std::vector<std::string> members;
    for (std::size_t r : representatives(cluster, embeddings, spec.k_representatives)) {
      members.push_back(records[r].sentence);
    }
    labels[c] = summarize_cluster(members, cluster.medoid_sentence, gateway, spec);
  });
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto& cluster = catalog.clusters[c];
    cluster.label = std::move(labels[c].text);
    cluster.label_fallback = labels[c].fallback;
    cluster.label_truncated = labels[c].truncated;
  }
  catalog.label_prompt_checksum = spec.checksum();
}

}  // namespace motiflab::labeling
