#include <algorithm>
#include <mutex>
#include <regex>
#include <unordered_set>

#include "motiflab/extraction.hpp"

namespace motiflab::extraction {

Json to_json(const MotifRecord& r) {
  return Json{{"novel_id", r.novel_id},
              {"chunk_index", r.chunk_index},
              {"ordinal", r.ordinal},
              {"sentence", r.sentence}};
}

MotifRecord motif_from_json(const Json& j) {
  try {
    return MotifRecord{j.at("novel_id").get<std::string>(), j.at("chunk_index").get<std::size_t>(),
                       j.at("ordinal").get<std::size_t>(), j.at("sentence").get<std::string>()};
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed motif record: ") + e.what());
  }
}

gateway::ChatRequest build_extraction_request(const corpus::ChunkContext& cc,
                                              const ExtractionPrompt& prompt,
                                              const ExtractionSettings& settings) {
  if (trim(cc.chunk.text).empty()) {
    throw PreconditionError("extraction request: empty chunk text for " + cc.chunk.novel_id + "#" +
                            std::to_string(cc.chunk.index));
  }
  std::string user;
  if (!cc.context_text.empty()) {
    user += kContextHeader;
    user += '\n';
    user += cc.context_text;
    user += "\n\n";
  }
  user += kCurrentHeader;
  user += '\n';
  user += cc.chunk.text;
  return gateway::ChatRequest{settings.model, prompt.text, std::move(user), settings.temperature,
                              settings.max_output_tokens};
}

namespace {

bool has_word_character(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (corpus::classify(corpus::next_code_point(s, pos)) == corpus::CharClass::Word) return true;
  }
  return false;
}

std::string strip_wrapping(std::string s) {
  s = trim(s);
  // Markdown emphasis and quotes around the whole item.
  for (std::string_view w : {"**", "\"", "*"}) {
    if (s.size() >= 2 * w.size() && s.starts_with(w) && s.ends_with(w)) {
      s = trim(s.substr(w.size(), s.size() - 2 * w.size()));
    }
  }
  return s;
}

}  // namespace

ParseResult parse_motif_list(std::string_view completion) {
  static const std::regex marker(R"(^\s*(?:\d{1,3}[.)](?!\d)|(?:[-*+]|•|–|—)(?=\s))\s*)");
  static const std::regex label(R"(^\s*motifs?\s*:\s*)", std::regex::icase);

  ParseResult result;
  const std::string text = std::regex_replace(std::string(completion), label, "",
                                              std::regex_constants::format_first_only);

  struct Line {
    std::string body;
    bool listed;
  };
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string raw = text.substr(start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (!trim(raw).empty()) {
      std::smatch m;
      if (std::regex_search(raw, m, marker)) {
        lines.push_back({raw.substr(static_cast<std::size_t>(m.length(0))), true});
      } else {
        lines.push_back({raw, false});
      }
    }
    start = end + 1;
  }
  const bool any_listed = std::ranges::any_of(lines, &Line::listed);

  std::vector<std::string> items;
  for (const auto& line : lines) {
    if (line.listed) {
      items.push_back(strip_wrapping(line.body));
      continue;
    }
    const auto body = trim(line.body);
    if (any_listed && body.ends_with(':')) {
      result.warnings.push_back("dropped header line: " + body);
      continue;
    }
    for (auto& s : corpus::split_sentences(body)) items.push_back(strip_wrapping(std::move(s)));
  }

  std::unordered_set<std::string> seen;
  for (auto& item : items) {
    if (item.empty() || !has_word_character(item)) continue;
    if (seen.insert(item).second) result.sentences.push_back(std::move(item));
  }
  if (result.sentences.empty() && !trim(completion).empty()) {
    result.warnings.push_back("no motif sentences could be parsed from the completion");
  }
  return result;
}

ExtractionResult extract_corpus(std::span<const corpus::Chunk> chunks,
                                gateway::ModelGateway& gateway, const ExtractionPrompt& prompt,
                                const ExtractionSettings& settings) {
  // Group each novel's chunks so context_for sees contiguous, ordered spans.
  struct Task {
    std::size_t group_begin;
    std::size_t group_size;
    std::size_t offset;
  };
  std::vector<Task> tasks;
  tasks.reserve(chunks.size());
  for (std::size_t b = 0; b < chunks.size();) {
    std::size_t e = b;
    while (e < chunks.size() && chunks[e].novel_id == chunks[b].novel_id) {
      if (chunks[e].index != e - b) {
        throw PreconditionError("extract_corpus: chunks of " + chunks[b].novel_id +
                                " are not contiguous and ordered");
      }
      ++e;
    }
    for (std::size_t i = b; i < e; ++i) tasks.push_back({b, e - b, i - b});
    b = e;
  }

  std::vector<std::vector<MotifRecord>> per_chunk(tasks.size());
  std::vector<std::vector<ExtractionWarning>> per_chunk_warnings(tasks.size());
  std::vector<char> failed(tasks.size(), 0);

  bounded_parallel_for(tasks.size(), gateway.parallelism(), [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto group = chunks.subspan(task.group_begin, task.group_size);
    const auto cc = corpus::context_for(group, task.offset);
    const auto& chunk = cc.chunk;
    try {
      const auto completion = gateway.chat_complete(build_extraction_request(cc, prompt, settings));
      auto parsed = parse_motif_list(completion);
      for (std::size_t k = 0; k < parsed.sentences.size(); ++k) {
        per_chunk[t].push_back({chunk.novel_id, chunk.index, k, std::move(parsed.sentences[k])});
      }
      for (auto& w : parsed.warnings) {
        per_chunk_warnings[t].push_back({chunk.novel_id, chunk.index, std::move(w)});
      }
    } catch (const std::exception& e) {
      failed[t] = 1;
      per_chunk_warnings[t].push_back(
          {chunk.novel_id, chunk.index, std::string("extraction failed: ") + e.what()});
    }
  });

  ExtractionResult result;
  result.chunks_total = tasks.size();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    result.chunks_failed += failed[t];
    for (auto& r : per_chunk[t]) result.records.push_back(std::move(r));
    for (auto& w : per_chunk_warnings[t]) result.warnings.push_back(std::move(w));
  }
  std::ranges::sort(result.records, [](const MotifRecord& a, const MotifRecord& b) {
    return std::tie(a.novel_id, a.chunk_index, a.ordinal) <
           std::tie(b.novel_id, b.chunk_index, b.ordinal);
  });

  if (result.chunks_total > 0) {
    const double ratio =
        static_cast<double>(result.chunks_failed) / static_cast<double>(result.chunks_total);
    if (ratio > settings.failure_threshold) {
      const auto msg = std::to_string(result.chunks_failed) + " of " +
                       std::to_string(result.chunks_total) +
                       " chunks failed extraction, above the failure threshold of " +
                       std::to_string(settings.failure_threshold);
      throw ExtractionFailed(msg, std::move(result));
    }
  }
  return result;
}

}  // namespace motiflab::extraction
