#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "motiflab/corpus.hpp"
#include "motiflab/error.hpp"

namespace motiflab::corpus {

namespace fs = std::filesystem;

std::string_view to_string(Period p) {
  switch (p) {
    case Period::Imperial:
      return "Imperial";
    case Period::Komnenian:
      return "Komnenian";
    case Period::Palaiologan:
      return "Palaiologan";
  }
  return "?";
}

Period parse_period(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::ranges::transform(out, out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const auto key = lower(name);
  for (Period p : kAllPeriods) {
    if (lower(to_string(p)) == key) return p;
  }
  throw FormatError("unknown period '" + std::string(name) +
                    "' (expected Imperial, Komnenian or Palaiologan)");
}

const Novel* Corpus::find(std::string_view id) const {
  const auto it = std::ranges::find(novels, id, &Novel::id);
  return it == novels.end() ? nullptr : &*it;
}

std::vector<Period> Corpus::periods() const {
  std::vector<Period> out;
  for (Period p : kAllPeriods) {
    if (std::ranges::any_of(novels, [p](const Novel& n) { return n.period == p; })) {
      out.push_back(p);
    }
  }
  return out;
}

std::string Corpus::digest() const {
  Json j = Json::array();
  for (const auto& n : novels) {
    Json e = to_json(n);
    e["text_sha256"] = sha256_hex(n.text);
    j.push_back(std::move(e));
  }
  return sha256_hex(j.dump());
}

namespace {

// Rejects duplicate keys at any depth; nlohmann would otherwise keep the last one.
nlohmann::ordered_json parse_rejecting_duplicates(const std::string& text,
                                                  const std::string& origin) {
  std::vector<std::set<std::string>> seen;
  auto cb = [&](int /*depth*/, nlohmann::ordered_json::parse_event_t ev,
                nlohmann::ordered_json& parsed) {
    using E = nlohmann::ordered_json::parse_event_t;
    if (ev == E::object_start) {
      seen.emplace_back();
    } else if (ev == E::object_end) {
      seen.pop_back();
    } else if (ev == E::key) {
      const auto key = parsed.get<std::string>();
      if (!seen.back().insert(key).second) {
        throw FormatError(origin + ": duplicate id \"" + key + "\"");
      }
    }
    return true;
  };
  try {
    return nlohmann::ordered_json::parse(text, cb);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

}  // namespace

Corpus load_corpus(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw Error("corpus manifest not found: " + manifest_path.string());
  }
  const auto origin = manifest_path.string();
  const auto doc = parse_rejecting_duplicates(read_file(manifest_path), origin);
  if (!doc.is_object() || !doc.contains("novels") || !doc["novels"].is_object()) {
    throw FormatError(origin + ": expected an object with a \"novels\" mapping");
  }
  const auto base = manifest_path.parent_path();

  Corpus corpus;
  for (const auto& [id, entry] : doc["novels"].items()) {
    const auto where = origin + ": novel \"" + id + "\"";
    if (id.empty()) throw FormatError(origin + ": empty novel id");
    if (!entry.is_object()) throw FormatError(where + ": entry must be an object");
    for (const auto& [key, _] : entry.items()) {
      if (key != "title" && key != "period" && key != "author" && key != "path") {
        throw FormatError(where + ": unknown field \"" + key + "\"");
      }
    }
    if (!entry.contains("path") || !entry["path"].is_string()) {
      throw FormatError(where + ": missing \"path\"");
    }
    if (!entry.contains("period") || !entry["period"].is_string()) {
      throw FormatError(where + ": missing \"period\"");
    }

    Novel novel;
    novel.id = id;
    novel.title = entry.value("title", id);
    try {
      novel.period = parse_period(entry["period"].get<std::string>());
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (entry.contains("author") && !entry["author"].is_null()) {
      novel.author = entry["author"].get<std::string>();
    }

    const fs::path text_path = base / entry["path"].get<std::string>();
    if (!fs::exists(text_path)) {
      throw Error(where + ": text file not found: " + text_path.string());
    }
    novel.text = read_file(text_path);
    if (!is_valid_utf8(novel.text)) {
      throw FormatError(where + ": invalid UTF-8 in " + text_path.string());
    }
    if (trim(novel.text).empty()) throw FormatError(where + ": empty text");
    corpus.novels.push_back(std::move(novel));
  }
  if (corpus.novels.empty()) throw FormatError(origin + ": no novels listed");
  return corpus;
}

namespace {

bool is_separator_at(std::string_view text, std::size_t pos) {
  std::size_t p = pos;
  return classify(next_code_point(text, p)) == CharClass::Separator;
}

// Length of the terminator ending at a sentence boundary starting at `pos`, or 0.
std::size_t terminator_at(std::string_view text, std::size_t pos, const SplitOptions& opts) {
  for (const auto& t : opts.terminators) {
    if (t.empty() || text.substr(pos, t.size()) != t) continue;
    const std::size_t after = pos + t.size();
    if (after == text.size() || is_separator_at(text, after)) return t.size();
  }
  return 0;
}

}  // namespace

std::vector<SentenceSpan> sentence_spans(std::string_view text, const SplitOptions& opts) {
  std::vector<SentenceSpan> spans;
  std::size_t pos = 0;
  const std::size_t n = text.size();

  auto skip_separators = [&] {
    while (pos < n) {
      std::size_t p = pos;
      if (classify(next_code_point(text, p)) != CharClass::Separator) break;
      pos = p;
    }
  };

  skip_separators();
  while (pos < n) {
    const std::size_t begin = pos;
    std::size_t last_content_end = pos;
    bool terminated = false;
    while (pos < n) {
      if (const std::size_t len = terminator_at(text, pos, opts); len > 0) {
        pos += len;
        spans.push_back({begin, pos});
        terminated = true;
        break;
      }
      std::size_t p = pos;
      const bool sep = classify(next_code_point(text, p)) == CharClass::Separator;
      pos = p;
      if (!sep) last_content_end = pos;
    }
    if (!terminated) spans.push_back({begin, last_content_end});
    skip_separators();
  }
  return spans;
}

std::vector<std::string> split_sentences(std::string_view text, const SplitOptions& opts) {
  std::vector<std::string> out;
  for (const auto& s : sentence_spans(text, opts)) {
    out.emplace_back(text.substr(s.begin, s.end - s.begin));
  }
  return out;
}

std::vector<Chunk> chunk_novel(const Novel& novel, const TokenizerSpec& spec,
                               const SplitOptions& opts) {
  if (spec.max_tokens < 1) throw PreconditionError("max_tokens must be >= 1");
  const std::string_view text = novel.text;
  const auto spans = sentence_spans(text, opts);

  std::vector<Chunk> chunks;
  std::size_t open_first = 0;
  std::size_t open_tokens = 0;
  bool open = false;

  auto emit = [&](std::size_t first, std::size_t last, std::size_t tokens, bool oversized) {
    Chunk c;
    c.novel_id = novel.id;
    c.index = chunks.size();
    c.text = std::string(text.substr(spans[first].begin, spans[last].end - spans[first].begin));
    c.token_count = tokens;
    c.first_sentence = first;
    c.last_sentence = last;
    c.oversized_sentence = oversized;
    chunks.push_back(std::move(c));
  };

  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto sentence = text.substr(spans[s].begin, spans[s].end - spans[s].begin);
    const std::size_t tokens = count_tokens(sentence, spec);
    if (open && open_tokens + tokens <= spec.max_tokens) {
      open_tokens += tokens;
      continue;
    }
    if (open) {
      emit(open_first, s - 1, open_tokens, false);
      open = false;
    }
    if (tokens > spec.max_tokens) {
      emit(s, s, tokens, true);
    } else {
      open = true;
      open_first = s;
      open_tokens = tokens;
    }
  }
  if (open) emit(open_first, spans.size() - 1, open_tokens, false);
  return chunks;
}

ChunkContext context_for(std::span<const Chunk> chunks, std::size_t index) {
  if (index >= chunks.size()) {
    throw std::out_of_range("context_for: index " + std::to_string(index) + " out of range (" +
                            std::to_string(chunks.size()) + " chunks)");
  }
  ChunkContext cc{chunks[index], {}};
  const std::size_t first = index >= 2 ? index - 2 : 0;
  for (std::size_t i = first; i < index; ++i) {
    if (!cc.context_text.empty()) cc.context_text += kContextSeparator;
    cc.context_text += chunks[i].text;
  }
  return cc;
}

Json to_json(const Chunk& c) {
  return Json{{"novel_id", c.novel_id},
              {"index", c.index},
              {"token_count", c.token_count},
              {"sentence_span", {c.first_sentence, c.last_sentence}},
              {"oversized_sentence", c.oversized_sentence},
              {"text", c.text}};
}

Chunk chunk_from_json(const Json& j) {
  try {
    Chunk c;
    c.novel_id = j.at("novel_id").get<std::string>();
    c.index = j.at("index").get<std::size_t>();
    c.token_count = j.at("token_count").get<std::size_t>();
    c.first_sentence = j.at("sentence_span").at(0).get<std::size_t>();
    c.last_sentence = j.at("sentence_span").at(1).get<std::size_t>();
    c.oversized_sentence = j.value("oversized_sentence", false);
    c.text = j.at("text").get<std::string>();
    return c;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed chunk record: ") + e.what());
  }
}

Json to_json(const Novel& n, bool include_text) {
  Json j{{"id", n.id},
         {"title", n.title},
         {"period", std::string(to_string(n.period))},
         {"author", n.author ? Json(*n.author) : Json(nullptr)}};
  if (include_text) j["text"] = n.text;
  return j;
}

Novel novel_from_json(const Json& j) {
  try {
    Novel n;
    n.id = j.at("id").get<std::string>();
    n.title = j.at("title").get<std::string>();
    n.period = parse_period(j.at("period").get<std::string>());
    if (j.contains("author") && !j["author"].is_null()) n.author = j["author"].get<std::string>();
    if (j.contains("text")) n.text = j["text"].get<std::string>();
    return n;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed novel record: ") + e.what());
  }
}

}  // namespace motiflab::corpus
