#include <array>
#include <cmath>
#include <cstdint>
#include <regex>

#include <httplib.h>
#include <unicode/uchar.h>

#include "motiflab/backends.hpp"
#include "motiflab/tokenizer.hpp"

namespace motiflab::gateway {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<std::string> lowercase_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = corpus::next_code_point(text, pos);
    if (corpus::classify(cp) == corpus::CharClass::Word) {
      append_utf8(current, static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp))));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

// Each family shares its content words across wordings so that the hashed
// embeddings of one family sit close together.
constexpr std::array<std::array<std::string_view, 3>, 16> kSyntheticMotifs{{
    {"A ship is caught in a violent storm at sea.", "A violent storm at sea wrecks the ship.",
     "The ship struggles through a storm at sea."},
    {"Lovers are separated by cruel fortune.", "Cruel fortune separates the young lovers.",
     "The lovers are separated and long for each other."},
    {"Pirates capture the travellers.", "Travellers are captured by pirates on the coast.",
     "Pirates seize and capture the travellers."},
    {"A dream foretells the future.", "A prophetic dream foretells coming events.",
     "The future is foretold in a dream."},
    {"A beautiful maiden captivates every onlooker.", "The maiden's beauty captivates onlookers.",
     "Onlookers are captivated by a beautiful maiden."},
    {"A lavish banquet is held in the palace.", "The palace hosts a lavish banquet.",
     "Guests feast at a lavish palace banquet."},
    {"A letter reveals a hidden secret.", "A hidden secret is revealed by a letter.",
     "The secret letter reveals hidden truths."},
    {"Grief overwhelms a mourning parent.", "A mourning parent is overwhelmed by grief.",
     "Overwhelming grief for a lost child."},
    {"A garden of flowers delights the senses.", "Flowers in the garden delight the senses.",
     "The flowering garden delights every sense."},
    {"Soldiers prepare for battle.", "Preparations for battle among soldiers.",
     "The soldiers arm themselves and prepare for battle."},
    {"Prayers are offered to the gods.", "Offering prayers and sacrifice to the gods.",
     "The gods receive prayers and offerings."},
    {"A false accusation leads to trial.", "The accused stands trial on a false accusation.",
     "A trial follows a false accusation."},
    {"Night falls and brings sleepless longing.", "Sleepless longing through the night.",
     "At night longing keeps the lover sleepless."},
    {"A tower guards a captive princess.", "The captive princess is guarded in a tower.",
     "A high tower where the princess is kept captive."},
    {"Music from a shepherd's pipe fills the fields.", "The shepherd plays music on his pipe.",
     "Pipe music of shepherds in the fields."},
    {"A wedding is celebrated with joy.", "Joyful celebration of a wedding.",
     "The wedding celebration brings joy to the city."},
}};

}  // namespace

MockBackend::MockBackend(MockOptions opts) : opts_(std::move(opts)) {
  if (opts_.embedding_dim == 0) throw PreconditionError("mock backend: embedding_dim must be > 0");
}

std::string MockBackend::complete(const ChatRequest& req) {
  if (const auto it = opts_.canned.find(req.user_content); it != opts_.canned.end()) {
    return it->second;
  }
  if (const auto it = opts_.responders.find(req.system_prompt); it != opts_.responders.end()) {
    if (auto reply = it->second(req)) return *reply;
  }
  throw BackendError("mock backend: no canned reply or responder for request", 404, false);
}

std::vector<double> MockBackend::hash_embedding(const std::string& text, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  auto words = lowercase_words(text);
  if (words.empty()) words.push_back(text);
  for (const auto& w : words) {
    std::uint64_t state = fnv1a(w);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto bits = splitmix64(state) >> 11;  // 53 random bits
      v[k] += static_cast<double>(bits) * 0x1.0p-52 - 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    v[0] = 1.0;
    return v;
  }
  for (double& x : v) x /= norm;
  return v;
}

std::vector<std::vector<double>> MockBackend::embed(const std::string& /*model*/,
                                                    std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embedding(t, opts_.embedding_dim));
  return out;
}

std::map<std::string, std::string> load_canned_table(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(path.string() + ": canned table must be a JSON object");
  return j.get<std::map<std::string, std::string>>();
}

std::string synthetic_motif_reply(const ChatRequest& req) {
  std::uint64_t state = fnv1a(req.user_content);
  std::vector<std::size_t> picked;
  while (picked.size() < 3) {
    const std::size_t family = splitmix64(state) % kSyntheticMotifs.size();
    if (std::find(picked.begin(), picked.end(), family) == picked.end()) picked.push_back(family);
  }
  std::string reply;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    const auto& wordings = kSyntheticMotifs[picked[i]];
    const auto wording = wordings[splitmix64(state) % wordings.size()];
    reply += std::to_string(i + 1) + ". " + std::string(wording) + "\n";
  }
  return reply;
}

std::string first_item_reply(const ChatRequest& req) {
  static const std::regex numbering(R"(^\s*\d+[.)]\s*)");
  std::size_t start = 0;
  const std::string& s = req.user_content;
  while (start < s.size()) {
    auto end = s.find('\n', start);
    if (end == std::string::npos) end = s.size();
    const auto line = trim(std::regex_replace(s.substr(start, end - start), numbering, ""));
    if (!line.empty()) return line;
    start = end + 1;
  }
  return trim(s);
}

OpenAICompatibleBackend::OpenAICompatibleBackend(OpenAIOptions opts) : opts_(std::move(opts)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(opts_.base_url, m, url)) {
    throw ConfigError("backend base_url must look like http(s)://host[:port][/prefix]: " +
                      opts_.base_url);
  }
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : "";
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

Json OpenAICompatibleBackend::post(const std::string& endpoint, const Json& body) const {
  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(opts_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);

  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

  const auto path = path_prefix_ + endpoint;
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError("transport failure on POST " + path + ": " + httplib::to_string(res.error()),
                       0, true);
  }
  if (res->status != 200) {
    const bool retryable = res->status == 429 || res->status >= 500;
    throw BackendError("POST " + path + " returned HTTP " + std::to_string(res->status) + ": " +
                           res->body,
                       res->status, retryable);
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw BackendError("malformed response envelope from " + path + ": " + e.what(), res->status,
                       false);
  }
}

std::string OpenAICompatibleBackend::complete(const ChatRequest& req) {
  const Json resp = post("/chat/completions", req.canonical_body());
  try {
    const auto& content = resp.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("chat response content is not a string", 200, false);
    return content.get<std::string>();
  } catch (const Json::exception& e) {
    throw BackendError(std::string("malformed chat response envelope: ") + e.what(), 200, false);
  }
}

std::vector<std::vector<double>> OpenAICompatibleBackend::embed(
    const std::string& model, std::span<const std::string> texts) {
  const Json body{{"model", model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  const Json resp = post("/embeddings", body);
  try {
    const auto& data = resp.at("data");
    std::vector<std::vector<double>> out(texts.size());
    std::vector<char> filled(texts.size(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data.at(i);
      const std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      if (idx >= out.size() || filled[idx]) {
        throw BackendError("embedding response has bad or repeated index", 200, false);
      }
      out[idx] = item.at("embedding").get<std::vector<double>>();
      filled[idx] = 1;
    }
    if (std::find(filled.begin(), filled.end(), 0) != filled.end()) {
      throw BackendError("embedding response is missing vectors", 200, false);
    }
    return out;
  } catch (const Json::exception& e) {
    throw BackendError(std::string("malformed embedding response envelope: ") + e.what(), 200,
                       false);
  }
}

}  // namespace motiflab::gateway
