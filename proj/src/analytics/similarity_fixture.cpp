#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "motiflab/analytics.hpp"

namespace motiflab::analytics {

namespace {

std::string where(std::size_t line) { return "similarity fixture line " + std::to_string(line); }

}  // namespace

SimilarityFixture parse_similarity_fixture(std::string_view text) {
  static const std::regex novel_re(R"(^Novel:\s*(.+?)\s*\|\s*(\S+)\s*$)");
  static const std::regex pair_re(R"(^(.+):\s*similarity\s+([0-9]*\.?[0-9]+)\s*$)");

  SimilarityFixture f;
  std::map<std::string, std::size_t, std::less<>> index;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;

    std::smatch m;
    if (std::regex_match(line, m, novel_re)) {
      if (!f.pairs.empty()) throw FormatError(where(line_no) + ": novel declared after pair lines");
      const std::string title = m[1].str();
      corpus::Period period;
      try {
        period = corpus::parse_period(m[2].str());
      } catch (const FormatError& e) {
        throw FormatError(where(line_no) + ": " + e.what());
      }
      if (!index.emplace(title, f.novels.size()).second) {
        throw FormatError(where(line_no) + ": duplicate novel '" + title + "'");
      }
      f.novels.push_back({title, title, period});
      continue;
    }
    if (!std::regex_match(line, m, pair_re)) {
      throw FormatError(where(line_no) + ": unrecognized line '" + line + "'");
    }
    const std::string names = m[1].str();
    const std::string score = m[2].str();
    double sim = 0.0;
    const auto [ptr, ec] = std::from_chars(score.data(), score.data() + score.size(), sim);
    if (ec != std::errc() || ptr != score.data() + score.size()) {
      throw FormatError(where(line_no) + ": bad similarity '" + score + "'");
    }

    // Titles may themselves contain " and ", so try every split point.
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    static constexpr std::string_view sep = " and ";
    for (auto pos = names.find(sep); pos != std::string::npos; pos = names.find(sep, pos + 1)) {
      const auto a = index.find(std::string_view(names).substr(0, pos));
      const auto b = index.find(std::string_view(names).substr(pos + sep.size()));
      if (a != index.end() && b != index.end()) candidates.emplace_back(a->second, b->second);
    }
    if (candidates.size() != 1) {
      throw FormatError(where(line_no) + ": cannot resolve '" + names + "' to " +
                        (candidates.empty() ? "two declared novels" : "a unique pair"));
    }
    f.pairs.push_back({candidates[0].first, candidates[0].second, sim, line_no});
  }
  if (f.novels.size() < 2) throw FormatError("similarity fixture declares fewer than two novels");
  return f;
}

SimilarityFixture load_similarity_fixture(const std::filesystem::path& path) {
  try {
    return parse_similarity_fixture(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

FixtureReport verify_fixture(const SimilarityFixture& f) {
  FixtureReport r;
  const std::size_t n = f.novels.size();
  r.pair_count = f.pairs.size();
  r.expected_pairs = n * (n - 1) / 2;
  r.sim.novels = f.novels;
  r.sim.sim = Matrix(n, n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) r.sim.sim(i, i) = 1.0;
  r.min_similarity = std::numeric_limits<double>::infinity();
  r.max_similarity = -std::numeric_limits<double>::infinity();

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < f.pairs.size(); ++k) {
    const auto& p = f.pairs[k];
    const auto& ta = f.novels[p.a].title;
    const auto& tb = f.novels[p.b].title;
    r.min_similarity = std::min(r.min_similarity, p.similarity);
    r.max_similarity = std::max(r.max_similarity, p.similarity);
    if (!(p.similarity >= 0.0 && p.similarity <= 1.0)) {
      r.violations.push_back(fmt::format("line {}: similarity {} is outside [0, 1]", p.line,
                                         p.similarity));
    }
    if (k > 0 && p.similarity > f.pairs[k - 1].similarity) {
      r.violations.push_back(fmt::format("line {}: ordering violation, {:.2f} follows {:.2f}",
                                         p.line, p.similarity, f.pairs[k - 1].similarity));
    }
    if (p.a == p.b) {
      r.violations.push_back(fmt::format("line {}: '{}' is paired with itself", p.line, ta));
      continue;
    }
    if (!seen.emplace(std::min(p.a, p.b), std::max(p.a, p.b)).second) {
      r.violations.push_back(fmt::format("line {}: duplicate pair '{}' / '{}'", p.line, ta, tb));
      continue;
    }
    r.sim.sim(p.a, p.b) = p.similarity;
    r.sim.sim(p.b, p.a) = p.similarity;
  }
  if (seen.size() != r.expected_pairs) {
    r.violations.push_back(fmt::format("{} distinct pairs listed, {} novels need {}", seen.size(),
                                       n, r.expected_pairs));
  }
  if (f.pairs.empty()) r.min_similarity = r.max_similarity = 0.0;
  return r;
}

}  // namespace motiflab::analytics
