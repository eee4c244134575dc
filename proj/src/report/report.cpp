#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "motiflab/report.hpp"

namespace motiflab::report {

namespace {

std::string csv_header(std::string_view digest) {
  return fmt::format("# manifest_digest: {}\n", digest);
}

std::string text_footer(std::string_view digest) { return fmt::format("\nmanifest: {}\n", digest); }

std::string count_text(double v) { return fmt::format("{}", static_cast<long long>(v)); }

const std::string& label_of(const analytics::MotifMatrix& m, std::size_t col) {
  return m.motifs[col].label;
}

}  // namespace

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string full_precision(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

Rendered emit_motif_appendix(const clustering::MotifCatalog& catalog,
                             const analytics::MotifMatrix& matrix, std::string_view digest) {
  if (matrix.motifs.size() != catalog.clusters.size()) {
    throw PreconditionError("motif appendix: matrix and catalog disagree on the motif count");
  }
  for (const auto& c : catalog.clusters) {
    if (!c.label) {
      throw PreconditionError("motif appendix: cluster " + std::to_string(c.cluster_id) +
                              " is unlabeled (run the 'label' stage first)");
    }
  }
  Rendered r;
  const auto counts = matrix.col_sums();
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return catalog.clusters[a].cluster_id < catalog.clusters[b].cluster_id;
  });

  std::string text;
  std::string csv = csv_header(digest) + "rank,cluster_id,label,occurrences\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& c = catalog.clusters[order[i]];
    text += fmt::format("{}. {} - {} occurrences\n", i + 1, *c.label, count_text(counts[order[i]]));
    csv += fmt::format("{},{},{},{}\n", i + 1, c.cluster_id, csv_field(*c.label),
                       count_text(counts[order[i]]));
  }
  if (order.empty()) r.warnings.push_back("motif appendix: the catalog has no clusters");
  r.files.push_back({"appendix_a.txt", text + text_footer(digest)});
  r.files.push_back({"appendix_a.csv", std::move(csv)});
  return r;
}

Rendered emit_figure_data(std::span<const double> fluctuation, std::span<const double> persistence,
                          const analytics::PeriodFreqTable& table,
                          const analytics::MotifMatrix& matrix, std::size_t k,
                          std::string_view digest) {
  Rendered r;
  const std::size_t motifs = matrix.motifs.size();
  if (k > motifs) {
    r.warnings.push_back(fmt::format("figure data: k={} exceeds the {} available motifs; capped", k,
                                     motifs));
    k = motifs;
  }
  std::string header = "rank,cluster_id,label,score";
  for (auto p : table.periods) header += fmt::format(",{}", corpus::to_string(p));
  header += "\n";

  std::string appendix_d;
  const auto figure = [&](std::span<const double> scores, const char* name, const char* heading,
                          const char* measure, int decimals) {
    const auto ranked = analytics::rank_descending(scores);
    std::string csv = csv_header(digest) + header;
    appendix_d += heading;
    appendix_d += "\n\n";
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t col = ranked[i];
      csv += fmt::format("{},{},{},{}", i + 1, matrix.motifs[col].cluster_id,
                         csv_field(label_of(matrix, col)), full_precision(scores[col]));
      for (std::size_t p = 0; p < table.periods.size(); ++p) {
        csv += "," + full_precision(table.rel_freq(p, col));
      }
      csv += "\n";
      appendix_d += fmt::format("Motif {}: {} = {:.{}f}\n\n", matrix.motifs[col].cluster_id,
                                measure, scores[col], decimals);
    }
    r.files.push_back({name, std::move(csv)});
  };
  figure(fluctuation, "figure_a_fluctuating.csv", "Fluctuation Scores for Most Fluctuating Motifs:",
         "Std. Dev.", 4);
  figure(persistence, "figure_b_persistent.csv", "Persistence Scores for Most Persistent Motifs:", "Mean",
         4);
  while (appendix_d.ends_with("\n\n")) appendix_d.pop_back();
  r.files.push_back({"appendix_d.txt", appendix_d + text_footer(digest)});
  return r;
}

Rendered emit_similarity_report(const analytics::SimilarityMatrix& sim, std::string_view digest) {
  Rendered r;
  const auto pairs = analytics::ranked_pairs(sim);
  std::string text;
  std::string csv = csv_header(digest) + "rank,novel_a,novel_b,title_a,title_b,similarity\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& a = sim.novels[pairs[i].a];
    const auto& b = sim.novels[pairs[i].b];
    text += fmt::format("{} and {}: similarity {:.2f}\n", a.title, b.title, pairs[i].similarity);
    csv += fmt::format("{},{},{},{},{},{}\n", i + 1, csv_field(a.id), csv_field(b.id),
                       csv_field(a.title), csv_field(b.title), full_precision(pairs[i].similarity));
  }
  r.files.push_back({"appendix_c.txt", text + text_footer(digest)});
  r.files.push_back({"appendix_c.csv", std::move(csv)});

  std::string matrix = csv_header(digest) + "novel_id";
  for (const auto& n : sim.novels) matrix += "," + csv_field(n.id);
  matrix += "\n";
  for (std::size_t i = 0; i < sim.novels.size(); ++i) {
    matrix += csv_field(sim.novels[i].id);
    for (std::size_t j = 0; j < sim.novels.size(); ++j) matrix += "," + full_precision(sim.sim(i, j));
    matrix += "\n";
  }
  r.files.push_back({"similarity_matrix.csv", std::move(matrix)});
  return r;
}

Rendered emit_uniqueness_report(const analytics::UniquenessTable& uniq,
                                const analytics::MotifMatrix& matrix, std::size_t k,
                                std::string_view digest) {
  Rendered r;
  std::string text;
  std::string csv = csv_header(digest) + "novel_id,title,rank,cluster_id,label,count,lift\n";
  for (std::size_t n = 0; n < matrix.novels.size(); ++n) {
    const auto& novel = matrix.novels[n];
    const auto top = analytics::top_k(uniq, matrix, n, k);
    if (top.size() < k) {
      r.warnings.push_back(fmt::format("uniqueness: novel '{}' has only {} scored motifs", novel.id,
                                       top.size()));
    }
    text += fmt::format("Novel: {}\n\n", novel.title);
    for (std::size_t i = 0; i < top.size(); ++i) {
      const std::size_t col = top[i];
      text += fmt::format("- Unique Topic {}: {} (Relative Uniqueness Score: {:.2f})\n",
                          matrix.motifs[col].cluster_id, label_of(matrix, col), uniq.lift(n, col));
      csv += fmt::format("{},{},{},{},{},{},{}\n", csv_field(novel.id), csv_field(novel.title), i + 1,
                         matrix.motifs[col].cluster_id, csv_field(label_of(matrix, col)),
                         count_text(matrix.counts(n, col)), full_precision(uniq.lift(n, col)));
    }
    text += "\n";
  }
  if (text.ends_with("\n\n")) text.pop_back();
  r.files.push_back({"appendix_b.txt", text + text_footer(digest)});
  r.files.push_back({"appendix_b.csv", std::move(csv)});

  std::string table = csv_header(digest) + "novel_id";
  for (const auto& m : matrix.motifs) table += fmt::format(",{}", m.cluster_id);
  table += "\n";
  for (std::size_t n = 0; n < matrix.novels.size(); ++n) {
    table += csv_field(matrix.novels[n].id);
    for (std::size_t c = 0; c < matrix.motifs.size(); ++c) table += "," + full_precision(uniq.lift(n, c));
    table += "\n";
  }
  r.files.push_back({"uniqueness.csv", std::move(table)});
  return r;
}

Rendered emit_metric_tables(const analytics::MotifMatrix& matrix,
                            const analytics::PeriodFreqTable& table,
                            std::span<const double> fluctuation,
                            std::span<const double> persistence, std::string_view digest) {
  Rendered r;
  std::string counts = csv_header(digest) + "novel_id,title,period";
  for (const auto& m : matrix.motifs) counts += fmt::format(",{}", m.cluster_id);
  counts += "\n";
  for (std::size_t n = 0; n < matrix.novels.size(); ++n) {
    const auto& nv = matrix.novels[n];
    counts += fmt::format("{},{},{}", csv_field(nv.id), csv_field(nv.title), corpus::to_string(nv.period));
    for (double v : matrix.counts.row(n)) counts += "," + count_text(v);
    counts += "\n";
  }
  r.files.push_back({"motif_matrix.csv", std::move(counts)});

  std::string freq = csv_header(digest) + "cluster_id,label";
  for (auto p : table.periods) freq += fmt::format(",{}", corpus::to_string(p));
  freq += "\n";
  for (std::size_t c = 0; c < matrix.motifs.size(); ++c) {
    freq += fmt::format("{},{}", matrix.motifs[c].cluster_id, csv_field(label_of(matrix, c)));
    for (std::size_t p = 0; p < table.periods.size(); ++p) freq += "," + full_precision(table.rel_freq(p, c));
    freq += "\n";
  }
  r.files.push_back({"period_frequencies.csv", std::move(freq)});

  const auto scores = [&](std::span<const double> s, const char* name, const char* column) {
    std::string csv = csv_header(digest) + fmt::format("rank,cluster_id,label,{}\n", column);
    const auto ranked = analytics::rank_descending(s);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      csv += fmt::format("{},{},{},{}\n", i + 1, matrix.motifs[ranked[i]].cluster_id,
                         csv_field(label_of(matrix, ranked[i])), full_precision(s[ranked[i]]));
    }
    r.files.push_back({name, std::move(csv)});
  };
  scores(fluctuation, "fluctuation.csv", "std_dev");
  scores(persistence, "persistence.csv", "mean");
  return r;
}

Rendered emit_network(Json network, std::string_view digest) {
  network["manifest_digest"] = std::string(digest);
  return Rendered{{{"network.json", network.dump(2) + "\n"}}, {}};
}

void write_rendered(const std::filesystem::path& dir, const Rendered& r) {
  for (const auto& f : r.files) write_file_atomic(dir / f.name, f.contents);
}

}  // namespace motiflab::report
