#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <regex>
#include <sstream>

#include <doctest.h>

#include "motiflab/analytics.hpp"
#include "oracles.hpp"

using namespace motiflab;
using namespace motiflab::analytics;
using corpus::Period;

namespace {

const std::string kAppendixC = MOTIFLAB_SOURCE_DIR "/data/appendix_c.txt";
const Period kPeriods[] = {Period::Imperial, Period::Komnenian, Period::Palaiologan};

PeriodFreqTable table_of(std::vector<std::vector<double>> rows) {
  PeriodFreqTable t;
  t.periods.assign(std::begin(kPeriods), std::begin(kPeriods) + rows.size());
  t.totals.assign(rows.size(), 1.0);
  t.rel_freq = Matrix(rows.size(), rows[0].size());
  for (std::size_t p = 0; p < rows.size(); ++p)
    for (std::size_t m = 0; m < rows[p].size(); ++m) t.rel_freq(p, m) = rows[p][m];
  return t;
}

MotifMatrix single_row(std::vector<double> values) {
  const auto n = values.size();
  return oracle::make_motif_matrix(Matrix(1, n, std::move(values)), {0});
}

}  // namespace

TEST_SUITE("analytics") {
  TEST_CASE("motif matrix from records") {
    corpus::Corpus corp;
    corp.novels = {{"b", "B", Period::Komnenian, std::nullopt, "x"},
                   {"a", "A", Period::Imperial, std::nullopt, "x"},
                   {"c", "C", Period::Palaiologan, std::nullopt, "x"}};
    std::mt19937_64 rng(30);
    std::uniform_int_distribution<int> novel(0, 2), chunk(0, 4), lab(-1, 4);
    std::vector<extraction::MotifRecord> records;
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) {
      records.push_back({corp.novels[novel(rng)].id, static_cast<std::size_t>(chunk(rng)),
                         static_cast<std::size_t>(i), "s" + std::to_string(i)});
      labels.push_back(lab(rng));
    }
    const Matrix emb(100, 2, 1.0);
    const auto catalog = clustering::build_catalog(records, labels, emb);
    const auto m = build_motif_matrix(records, catalog, corp);
    REQUIRE(m.counts.rows() == 3);
    REQUIRE(m.counts.cols() == catalog.clusters.size());
    CHECK(m.novels[0].id == "b");

    // Brute-force tally straight from the records and raw labels.
    std::map<int, int> dense;
    for (int l : labels) if (l >= 0) dense.try_emplace(l, 0);
    int next = 0;
    for (auto& [_, v] : dense) v = next++;
    Matrix tally(3, dense.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (labels[i] < 0) continue;
      const auto row = std::find_if(corp.novels.begin(), corp.novels.end(),
                                    [&](auto& n) { return n.id == records[i].novel_id; }) - corp.novels.begin();
      tally(row, dense[labels[i]]) += 1;
    }
    CHECK(m.counts == tally);

    const auto cols = m.col_sums();
    for (std::size_t c = 0; c < catalog.clusters.size(); ++c) {
      CHECK(cols[c] == static_cast<double>(catalog.clusters[c].occurrence_count));
    }
    const auto rows = m.row_sums();
    double clustered = 0;
    for (double r : rows) clustered += r;
    CHECK(clustered + catalog.outliers.size() == records.size());

    // Per-chunk dedup counts each (novel, chunk, motif) at most once.
    const auto d = build_motif_matrix(records, catalog, corp, true);
    for (std::size_t i = 0; i < d.counts.data().size(); ++i) CHECK(d.counts.data()[i] <= m.counts.data()[i]);
    std::set<std::tuple<std::string, std::size_t, int>> distinct;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (labels[i] >= 0) distinct.insert({records[i].novel_id, records[i].chunk_index, labels[i]});
    }
    double dsum = 0;
    for (double v : d.counts.data()) dsum += v;
    CHECK(dsum == static_cast<double>(distinct.size()));

    auto stray = records;
    stray[0].novel_id = "zz";
    CHECK_THROWS_AS(build_motif_matrix(stray, catalog, corp), PreconditionError);
  }

  TEST_CASE("one novel with clusters of 3 and 2") {
    const auto m = single_row({3, 2});
    CHECK(m.row_sums() == std::vector<double>{5});
  }

  TEST_CASE("period relative frequencies") {
    SUBCASE("single period ratio") {
      Matrix c(1, 2, std::vector<double>{5, 45});
      const auto m = oracle::make_motif_matrix(c, {0});
      const Period only[] = {Period::Imperial};
      const auto t = period_relative_frequencies(m, only);
      CHECK(t.rel_freq(0, 0) == doctest::Approx(0.10).epsilon(1e-15));
      CHECK(t.totals == std::vector<double>{50});
    }
    SUBCASE("absent motif and normalisation") {
      Matrix c(3, 3, std::vector<double>{1, 0, 3, 2, 0, 2, 0, 5, 5});
      const auto m = oracle::make_motif_matrix(c, {0, 1, 2});
      const auto t = period_relative_frequencies(m, kPeriods);
      CHECK(t.rel_freq(0, 1) == 0.0);
      for (std::size_t p = 0; p < 3; ++p) {
        double s = 0;
        for (std::size_t k = 0; k < 3; ++k) s += t.rel_freq(p, k);
        CHECK(std::abs(s - 1.0) <= 1e-9);
      }
    }
    SUBCASE("errors") {
      Matrix c(2, 2, std::vector<double>{1, 1, 0, 0});
      const auto m = oracle::make_motif_matrix(c, {0, 1});
      CHECK_THROWS_AS(period_relative_frequencies(m, kPeriods), PreconditionError);
      const Period one[] = {Period::Imperial};
      CHECK_THROWS_AS(period_relative_frequencies(oracle::make_motif_matrix(Matrix(1, 1, 1.0), {2}), one),
                      PreconditionError);
    }
  }

  TEST_CASE("fluctuation and persistence") {
    const auto flat = table_of({{0.01}, {0.01}, {0.01}});
    CHECK(fluctuation_scores(flat)[0] == 0.0);
    CHECK(persistence_scores(flat)[0] == 0.01);

    const auto t = table_of({{0.02}, {0.05}, {0.02}});
    CHECK(fluctuation_scores(t)[0] == doctest::Approx(0.0141421356237309505).epsilon(1e-12));
    CHECK(persistence_scores(t)[0] == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(fluctuation_scores(t, StdMode::sample)[0] ==
          doctest::Approx(oracle::std_dev({0.02, 0.05, 0.02}, true)).epsilon(1e-12));
    CHECK(parse_std_mode("sample") == StdMode::sample);
    CHECK_THROWS_AS(parse_std_mode("median"), ConfigError);
    CHECK_THROWS_AS(fluctuation_scores(table_of({{0.5}}), StdMode::sample), PreconditionError);

    // Identical period frequencies give (0, f) exactly for arbitrary f.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
      const double f = u(rng);
      const auto same = table_of({{f}, {f}, {f}});
      CHECK(fluctuation_scores(same)[0] == 0.0);
      CHECK(persistence_scores(same)[0] == f);
    }
  }

  TEST_CASE("ranking is stable") {
    const std::vector<double> s{0.1, 0.3, 0.3, 0.2};
    CHECK(rank_descending(s) == std::vector<std::size_t>{1, 2, 3, 0});
  }

  TEST_CASE("cosine similarity examples") {
    const auto m = oracle::make_motif_matrix(Matrix(4, 3, std::vector<double>{3, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1, 0}),
                                             {0, 0, 1, 2});
    const auto s = similarity_matrix(m);
    CHECK(s.sim(0, 1) == doctest::Approx(4.0 / (std::sqrt(10.0) * std::sqrt(3.0))).epsilon(1e-12));
    CHECK(s.sim(0, 1) == doctest::Approx(0.7303).epsilon(1e-4));
    CHECK(s.sim(2, 3) == 0.0);
    CHECK(s.sim(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
    const auto pairs = ranked_pairs(s);
    CHECK(pairs.size() == 6);
    // 3 / sqrt(10) beats 4 / sqrt(30).
    CHECK(pairs[0].a == 0);
    CHECK(pairs[0].b == 2);
    CHECK(std::is_sorted(pairs.begin(), pairs.end(),
                         [](auto& x, auto& y) { return x.similarity > y.similarity; }));

    const auto zero = oracle::make_motif_matrix(Matrix(2, 2, std::vector<double>{1, 0, 0, 0}), {0, 0});
    CHECK_THROWS_WITH_AS(similarity_matrix(zero), doctest::Contains("novel1"), PreconditionError);
  }

  TEST_CASE("random matrices agree with the loop oracles") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 30; ++t) {
      const std::size_t rows = 3 + t % 18, cols = 5 + (t * 37) % 396;
      const auto counts = oracle::random_counts(rng, rows, cols);
      std::vector<int> period_of(rows);
      for (std::size_t n = 0; n < rows; ++n) period_of[n] = static_cast<int>(n % 3);
      const auto m = oracle::make_motif_matrix(counts, period_of);

      const auto s = similarity_matrix(m);
      const auto s_ref = oracle::cosine_similarity(counts);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < rows; ++j) {
          CHECK(std::abs(s.sim(i, j) - s_ref[i][j]) <= 1e-12);
          CHECK(s.sim(i, j) == s.sim(j, i));
        }
      }
      const auto t_ = period_relative_frequencies(m, kPeriods);
      const auto f_ref = oracle::period_frequencies(counts, period_of, 3);
      const auto fl = fluctuation_scores(t_);
      const auto pe = persistence_scores(t_);
      for (std::size_t c = 0; c < cols; ++c) {
        std::vector<double> series;
        for (int p = 0; p < 3; ++p) {
          CHECK(std::abs(t_.rel_freq(p, c) - f_ref[p][c]) <= 1e-12);
          series.push_back(f_ref[p][c]);
        }
        CHECK(std::abs(fl[c] - oracle::std_dev(series, false)) <= 1e-12);
        CHECK(std::abs(pe[c] - oracle::mean(series)) <= 1e-12);
      }
      const auto u = uniqueness_scores(m);
      const auto l_ref = oracle::lift(counts);
      for (std::size_t n = 0; n < rows; ++n)
        for (std::size_t c = 0; c < cols; ++c) CHECK(std::abs(u.lift(n, c) - l_ref[n][c]) <= 1e-12);
    }
  }

  TEST_CASE("uniqueness") {
    SUBCASE("arithmetic example") {
      // Novel 0: count 5 of row 50; motif column 20 of a grand total 1000.
      Matrix c(2, 2);
      c(0, 0) = 5;
      c(0, 1) = 45;
      c(1, 0) = 15;
      c(1, 1) = 935;
      const auto u = uniqueness_scores(oracle::make_motif_matrix(c, {0, 1}));
      CHECK(u.lift(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
    }
    SUBCASE("proportional spread gives lift one") {
      Matrix c(3, 2, std::vector<double>{10, 30, 20, 60, 5, 15});
      const auto u = uniqueness_scores(oracle::make_motif_matrix(c, {0, 1, 2}));
      for (double v : u.lift.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("a motif unique to one novel ranks first there") {
      Matrix c(2, 3, std::vector<double>{10, 10, 2, 10, 10, 0});
      const auto m = oracle::make_motif_matrix(c, {0, 1});
      const auto u = uniqueness_scores(m);
      CHECK(top_k(u, m, 0, 3).front() == 2);
      CHECK(top_k(u, m, 1, 3).size() == 3);
    }
    SUBCASE("top-k tie rules") {
      // Columns 0 and 1 tie exactly on lift (2.0) for novel 0; column 1 has the larger count.
      Matrix c(2, 3, std::vector<double>{1, 2, 1, 1, 2, 9});
      const auto m = oracle::make_motif_matrix(c, {0, 1});
      const auto u = uniqueness_scores(m);
      REQUIRE(u.lift(0, 0) == u.lift(0, 1));
      const auto top = top_k(u, m, 0, 2);
      CHECK(top == std::vector<std::size_t>{1, 0});
    }
    SUBCASE("unused motif is NaN and skipped; empty novel is zero") {
      Matrix c(2, 2, std::vector<double>{3, 0, 0, 0});
      const auto m = oracle::make_motif_matrix(c, {0, 0});
      const auto u = uniqueness_scores(m);
      CHECK(std::isnan(u.lift(0, 1)));
      CHECK(u.lift(1, 0) == 0.0);
      CHECK(top_k(u, m, 0, 3) == std::vector<std::size_t>{0});
    }
  }

  TEST_CASE("scale invariance") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> scale(0.1, 50);
    for (int t = 0; t < 50; ++t) {
      const auto counts = oracle::random_counts(rng, 8, 60);
      const auto base = oracle::make_motif_matrix(counts, {0, 1, 2, 0, 1, 2, 0, 1});
      const auto s = similarity_matrix(base);
      const double c = scale(rng);
      const std::size_t row = t % 8;

      auto one = base;
      for (double& v : one.counts.row(row)) v *= c;
      const auto s1 = similarity_matrix(one);
      for (std::size_t j = 0; j < 8; ++j) {
        CHECK(std::abs(s1.sim(row, j) - s.sim(row, j)) <= 1e-12);
        CHECK(std::abs(s1.sim(j, row) - s.sim(j, row)) <= 1e-12);
      }

      // Lift is a ratio of shares, so scaling every row by the same factor leaves
      // each novel's ranking untouched.
      auto all = base;
      for (double& v : all.counts.data()) v *= c;
      const auto u0 = uniqueness_scores(base);
      const auto u1 = uniqueness_scores(all);
      for (std::size_t n = 0; n < 8; ++n) {
        // Equal lifts may swap under a 1-ulp perturbation; the ranked values may not.
        const auto r0 = top_k(u0, base, n, 60), r1 = top_k(u1, all, n, 60);
        REQUIRE(r0.size() == r1.size());
        for (std::size_t i = 0; i < r0.size(); ++i) {
          CHECK(std::abs(u1.lift(n, r1[i]) - u0.lift(n, r0[i])) <= 1e-12 * u0.lift(n, r0[i]));
        }
      }
      // Powers of two scale exactly, so the ranking matches index for index.
      auto twice = base;
      for (double& v : twice.counts.data()) v *= 8.0;
      const auto u2 = uniqueness_scores(twice);
      for (std::size_t n = 0; n < 8; ++n) CHECK(top_k(u0, base, n, 60) == top_k(u2, twice, n, 60));
    }
  }

  TEST_CASE("network export") {
    std::mt19937_64 rng(9);
    const auto counts = oracle::random_counts(rng, 14, 50);
    std::vector<int> po(14);
    for (int i = 0; i < 14; ++i) po[i] = i % 3;
    const auto s = similarity_matrix(oracle::make_motif_matrix(counts, po));
    const auto full = network_export(s, 0.0);
    CHECK(full["nodes"].size() == 14);
    CHECK(full["links"].size() == 91);
    CHECK(full["nodes"][0]["period"] == "Imperial");
    CHECK(full["directed"] == false);
    std::size_t distinct_ones = 0;
    for (std::size_t i = 0; i < 14; ++i)
      for (std::size_t j = i + 1; j < 14; ++j) distinct_ones += s.sim(i, j) >= 1.0;
    CHECK(network_export(s, 1.0)["links"].size() == distinct_ones);
    CHECK_THROWS_AS(network_export(s, 1.5), PreconditionError);
    CHECK_THROWS_AS(network_export(s, -0.1), PreconditionError);
  }

  TEST_CASE("published pair list replay") {
    const auto text = read_file(kAppendixC);
    const auto f = parse_similarity_fixture(text);
    CHECK(f.novels.size() == 15);
    const auto report = verify_fixture(f);
    CHECK(report.ok());
    CHECK(report.pair_count == 105);
    CHECK(report.expected_pairs == 105);
    CHECK(report.min_similarity == 0.13);
    CHECK(report.max_similarity == 0.81);
    CHECK(f.novels[f.pairs.front().a].title == "Aithiopica");
    CHECK(f.novels[f.pairs.front().b].title == "Leucippe and Clitophon");
    CHECK(f.pairs.back().similarity == 0.13);

    // Edge count at 0.70 by scanning the raw lines.
    std::size_t scanned = 0;
    std::istringstream in(text);
    const std::regex score(R"(: similarity ([0-9.]+)\s*$)");
    for (std::string line; std::getline(in, line);) {
      std::smatch m;
      if (std::regex_search(line, m, score) && std::stod(m[1].str()) >= 0.70) ++scanned;
    }
    CHECK(scanned == 9);
    const auto net = network_export(report.sim, 0.70);
    CHECK(net["links"].size() == scanned);
    std::vector<double> weights;
    for (const auto& l : net["links"]) weights.push_back(l["weight"].get<double>());
    std::sort(weights.rbegin(), weights.rend());
    CHECK(weights == std::vector<double>{0.81, 0.80, 0.77, 0.77, 0.74, 0.74, 0.73, 0.72, 0.72});
  }

  TEST_CASE("fixture defects are reported") {
    const std::string head = "Novel: A | Imperial\nNovel: B and C | Komnenian\nNovel: D | Palaiologan\n";
    SUBCASE("ordering") {
      const auto f = parse_similarity_fixture(head +
          "A and B and C: similarity 0.30\nA and D: similarity 0.50\nB and C and D: similarity 0.10\n");
      const auto r = verify_fixture(f);
      CHECK_FALSE(r.ok());
      REQUIRE(r.violations.size() == 1);
      CHECK(r.violations[0].find("ordering violation") != std::string::npos);
    }
    SUBCASE("missing and duplicate pairs") {
      const auto f = parse_similarity_fixture(head +
          "A and D: similarity 0.50\nD and A: similarity 0.40\n");
      const auto r = verify_fixture(f);
      CHECK(r.violations.size() == 2);
    }
    SUBCASE("out of range") {
      const auto f = parse_similarity_fixture(head +
          "A and D: similarity 1.50\nA and B and C: similarity 0.40\nB and C and D: similarity 0.1\n");
      CHECK_FALSE(verify_fixture(f).ok());
    }
    SUBCASE("malformed input") {
      CHECK_THROWS_AS(parse_similarity_fixture(head + "A and Q: similarity 0.5\n"), FormatError);
      CHECK_THROWS_AS(parse_similarity_fixture(head + "gibberish\n"), FormatError);
      CHECK_THROWS_AS(parse_similarity_fixture(head + "A and D: similarity x\n"), FormatError);
    }
  }
}
