#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "synclust/eval.hpp"

using namespace synclust;

namespace {

// Term 0 is the reference; term i > 0 has cosine sims[i-1] with it.
Corpus fan_corpus(const std::vector<double>& sims, const std::vector<std::string>& concepts) {
  std::vector<std::vector<float>> rows{{1, 0}};
  for (double s : sims) rows.push_back({float(s), float(std::sqrt(1 - s * s))});
  return testing::make_corpus(rows, concepts);
}

std::vector<ScoredPair> random_scored(std::size_t n, std::uint64_t seed, bool coarse) {
  Rng rng(seed);
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 2 * uniform_unit(rng) - 1;
    if (coarse) s = std::round(s * 20) / 20;
    const bool pos = uniform_unit(rng) < 0.2 + 0.6 * (s + 1) / 2;
    out.push_back({s, pos});
  }
  return out;
}

std::vector<std::pair<double, bool>> as_plain(const std::vector<ScoredPair>& pairs) {
  std::vector<std::pair<double, bool>> out;
  for (const auto& p : pairs) out.emplace_back(p.similarity, p.positive);
  return out;
}

}  // namespace

TEST_CASE("four pairs at threshold 0.65") {
  const auto c = fan_corpus({0.9, 0.6, 0.7, 0.2}, {"A", "A", "A", "B", "B"});
  const std::vector<std::pair<TermId, TermId>> raw{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  const auto ps = make_pair_set(c, raw);
  REQUIRE(ps.pairs.size() == 4);
  CHECK(ps.pairs[0].positive);
  CHECK(ps.pairs[1].positive);
  CHECK_FALSE(ps.pairs[2].positive);
  CHECK_FALSE(ps.pairs[3].positive);

  const auto r = score_at_threshold(ps, c, 0.65);
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.tn == 1);
  CHECK(r.precision == doctest::Approx(0.5));
  CHECK(r.recall == doctest::Approx(0.5));
  CHECK(r.f1 == doctest::Approx(0.5));
  CHECK(*r.threshold == 0.65);
}

TEST_CASE("saturation at the sentinels") {
  const std::vector<ScoredPair> p{{0.9, true}, {0.6, true}, {0.7, false}, {0.2, false}, {0.1, false}};
  const auto hi = score_at_threshold(p, 1.0);
  CHECK(hi.tp + hi.fp == 0);
  CHECK(hi.recall == 0.0);
  CHECK_FALSE(hi.precision_defined);
  CHECK(hi.precision == 0.0);
  CHECK(hi.f1 == 0.0);
  const auto lo = score_at_threshold(p, -1.0);
  CHECK(lo.recall == 1.0);
  CHECK(lo.precision == doctest::Approx(2.0 / 5));
}

TEST_CASE("strict comparison at the threshold") {
  const std::vector<ScoredPair> p{{0.5, true}, {0.5, false}};
  const auto r = score_at_threshold(p, 0.5);
  CHECK(r.tp == 0);
  CHECK(r.fp == 0);
}

TEST_CASE("empty pair sets have undefined metrics") {
  const std::vector<ScoredPair> none;
  CHECK_ERROR_CODE(score_at_threshold(none, 0.5), ErrorCode::undefined_metrics);
  CHECK_ERROR_CODE(best_f1_sweep(none), ErrorCode::undefined_metrics);
  const auto c = fan_corpus({0.9}, {"A", "A"});
  CHECK_ERROR_CODE(best_f1_sweep(PairSet{}, c), ErrorCode::undefined_metrics);
}

TEST_CASE("sweep: separable pairs reach F1 1 at a midpoint") {
  const std::vector<ScoredPair> p{{0.95, true}, {0.8, true}, {0.75, true}, {0.4, false}, {-0.3, false}};
  const auto r = best_f1_sweep(p);
  CHECK(r.f1 == 1.0);
  CHECK(*r.threshold < 0.75);
  // Lowest threshold among the ties; strict comparison excludes 0.4 itself.
  CHECK(*r.threshold == 0.4);
  CHECK(score_at_threshold(p, 0.575).f1 == 1.0);
}

TEST_CASE("sweep: the four-pair example agrees with the grid") {
  const std::vector<ScoredPair> p{{0.9, true}, {0.6, true}, {0.7, false}, {0.2, false}};
  const auto r = best_f1_sweep(p);
  CHECK(r.f1 == doctest::Approx(oracle::grid_best_f1(as_plain(p))).epsilon(1e-12));
  CHECK(r.f1 == doctest::Approx(0.8));
}

TEST_CASE("sweep: one shared similarity degenerates to the saturation reports") {
  const std::vector<ScoredPair> p{{0.3, true}, {0.3, false}, {0.3, false}};
  const auto thresholds = sweep_thresholds(p);
  CHECK(thresholds.front() == -1.0);
  CHECK(thresholds.back() == 1.0);
  const auto r = best_f1_sweep(p);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == doctest::Approx(0.5));
  CHECK(*r.threshold < 0.3);
}

TEST_CASE("sweep thresholds are ascending and interleave the similarities") {
  const std::vector<ScoredPair> p{{0.2, true}, {0.6, false}, {0.2, false}, {-0.5, true}};
  const std::vector<double> want{-1.0, -0.5, -0.15, 0.2, 0.4, 0.6, 1.0};
  const auto got = sweep_thresholds(p);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-15));
}

TEST_CASE("sweep optimality against the grid (property)") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto p = random_scored(40 + seed, seed, seed % 2 == 0);
    const auto r = best_f1_sweep(p);
    const double grid = oracle::grid_best_f1(as_plain(p));
    CHECK(r.f1 >= grid - 1e-12);
    const auto at = oracle::threshold_counts(as_plain(p), *r.threshold);
    CHECK(r.tp == at.tp);
    CHECK(r.fp == at.fp);
    CHECK(r.f1 == doctest::Approx(oracle::f1_of(at)).epsilon(1e-12));
  }
}

TEST_CASE("raising the threshold never raises recall (property)") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_scored(60, seed + 100, false);
    double prev = 1.0;
    for (int i = 0; i <= 200; ++i) {
      const auto r = score_at_threshold(p, -1.0 + i / 100.0);
      CHECK(r.recall <= prev);
      prev = r.recall;
    }
  }
}

TEST_CASE("report arithmetic (property)") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto tp = uniform_index(rng, 50), fp = uniform_index(rng, 50);
    const auto fn = uniform_index(rng, 50), tn = uniform_index(rng, 50);
    const auto r = report_from_counts(tp, fp, fn, tn);
    const double f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    CHECK(std::abs(f1 - r.f1) < 1e-9);
    CHECK(r.precision_defined == (tp + fp > 0));
  }
}

TEST_CASE("report JSON carries counts and threshold") {
  auto r = report_from_counts(3, 1, 2, 4);
  r.threshold = 0.25;
  r.positive_scope = "anchor_full_concept";
  const auto j = to_json(r);
  CHECK(j["counts"]["tp"] == 3);
  CHECK(j["counts"]["fp"] == 1);
  CHECK(j["counts"]["fn"] == 2);
  CHECK(j["counts"]["tn"] == 4);
  CHECK(j["threshold"] == 0.25);
  CHECK(j["precision_defined"] == true);
  CHECK(j["positive_scope"] == "anchor_full_concept");
  CHECK(j["f1"].get<double>() == doctest::Approx(r.f1));
}

TEST_CASE("pair sets: labels by concept, duplicates and self pairs dropped") {
  const auto c = testing::make_corpus({{1, 0}, {0.9f, 0.1f}, {0, 1}, {0.1f, 0.9f}, {1, 1}}, {"A", "A", "B", "B", ""});
  const std::vector<std::pair<TermId, TermId>> raw{{0, 1}, {1, 0}, {2, 2}, {0, 3}, {3, 2}};
  const auto ps = make_pair_set(c, raw);
  CHECK(ps.pairs == std::vector<LabeledPair>{{0, 1, true}, {0, 3, false}, {2, 3, true}});
  const std::vector<std::pair<TermId, TermId>> unlabeled{{0, 4}};
  CHECK_ERROR_CODE(make_pair_set(c, unlabeled), ErrorCode::label);
}

TEST_CASE("pair TSV round trip and integrity") {
  testing::TempDir dir("pairs");
  PairSet ps;
  ps.pairs = {{0, 3, false}, {1, 2, true}, {2, 4, false}};
  write_pairs(dir / "p.tsv", ps);
  CHECK(read_pairs(dir / "p.tsv", 5).pairs == ps.pairs);

  {
    std::ofstream out(dir / "numeric.tsv");
    out << "0\t1\t1\n2\t3\t0\n";
  }
  CHECK(read_pairs(dir / "numeric.tsv", 4).pairs == std::vector<LabeledPair>{{0, 1, true}, {2, 3, false}});
  {
    std::ofstream out(dir / "dup.tsv");
    out << "0\t1\tpositive\n1\t0\tpositive\n";
  }
  CHECK_ERROR_CODE(read_pairs(dir / "dup.tsv", 4), ErrorCode::integrity);
  {
    std::ofstream out(dir / "range.tsv");
    out << "0\t9\tnegative\n";
  }
  CHECK_ERROR_CODE(read_pairs(dir / "range.tsv", 4), ErrorCode::index);
  {
    std::ofstream out(dir / "label.tsv");
    out << "0\t1\tmaybe\n";
  }
  CHECK_ERROR_CODE(read_pairs(dir / "label.tsv", 4), ErrorCode::parse);
  CHECK_ERROR_CODE(read_pairs(dir / "missing.tsv", 4), ErrorCode::io);
}

TEST_CASE("concept anchors: one per concept, seeded") {
  const auto c = testing::random_corpus(60, 8, 6, 3);
  const auto a = choose_concept_anchors(c, 11);
  CHECK(a.size() == 6);
  CHECK(std::is_sorted(a.begin(), a.end()));
  std::set<std::string> seen;
  for (auto t : a) seen.insert(*c.term(t).concept_id);
  CHECK(seen.size() == 6);
  CHECK(choose_concept_anchors(c, 11) == a);
}

TEST_CASE("hard negatives: anchor whose neighbors share its concept adds no negatives") {
  const auto c = testing::make_corpus({{1, 0}, {0.99f, 0.1f}, {0.98f, 0.2f}, {0, 1}}, {"A", "A", "A", "B"});
  const auto idx = SimIndex::build(c);
  const std::vector<TermId> anchors{0};
  const auto ps = build_hard_negative_set(c, idx, anchors, 2);
  CHECK(ps.pairs == std::vector<LabeledPair>{{0, 1, true}, {0, 2, true}});
  CHECK(ps.positive_scope == "anchor_full_concept");
}

TEST_CASE("hard negatives on 300 terms match brute-force 5-NN") {
  const auto c = testing::clustered_corpus(300, 12, 40, 0.3, 21);
  const auto idx = SimIndex::build(c);
  const auto anchors = choose_concept_anchors(c, 5);
  const auto ps = build_hard_negative_set(c, idx, anchors, 5);

  std::set<std::pair<TermId, TermId>> want_neg, want_pos;
  for (auto a : anchors) {
    for (auto [n, s] : oracle::top_k(c, a, 5)) {
      if (*c.term(n).concept_id != *c.term(a).concept_id) want_neg.emplace(std::min(a, n), std::max(a, n));
    }
    for (TermId t = 0; t < c.size(); ++t) {
      if (t != a && *c.term(t).concept_id == *c.term(a).concept_id) want_pos.emplace(std::min(a, t), std::max(a, t));
    }
  }
  std::set<std::pair<TermId, TermId>> got_neg, got_pos;
  for (const auto& p : ps.pairs) (p.positive ? got_pos : got_neg).emplace(p.a, p.b);
  CHECK(got_neg == want_neg);
  CHECK(got_pos == want_pos);
  CHECK(got_neg.size() + got_pos.size() == ps.pairs.size());
  CHECK_FALSE(want_neg.empty());
}

TEST_CASE("hard negatives: contracts") {
  const auto c = testing::make_corpus({{1, 0}, {0, 1}}, {"A", ""});
  const auto idx = SimIndex::build(c);
  const std::vector<TermId> unlabeled{1};
  CHECK_ERROR_CODE(build_hard_negative_set(c, idx, unlabeled, 5), ErrorCode::label);
  const std::vector<TermId> ok{0};
  CHECK_ERROR_CODE(build_hard_negative_set(c, idx, ok, 0), ErrorCode::config);
}

TEST_CASE("clustering score: identity and all-singletons") {
  const auto c = testing::random_corpus(30, 4, 5, 1);
  std::vector<std::vector<TermId>> gold;
  for (const auto& [cid, ids] : c.concept_index()) gold.push_back(ids);
  const auto id = score_clustering(make_assignment(c.size(), gold), c);
  CHECK(id.precision == 1.0);
  CHECK(id.recall == 1.0);
  CHECK(id.f1 == 1.0);

  std::vector<std::vector<TermId>> singles;
  for (TermId t = 0; t < c.size(); ++t) singles.push_back({t});
  const auto s = score_clustering(make_assignment(c.size(), singles), c);
  CHECK(s.recall == 0.0);
  CHECK(s.precision == 0.0);
  CHECK_FALSE(s.precision_defined);
  CHECK(s.f1 == 0.0);
}

TEST_CASE("clustering score equals pair enumeration (property)") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t n = seed == 0 ? 300 : 100;
    const auto c = testing::random_corpus(n, 3, 2 + seed % 20, seed);
    Rng rng(seed * 7 + 1);
    const std::size_t k = 1 + uniform_index(rng, 30);
    std::vector<std::vector<TermId>> clusters(k);
    for (TermId t = 0; t < n; ++t) clusters[uniform_index(rng, k)].push_back(t);
    std::erase_if(clusters, [](const auto& v) { return v.empty(); });
    const auto a = make_assignment(n, clusters);
    const auto r = score_clustering(a, c);
    const auto want = oracle::clustering_counts(a.cluster_of, c);
    CHECK(r.tp == want.tp);
    CHECK(r.fp == want.fp);
    CHECK(r.fn == want.fn);
    CHECK(r.tn == want.tn);
    CHECK(r.f1 == doctest::Approx(oracle::f1_of(want)).epsilon(1e-12));
  }
}

TEST_CASE("clustering score rejects unlabeled members") {
  const auto c = testing::make_corpus({{1, 0}, {0, 1}}, {"A", ""});
  CHECK_ERROR_CODE(score_clustering(make_assignment(2, {{0, 1}}), c), ErrorCode::label);
}
