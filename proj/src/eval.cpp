#include "synclust/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "synclust/error.hpp"
#include "synclust/random.hpp"

namespace synclust {

EvalReport report_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.precision_defined = tp + fp > 0;
  r.precision = r.precision_defined ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"recall", r.recall},
                   {"precision", r.precision},
                   {"f1", r.f1},
                   {"precision_defined", r.precision_defined},
                   {"counts", {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn}}}};
  if (r.threshold) j["threshold"] = *r.threshold;
  if (!r.positive_scope.empty()) j["positive_scope"] = r.positive_scope;
  return j;
}

EvalReport score_at_threshold(std::span<const ScoredPair> pairs, double threshold) {
  if (pairs.empty()) fail(ErrorCode::undefined_metrics, "cannot score an empty pair set");
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& p : pairs) {
    const bool predicted = p.similarity > threshold;
    if (predicted) {
      (p.positive ? tp : fp) += 1;
    } else {
      (p.positive ? fn : tn) += 1;
    }
  }
  auto r = report_from_counts(tp, fp, fn, tn);
  r.threshold = threshold;
  return r;
}

std::vector<ScoredPair> score_pairs(const PairSet& pairs, const Corpus& corpus) {
  std::vector<ScoredPair> out;
  out.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) out.push_back({corpus.cosine(p.a, p.b), p.positive});
  return out;
}

EvalReport score_at_threshold(const PairSet& pairs, const Corpus& corpus, double threshold) {
  auto r = score_at_threshold(score_pairs(pairs, corpus), threshold);
  r.positive_scope = pairs.positive_scope;
  return r;
}

std::vector<double> sweep_thresholds(std::span<const ScoredPair> pairs) {
  std::vector<double> sims;
  sims.reserve(pairs.size());
  for (const auto& p : pairs) sims.push_back(p.similarity);
  std::sort(sims.begin(), sims.end());
  sims.erase(std::unique(sims.begin(), sims.end()), sims.end());

  std::vector<double> out = {-1.0, 1.0};
  if (!sims.empty() && sims.front() <= -1.0) out.push_back(std::nextafter(sims.front(), -2.0));
  for (std::size_t i = 0; i < sims.size(); ++i) {
    out.push_back(sims[i]);
    if (i + 1 < sims.size()) out.push_back(sims[i] + (sims[i + 1] - sims[i]) / 2.0);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EvalReport best_f1_sweep(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) fail(ErrorCode::undefined_metrics, "cannot sweep an empty pair set");
  std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.similarity < b.similarity; });
  // positives_upto[i] = positives among sorted[0, i)
  std::vector<std::uint64_t> positives_upto(sorted.size() + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) positives_upto[i + 1] = positives_upto[i] + sorted[i].positive;
  const auto total = static_cast<std::uint64_t>(sorted.size());
  const auto total_pos = positives_upto.back();

  struct Best {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    double threshold = 0.0;
    bool set = false;
  } best;
  // F1 = 2tp / (2tp + fp + fn), compared exactly.
  auto better = [](const Best& cand, const Best& cur) {
    using u128 = unsigned __int128;
    const u128 lhs = u128(2 * cand.tp) * (2 * cur.tp + cur.fp + cur.fn);
    const u128 rhs = u128(2 * cur.tp) * (2 * cand.tp + cand.fp + cand.fn);
    return lhs > rhs;
  };

  for (double t : sweep_thresholds(pairs)) {
    const auto below = static_cast<std::uint64_t>(
        std::upper_bound(sorted.begin(), sorted.end(), t,
                         [](double v, const ScoredPair& p) { return v < p.similarity; }) -
        sorted.begin());
    Best cand;
    cand.tp = total_pos - positives_upto[below];
    cand.fp = (total - below) - cand.tp;
    cand.fn = positives_upto[below];
    cand.tn = below - cand.fn;
    cand.threshold = t;
    cand.set = true;
    if (!best.set || better(cand, best)) best = cand;
  }
  auto r = report_from_counts(best.tp, best.fp, best.fn, best.tn);
  r.threshold = best.threshold;
  return r;
}

EvalReport best_f1_sweep(const PairSet& pairs, const Corpus& corpus) {
  auto r = best_f1_sweep(score_pairs(pairs, corpus));
  r.positive_scope = pairs.positive_scope;
  return r;
}

PairSet make_pair_set(const Corpus& corpus, std::span<const std::pair<TermId, TermId>> pairs) {
  PairSet out;
  std::set<std::pair<TermId, TermId>> seen;
  for (auto [a, b] : pairs) {
    if (a == b) continue;
    if (!corpus.term(a).concept_id || !corpus.term(b).concept_id) {
      fail(ErrorCode::label, "pair (" + std::to_string(a) + ", " + std::to_string(b) + ") has an unlabeled term");
    }
    if (!seen.emplace(std::min(a, b), std::max(a, b)).second) continue;
    out.pairs.push_back({std::min(a, b), std::max(a, b), corpus.same_concept(a, b)});
  }
  return out;
}

std::vector<TermId> choose_concept_anchors(const Corpus& corpus, std::uint64_t seed) {
  std::vector<TermId> anchors;
  for (const auto& [cid, ids] : corpus.concept_index()) {
    Rng rng(mix_seed(seed, fnv1a64(cid)));
    anchors.push_back(ids[uniform_index(rng, ids.size())]);
  }
  std::sort(anchors.begin(), anchors.end());
  return anchors;
}

PairSet build_hard_negative_set(const Corpus& corpus, const SimIndex& index, std::span<const TermId> anchors,
                                std::size_t n_neighbors) {
  if (n_neighbors == 0) fail(ErrorCode::config, "n_neighbors must be at least 1");
  std::vector<std::pair<TermId, TermId>> raw;
  for (auto anchor : anchors) {
    if (!corpus.term(anchor).concept_id) fail(ErrorCode::label, "anchor " + std::to_string(anchor) + " is unlabeled");
    for (const auto& n : index.top_k(anchor, n_neighbors).neighbors) {
      const auto& c = corpus.term(n.id).concept_id;
      if (c && !corpus.same_concept(anchor, n.id)) raw.emplace_back(anchor, n.id);
    }
    for (auto syn : corpus.synonyms_of(anchor)) raw.emplace_back(anchor, syn);
  }
  auto out = make_pair_set(corpus, raw);
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const LabeledPair& x, const LabeledPair& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  out.positive_scope = "anchor_full_concept";
  return out;
}

EvalReport score_clustering(const ClusterAssignment& assignment, const Corpus& corpus) {
  auto choose2 = [](std::uint64_t n) { return n * (n - (n > 0)) / 2; };
  std::uint64_t n = 0;
  std::uint64_t predicted = 0;
  std::uint64_t tp = 0;
  std::map<std::string_view, std::uint64_t> concept_sizes;
  for (const auto& cluster : assignment.clusters) {
    std::map<std::string_view, std::uint64_t> cell;
    for (auto t : cluster) {
      const auto& c = corpus.term(t).concept_id;
      if (!c) fail(ErrorCode::label, "clustered term " + std::to_string(t) + " has no gold concept");
      ++cell[*c];
      ++concept_sizes[*c];
    }
    n += cluster.size();
    predicted += choose2(cluster.size());
    for (const auto& [c, k] : cell) tp += choose2(k);
  }
  std::uint64_t actual = 0;
  for (const auto& [c, k] : concept_sizes) actual += choose2(k);
  const auto total = choose2(n);
  const auto fp = predicted - tp;
  const auto fn = actual - tp;
  return report_from_counts(tp, fp, fn, total - tp - fp - fn);
}

void write_pairs(const std::filesystem::path& path, const PairSet& pairs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  for (const auto& p : pairs.pairs) out << p.a << '\t' << p.b << '\t' << (p.positive ? "positive" : "negative") << '\n';
}

PairSet read_pairs(const std::filesystem::path& path, std::size_t n_terms) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  PairSet out;
  std::set<std::pair<TermId, TermId>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    std::istringstream row(line);
    long long a = -1, b = -1;
    std::string label;
    if (!(row >> a >> b >> label) || a < 0 || b < 0) fail(ErrorCode::parse, where + ": expected id_a <TAB> id_b <TAB> label");
    if (static_cast<std::size_t>(a) >= n_terms || static_cast<std::size_t>(b) >= n_terms) {
      fail(ErrorCode::index, where + ": term id out of range");
    }
    bool positive = false;
    if (label == "positive" || label == "1") {
      positive = true;
    } else if (label != "negative" && label != "0") {
      fail(ErrorCode::parse, where + ": label must be positive or negative");
    }
    const auto lo = static_cast<TermId>(std::min(a, b));
    const auto hi = static_cast<TermId>(std::max(a, b));
    if (!seen.emplace(lo, hi).second) fail(ErrorCode::integrity, where + ": duplicate pair");
    out.pairs.push_back({lo, hi, positive});
  }
  return out;
}

}  // namespace synclust
