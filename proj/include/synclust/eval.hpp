#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synclust/clustering.hpp"
#include "synclust/corpus.hpp"
#include "synclust/simindex.hpp"

namespace synclust {

struct LabeledPair {
  TermId a = 0;
  TermId b = 0;
  bool positive = false;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct PairSet {
  std::vector<LabeledPair> pairs;
  // Where positive pairs were drawn from, when a builder chose it.
  std::string positive_scope;
};

struct EvalReport {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::optional<double> threshold;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  // False when nothing was predicted positive; precision is then reported 0.
  bool precision_defined = true;
  std::string positive_scope;
};

EvalReport report_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn);
nlohmann::json to_json(const EvalReport& report);

struct ScoredPair {
  double similarity = 0.0;
  bool positive = false;
};

// Predicted positive iff similarity > threshold.
EvalReport score_at_threshold(std::span<const ScoredPair> pairs, double threshold);
EvalReport score_at_threshold(const PairSet& pairs, const Corpus& corpus, double threshold);

// Every threshold that can change the confusion counts: both sentinels, each
// distinct similarity and the midpoints between neighbors, ascending.
std::vector<double> sweep_thresholds(std::span<const ScoredPair> pairs);

// Global F1 maximum over sweep_thresholds; ties go to the lowest threshold.
EvalReport best_f1_sweep(std::span<const ScoredPair> pairs);
EvalReport best_f1_sweep(const PairSet& pairs, const Corpus& corpus);

std::vector<ScoredPair> score_pairs(const PairSet& pairs, const Corpus& corpus);

// Labels pairs by gold concept equality and drops repeated unordered pairs.
PairSet make_pair_set(const Corpus& corpus, std::span<const std::pair<TermId, TermId>> pairs);

// One seeded-random term per labeled concept, ascending.
std::vector<TermId> choose_concept_anchors(const Corpus& corpus, std::uint64_t seed);

// Per anchor: negatives are its n_neighbors nearest terms of another concept
// among the retrieved neighbors, positives pair it with every other term of
// its concept. Unordered duplicates removed, pairs sorted.
PairSet build_hard_negative_set(const Corpus& corpus, const SimIndex& index, std::span<const TermId> anchors,
                                std::size_t n_neighbors = 30);

// Pairwise P/R/F1 of a cluster assignment against gold concepts over all
// unordered pairs of assigned terms, computed from intersection counts.
EvalReport score_clustering(const ClusterAssignment& assignment, const Corpus& corpus);

// TSV id_a <TAB> id_b <TAB> positive|negative (1|0 also read).
void write_pairs(const std::filesystem::path& path, const PairSet& pairs);
PairSet read_pairs(const std::filesystem::path& path, std::size_t n_terms);

}  // namespace synclust
