#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "synclust/corpus.hpp"
#include "synclust/simindex.hpp"

namespace synclust {

// Multi-Similarity loss hyperparameters. The defaults are the usual MS-loss
// values; nothing here is tuned for a particular corpus.
struct LossConfig {
  double alpha = 2.0;    // positive-pair sharpness
  double beta = 50.0;    // negative-pair sharpness
  double mu = 0.5;       // similarity offset
  double epsilon = 0.1;  // mining margin

  void validate() const;
};

struct Candidate {
  TermId id = 0;
  double similarity = 0.0;
};

// Informative subsets of one anchor's candidate pools, stored as positions
// into the positive/negative candidate lists (a with-replacement positive
// pool may hold the same term in several slots).
struct InformativeSets {
  TermId anchor = 0;
  std::vector<std::size_t> negatives;  // NI: S_ij > min_{k in P} S_ik - eps
  std::vector<std::size_t> positives;  // PI: S_ij < max_{k in N} S_ik + eps
  // False when the pool the threshold is taken from was empty.
  bool negatives_defined = true;
  bool positives_defined = true;
};

InformativeSets mine_informative_sets(TermId anchor, std::span<const Candidate> positives,
                                      std::span<const Candidate> negatives, double epsilon);

struct AnchorBlock {
  TermId anchor = 0;
  std::vector<Candidate> positives;
  std::vector<Candidate> negatives;
  InformativeSets sets;
};

struct LossResult {
  double loss = 0.0;
  // dL/dS per candidate slot, same shape as the blocks' candidate lists.
  std::vector<std::vector<double>> positive_grad;
  std::vector<std::vector<double>> negative_grad;
};

// Mean over anchors of
//   1/alpha * log(1 + sum_{PI} exp(-alpha (S - mu)))
// + 1/beta  * log(1 + sum_{NI} exp( beta (S - mu)))
// with its exact gradient. Informative sets are taken as given.
LossResult ms_loss(std::span<const AnchorBlock> blocks, const LossConfig& config);

struct BatchEntry {
  TermId anchor = 0;
  std::vector<TermId> positives;
  std::vector<TermId> negatives;
};

// Positives: uniform draw from the anchor's synonyms (without replacement
// when there are at least n_pos of them, with replacement otherwise).
// Negatives: the n_neg most similar labeled terms of another concept under
// the index's current snapshot.
BatchEntry sample_batch(const Corpus& corpus, const SimIndex& index, TermId anchor,
                        std::size_t n_pos, std::size_t n_neg, std::uint64_t seed);

// Builds the similarity block for `entry` from the corpus' current embeddings
// and mines its informative sets.
AnchorBlock make_anchor_block(const Corpus& corpus, const BatchEntry& entry, double epsilon);
AnchorBlock make_anchor_block(const EmbeddingMatrix& embeddings, const BatchEntry& entry,
                              double epsilon);

struct OptimizerConfig {
  LossConfig loss;
  std::size_t steps = 10000;
  std::size_t refresh_every = 1000;
  std::size_t batch_size = 2;  // anchors per step
  std::size_t n_pos = 15;
  std::size_t n_neg = 15;
  double lr = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizeResult {
  EmbeddingMatrix embeddings;
  std::vector<double> loss_trace;
  std::size_t index_builds = 0;
};

using StepObserver = std::function<void(std::size_t step, const EmbeddingMatrix&)>;

// Projected gradient descent of the MS loss directly on the embedding rows,
// with the hard-negative index rebuilt every refresh_every steps.
OptimizeResult optimize_embeddings(const Corpus& corpus, const OptimizerConfig& config,
                                   const StepObserver& observer = nullptr);

void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace synclust
