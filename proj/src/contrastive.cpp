#include "synclust/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synclust/error.hpp"
#include "synclust/random.hpp"

namespace synclust {

void LossConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(epsilon >= 0.0) || !std::isfinite(alpha) ||
      !std::isfinite(beta) || !std::isfinite(mu) || !std::isfinite(epsilon)) {
    fail(ErrorCode::config, "loss config requires alpha > 0, beta > 0, epsilon >= 0, all finite");
  }
}

InformativeSets mine_informative_sets(TermId anchor, std::span<const Candidate> positives,
                                      std::span<const Candidate> negatives, double epsilon) {
  InformativeSets sets;
  sets.anchor = anchor;
  sets.negatives_defined = !positives.empty();
  sets.positives_defined = !negatives.empty();

  if (sets.negatives_defined) {
    double min_pos = std::numeric_limits<double>::infinity();
    for (const auto& p : positives) min_pos = std::min(min_pos, p.similarity);
    for (std::size_t j = 0; j < negatives.size(); ++j) {
      if (negatives[j].similarity > min_pos - epsilon) sets.negatives.push_back(j);
    }
  }
  if (sets.positives_defined) {
    double max_neg = -std::numeric_limits<double>::infinity();
    for (const auto& n : negatives) max_neg = std::max(max_neg, n.similarity);
    for (std::size_t j = 0; j < positives.size(); ++j) {
      if (positives[j].similarity < max_neg + epsilon) sets.positives.push_back(j);
    }
  }
  return sets;
}

namespace {

// log(1 + sum exp(x_k)) and the softmax weights exp(x_k) / (1 + sum exp(x)).
double log1p_sum_exp(std::span<const double> x, std::vector<double>& weights) {
  weights.assign(x.size(), 0.0);
  if (x.empty()) return 0.0;
  double shift = 0.0;
  for (double v : x) shift = std::max(shift, v);
  double denom = std::exp(-shift);
  for (std::size_t k = 0; k < x.size(); ++k) {
    weights[k] = std::exp(x[k] - shift);
    denom += weights[k];
  }
  for (auto& w : weights) w /= denom;
  return shift + std::log(denom);
}

}  // namespace

LossResult ms_loss(std::span<const AnchorBlock> blocks, const LossConfig& config) {
  config.validate();
  LossResult result;
  result.positive_grad.resize(blocks.size());
  result.negative_grad.resize(blocks.size());
  if (blocks.empty()) return result;

  const double inv_m = 1.0 / static_cast<double>(blocks.size());
  std::vector<double> exponents;
  std::vector<double> weights;
  double total = 0.0;

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    for (const auto* pool : {&b.positives, &b.negatives}) {
      for (const auto& c : *pool) {
        if (!std::isfinite(c.similarity)) {
          fail(ErrorCode::numeric, "non-finite similarity for anchor " + std::to_string(b.anchor));
        }
      }
    }
    auto& gp = result.positive_grad[i];
    auto& gn = result.negative_grad[i];
    gp.assign(b.positives.size(), 0.0);
    gn.assign(b.negatives.size(), 0.0);

    exponents.clear();
    for (auto k : b.sets.positives) {
      if (k >= b.positives.size()) fail(ErrorCode::index, "informative positive slot out of range");
      exponents.push_back(-config.alpha * (b.positives[k].similarity - config.mu));
    }
    total += log1p_sum_exp(exponents, weights) / config.alpha;
    // d/dS [1/a log(1 + sum e^{-a(S-mu)})] = -w
    for (std::size_t n = 0; n < weights.size(); ++n) gp[b.sets.positives[n]] -= inv_m * weights[n];

    exponents.clear();
    for (auto k : b.sets.negatives) {
      if (k >= b.negatives.size()) fail(ErrorCode::index, "informative negative slot out of range");
      exponents.push_back(config.beta * (b.negatives[k].similarity - config.mu));
    }
    total += log1p_sum_exp(exponents, weights) / config.beta;
    for (std::size_t n = 0; n < weights.size(); ++n) gn[b.sets.negatives[n]] += inv_m * weights[n];
  }
  result.loss = total * inv_m;
  return result;
}

BatchEntry sample_batch(const Corpus& corpus, const SimIndex& index, TermId anchor,
                        std::size_t n_pos, std::size_t n_neg, std::uint64_t seed) {
  const auto& rec = corpus.term(anchor);
  if (!rec.concept_id) fail(ErrorCode::label, "anchor " + std::to_string(anchor) + " has no concept_id");
  if (index.size() != corpus.size()) fail(ErrorCode::state, "index and corpus sizes differ");

  BatchEntry entry;
  entry.anchor = anchor;

  auto pool = corpus.synonyms_of(anchor);
  Rng rng(seed);
  if (!pool.empty() && n_pos > 0) {
    if (pool.size() >= n_pos) {
      // Partial Fisher-Yates.
      for (std::size_t i = 0; i < n_pos; ++i) {
        const auto j = i + uniform_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
      }
      entry.positives.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_pos));
    } else {
      entry.positives.reserve(n_pos);
      for (std::size_t i = 0; i < n_pos; ++i) entry.positives.push_back(pool[uniform_index(rng, pool.size())]);
    }
  }

  const auto& concept_id = *rec.concept_id;
  auto list = index.top_k_where(anchor, n_neg, [&](TermId j) {
    const auto& c = corpus.term(j).concept_id;
    return c && *c != concept_id;
  });
  if (list.neighbors.size() < n_neg) {
    fail(ErrorCode::state, "anchor " + std::to_string(anchor) + ": only " +
                               std::to_string(list.neighbors.size()) +
                               " labeled terms outside its concept, need " + std::to_string(n_neg));
  }
  for (const auto& n : list.neighbors) entry.negatives.push_back(n.id);
  return entry;
}

AnchorBlock make_anchor_block(const EmbeddingMatrix& embeddings, const BatchEntry& entry,
                              double epsilon) {
  const auto check = [&](TermId id) {
    if (id >= embeddings.rows()) fail(ErrorCode::index, "term_id " + std::to_string(id) + " out of range");
    return embeddings.row(id);
  };
  const auto a = check(entry.anchor);
  AnchorBlock block;
  block.anchor = entry.anchor;
  for (auto p : entry.positives) block.positives.push_back({p, dot(a, check(p))});
  for (auto n : entry.negatives) block.negatives.push_back({n, dot(a, check(n))});
  block.sets = mine_informative_sets(entry.anchor, block.positives, block.negatives, epsilon);
  return block;
}

AnchorBlock make_anchor_block(const Corpus& corpus, const BatchEntry& entry, double epsilon) {
  return make_anchor_block(corpus.embeddings(), entry, epsilon);
}

}  // namespace synclust
