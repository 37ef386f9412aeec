#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>

#include "synclust/contrastive.hpp"
#include "synclust/error.hpp"
#include "synclust/random.hpp"

namespace synclust {

void OptimizerConfig::validate() const {
  loss.validate();
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::config, "optimizer lr must be positive");
  if (batch_size == 0) fail(ErrorCode::config, "optimizer batch_size must be at least 1");
}

OptimizeResult optimize_embeddings(const Corpus& corpus, const OptimizerConfig& config,
                                   const StepObserver& observer) {
  config.validate();
  if (!corpus.has_embeddings()) fail(ErrorCode::state, "optimizer needs a corpus with embeddings");

  OptimizeResult result;
  result.embeddings = corpus.embeddings();
  if (config.steps == 0) return result;

  std::vector<TermId> anchors;
  std::map<std::string, std::size_t> outside;  // labeled terms outside each concept
  std::size_t labeled = 0;
  for (const auto& [cid, ids] : corpus.concept_index()) labeled += ids.size();
  for (const auto& [cid, ids] : corpus.concept_index()) {
    outside[cid] = labeled - ids.size();
    if (ids.size() >= 2) anchors.insert(anchors.end(), ids.begin(), ids.end());
  }
  std::sort(anchors.begin(), anchors.end());
  if (anchors.empty()) fail(ErrorCode::label, "optimizer needs at least one concept with two or more terms");

  auto index = SimIndex::build(corpus);
  result.index_builds = 1;

  std::vector<TermId> epoch_order;
  std::size_t cursor = 0;
  std::size_t epoch = 0;
  auto next_anchor = [&]() {
    if (cursor == epoch_order.size()) {
      epoch_order = anchors;
      Rng rng(mix_seed(config.seed, epoch++));
      for (std::size_t i = epoch_order.size(); i > 1; --i) {
        std::swap(epoch_order[i - 1], epoch_order[uniform_index(rng, i)]);
      }
      cursor = 0;
    }
    return epoch_order[cursor++];
  };

  const auto dim = corpus.dim();
  result.loss_trace.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<AnchorBlock> blocks;
    blocks.reserve(config.batch_size);
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto anchor = next_anchor();
      const auto& cid = *corpus.term(anchor).concept_id;
      const auto n_neg = std::min(config.n_neg, outside.at(cid));
      const auto entry = sample_batch(corpus, index, anchor, config.n_pos, n_neg,
                                      mix_seed(config.seed, step * config.batch_size + b + 1));
      blocks.push_back(make_anchor_block(result.embeddings, entry, config.loss.epsilon));
    }

    const auto loss = ms_loss(blocks, config.loss);
    result.loss_trace.push_back(loss.loss);

    // dS_ij/de_i = e_j and dS_ij/de_j = e_i on the unit sphere's ambient space.
    std::map<TermId, std::vector<double>> grads;
    auto accumulate = [&](TermId row, TermId other, double g) {
      if (g == 0.0) return;
      auto& acc = grads[row];
      if (acc.empty()) acc.assign(dim, 0.0);
      const auto e = result.embeddings.row(other);
      for (std::size_t d = 0; d < dim; ++d) acc[d] += g * e[d];
    };
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& blk = blocks[i];
      for (std::size_t k = 0; k < blk.positives.size(); ++k) {
        accumulate(blk.anchor, blk.positives[k].id, loss.positive_grad[i][k]);
        accumulate(blk.positives[k].id, blk.anchor, loss.positive_grad[i][k]);
      }
      for (std::size_t k = 0; k < blk.negatives.size(); ++k) {
        accumulate(blk.anchor, blk.negatives[k].id, loss.negative_grad[i][k]);
        accumulate(blk.negatives[k].id, blk.anchor, loss.negative_grad[i][k]);
      }
    }

    std::vector<double> updated(dim);
    for (const auto& [row, g] : grads) {
      auto e = result.embeddings.mutable_row(row);
      double norm2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        updated[d] = e[d] - config.lr * g[d];
        norm2 += updated[d] * updated[d];
      }
      const double norm = std::sqrt(norm2);
      if (!(norm > 0.0) || !std::isfinite(norm)) continue;  // keep the previous row
      for (std::size_t d = 0; d < dim; ++d) e[d] = static_cast<float>(updated[d] / norm);
    }
    if (observer) observer(step, result.embeddings);

    if (config.refresh_every > 0 && (step + 1) % config.refresh_every == 0 && step + 1 < config.steps) {
      index = SimIndex::build(corpus.with_embeddings(result.embeddings));
      ++result.index_builds;
    }
  }
  return result;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << "step,loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace synclust
