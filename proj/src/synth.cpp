#include "synclust/synth.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "synclust/error.hpp"
#include "synclust/random.hpp"

namespace synclust {

namespace {

using Vec = std::vector<double>;

double dotd(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(Vec& v) {
  const double n = std::sqrt(dotd(v, v));
  for (auto& x : v) x /= n;
}

Vec gaussian(Rng& rng, std::size_t dim) {
  Vec v(dim);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

}  // namespace

void SynthConfig::validate() const {
  if (concepts == 0 || terms_per_concept == 0 || dim < 2) {
    fail(ErrorCode::config, "synth needs concepts >= 1, terms_per_concept >= 1, dim >= 2");
  }
  if (!(intra_min > -1.0 && intra_min < 1.0) || !(inter_max > -1.0 && inter_max <= 1.0)) {
    fail(ErrorCode::config, "synth cosine bands must lie in (-1, 1)");
  }
}

Corpus synthesize_corpus(const SynthConfig& config) {
  config.validate();
  const auto dim = config.dim;
  // Worst case of two terms at angle-opposite offsets r around one center:
  // cos = (1 - r^2) / (1 + r^2). Keep a 20% margin in r^2.
  const double r2 = 0.8 * (1.0 - config.intra_min) / (1.0 + config.intra_min);
  const double radius = std::sqrt(std::max(r2, 0.0));

  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, config.max_attempts); ++attempt) {
    Rng rng(mix_seed(config.seed, attempt));
    std::vector<Vec> centers;
    for (std::size_t c = 0; c < config.concepts; ++c) {
      auto v = gaussian(rng, dim);
      if (config.concepts <= dim) {
        for (const auto& prev : centers) {
          const double p = dotd(v, prev);
          for (std::size_t d = 0; d < dim; ++d) v[d] -= p * prev[d];
        }
      }
      normalize(v);
      centers.push_back(std::move(v));
    }

    std::vector<Vec> rows;
    for (const auto& center : centers) {
      for (std::size_t k = 0; k < config.terms_per_concept; ++k) {
        auto u = gaussian(rng, dim);
        const double p = dotd(u, center);
        for (std::size_t d = 0; d < dim; ++d) u[d] -= p * center[d];
        normalize(u);
        Vec t(dim);
        for (std::size_t d = 0; d < dim; ++d) t[d] = center[d] + radius * u[d];
        normalize(t);
        rows.push_back(std::move(t));
      }
    }

    std::vector<float> values;
    values.reserve(rows.size() * dim);
    for (const auto& r : rows) {
      for (double x : r) values.push_back(static_cast<float>(x));
    }
    auto matrix = EmbeddingMatrix::normalized(rows.size(), dim, std::move(values));

    if (config.verify) {
      bool ok = true;
      const auto per = config.terms_per_concept;
      for (std::size_t i = 0; i < matrix.rows() && ok; ++i) {
        for (std::size_t j = i + 1; j < matrix.rows(); ++j) {
          const double s = dot(matrix.row(i), matrix.row(j));
          const bool same = i / per == j / per;
          if (same ? !(s > config.intra_min) : !(s < config.inter_max)) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) continue;
    }

    std::vector<TermRecord> terms;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      char cid[32];
      char text[64];
      std::snprintf(cid, sizeof cid, "C%04zu", i / config.terms_per_concept);
      std::snprintf(text, sizeof text, "concept %zu variant %zu", i / config.terms_per_concept,
                    i % config.terms_per_concept);
      TermRecord r;
      r.term_id = static_cast<TermId>(i);
      r.text = text;
      r.concept_id = cid;
      r.source_id = i;
      r.source_row = i;
      terms.push_back(std::move(r));
    }
    return Corpus(std::move(terms)).with_embeddings(std::move(matrix));
  }
  fail(ErrorCode::config, "could not satisfy the synth cosine bands in " + std::to_string(config.max_attempts) +
                              " attempts; raise dim or relax the bands");
}

}  // namespace synclust
