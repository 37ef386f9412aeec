#pragma once

#include <cstddef>
#include <cstdint>

#include "synclust/corpus.hpp"

namespace synclust {

// Labeled geometry for tests and demos: `concepts` centers on the unit
// sphere (orthonormal when concepts <= dim), each with terms_per_concept
// terms scattered around it. With verify on, every same-concept pair has
// cosine > intra_min and every cross-concept pair cosine < inter_max.
struct SynthConfig {
  std::size_t concepts = 10;
  std::size_t terms_per_concept = 6;
  std::size_t dim = 32;
  double intra_min = 0.9;
  double inter_max = 0.3;
  std::uint64_t seed = 0;
  bool verify = true;
  std::size_t max_attempts = 50;

  void validate() const;
};

// Term ids are concept-major; concept ids are "C0000", "C0001", ...
Corpus synthesize_corpus(const SynthConfig& config);

}  // namespace synclust
