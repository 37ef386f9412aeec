#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "synclust/corpus.hpp"
#include "synclust/error.hpp"
#include "synclust/random.hpp"

namespace testing {

using synclust::Corpus;
using synclust::EmbeddingMatrix;
using synclust::TermId;
using synclust::TermRecord;

// Corpus from explicit rows; concept "" means unlabeled, text defaults to "t<i>".
inline Corpus make_corpus(const std::vector<std::vector<float>>& rows, const std::vector<std::string>& concepts = {},
                          const std::vector<std::string>& texts = {}) {
  std::vector<TermRecord> terms;
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::vector<float> values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TermRecord r;
    r.term_id = static_cast<TermId>(i);
    r.text = i < texts.size() ? texts[i] : "t" + std::to_string(i);
    if (i < concepts.size() && !concepts[i].empty()) r.concept_id = concepts[i];
    r.source_id = i;
    r.source_row = i;
    terms.push_back(std::move(r));
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  Corpus c(std::move(terms));
  if (rows.empty()) return c;
  return synclust::attach_embeddings(c, EmbeddingMatrix(rows.size(), dim, std::move(values)));
}

inline std::vector<float> gaussian_vector(std::size_t dim, synclust::Rng& rng) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(synclust::standard_normal(rng));
  return v;
}

// n random directions, labels drawn from `concepts` classes round-robin.
inline Corpus random_corpus(std::size_t n, std::size_t dim, std::size_t concepts, std::uint64_t seed) {
  synclust::Rng rng(seed);
  std::vector<std::vector<float>> rows;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back(gaussian_vector(dim, rng));
    labels.push_back(concepts ? "K" + std::to_string(i % concepts) : "");
  }
  return make_corpus(rows, labels);
}

// Concept centers plus Gaussian jitter of scale `noise`; gives real
// neighborhoods with many cosines near any threshold.
inline Corpus clustered_corpus(std::size_t n, std::size_t dim, std::size_t concepts, double noise,
                               std::uint64_t seed) {
  synclust::Rng rng(seed);
  std::vector<std::vector<float>> centers;
  for (std::size_t c = 0; c < concepts; ++c) {
    auto v = gaussian_vector(dim, rng);
    double norm = 0;
    for (float x : v) norm += double(x) * x;
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
    centers.push_back(v);
  }
  std::vector<std::vector<float>> rows;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = synclust::uniform_index(rng, concepts);
    auto v = centers[c];
    for (auto& x : v) x += static_cast<float>(noise * synclust::standard_normal(rng));
    rows.push_back(v);
    labels.push_back("K" + std::to_string(c));
  }
  return make_corpus(rows, labels);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("synclust_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

#define CHECK_ERROR_CODE(expr, ecode)                                        \
  do {                                                                       \
    try {                                                                    \
      (void)(expr);                                                          \
      FAIL("expected synclust::Error " << synclust::to_string(ecode));       \
    } catch (const synclust::Error& e_) {                                    \
      CHECK_MESSAGE(e_.code() == (ecode), e_.what());                        \
    }                                                                        \
  } while (0)

namespace testing {

// Two concepts of five terms each whose centers are close (cosine `gap`),
// with small per-term noise: the two groups overlap in similarity, so the
// informative sets start out non-empty.
inline Corpus near_duplicate_fixture(std::uint64_t seed, std::size_t dim = 16, double gap = 0.8,
                                     double noise = 0.08) {
  synclust::Rng rng(seed);
  std::vector<float> a(dim, 0.0f), b(dim, 0.0f);
  a[0] = 1.0f;
  b[0] = static_cast<float>(gap);
  b[1] = static_cast<float>(std::sqrt(1.0 - gap * gap));
  std::vector<std::vector<float>> rows;
  std::vector<std::string> labels;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 5; ++i) {
      auto v = c == 0 ? a : b;
      for (auto& x : v) x += static_cast<float>(noise * synclust::standard_normal(rng));
      rows.push_back(v);
      labels.push_back(c == 0 ? "A" : "B");
    }
  }
  return make_corpus(rows, labels);
}

}  // namespace testing
