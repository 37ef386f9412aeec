#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "synclust/corpus.hpp"

namespace synclust {

struct Neighbor {
  TermId id = 0;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Neighbors in descending similarity, ties by ascending id, query excluded.
struct NeighborList {
  TermId query = 0;
  std::vector<Neighbor> neighbors;

  friend bool operator==(const NeighborList&, const NeighborList&) = default;
};

// Exact top-k cosine search by blocked brute force. The index keeps its own
// snapshot of the embeddings, so it stays valid (and stale) while the corpus
// it was built from is optimized further.
class SimIndex {
 public:
  static SimIndex build(const Corpus& corpus);

  std::size_t size() const noexcept { return snapshot_.rows(); }

  NeighborList top_k(TermId query, std::size_t k) const;

  // top_k restricted to candidates for which keep(id) is true.
  NeighborList top_k_where(TermId query, std::size_t k,
                           const std::function<bool(TermId)>& keep) const;

  // top_k for every term; queries are spread over `workers` threads.
  std::vector<NeighborList> all_top_k(std::size_t k, unsigned workers = 1) const;

  double similarity(TermId a, TermId b) const;

 private:
  explicit SimIndex(EmbeddingMatrix snapshot) : snapshot_(std::move(snapshot)) {}

  EmbeddingMatrix snapshot_;
};

// Neighbor order: higher similarity first, then lower id.
inline bool neighbor_before(const Neighbor& a, const Neighbor& b) noexcept {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

// JSON lines {"q": id, "nn": [[id, sim], ...]}.
void write_neighbor_lists(std::ostream& out, std::span<const NeighborList> lists);
void write_neighbor_lists(const std::filesystem::path& path, std::span<const NeighborList> lists);
std::vector<NeighborList> read_neighbor_lists(const std::filesystem::path& path);

// Runs fn(i) for i in [0, n) on up to `workers` threads, in contiguous blocks.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace synclust
