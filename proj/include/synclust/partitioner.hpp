#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "synclust/corpus.hpp"
#include "synclust/simindex.hpp"

namespace synclust {

// Disjoint cover of [0, n). Each partition is sorted; partitions are ordered
// by their smallest member.
struct PartitionSet {
  std::vector<std::vector<TermId>> partitions;
  std::vector<std::size_t> partition_of;

  std::size_t size() const noexcept { return partitions.size(); }
  friend bool operator==(const PartitionSet&, const PartitionSet&) = default;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

using Edge = std::pair<TermId, TermId>;

PartitionSet components(std::span<const Edge> edges, std::size_t n);

// Undirected edges {a, b} where b is among a's top-k neighbors (or vice
// versa) and the corpus cosine of the pair is strictly above `threshold`.
std::vector<Edge> knn_edges(const Corpus& corpus, const SimIndex& index, std::size_t k,
                            double threshold, unsigned workers = 1);

// Same edge rule over precomputed neighbor lists.
std::vector<Edge> knn_edges(const Corpus& corpus, std::span<const NeighborList> lists, double threshold);

PartitionSet build_partition(const Corpus& corpus, const SimIndex& index, std::size_t k,
                             double threshold, unsigned workers = 1);

// JSON lines {"partition": idx, "terms": [ids]}.
void write_partitions(const std::filesystem::path& path, const PartitionSet& set);
PartitionSet read_partitions(const std::filesystem::path& path, std::size_t n_terms);

}  // namespace synclust
