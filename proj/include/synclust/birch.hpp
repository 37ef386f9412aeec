#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "synclust/corpus.hpp"
#include "synclust/oracle.hpp"
#include "synclust/random.hpp"

namespace synclust {

using NodeId = std::uint32_t;

struct BirchConfig {
  std::size_t branching_factor = 16;
  std::uint64_t seed = 0;
  // Leaves hold one synonym set each and by default grow without bound.
  // When set, a leaf with more than branching_factor members is split like
  // an internal node.
  bool split_oversized_leaves = false;

  void validate() const;
};

struct BirchNode {
  bool leaf = true;
  std::vector<NodeId> children;  // internal nodes
  std::vector<TermId> members;   // leaves
  std::vector<double> sum;       // sum of descendant member embeddings
  std::size_t count = 0;         // number of descendant members
  std::optional<NodeId> parent;

  std::size_t fanout() const noexcept { return leaf ? members.size() : children.size(); }
};

struct QueryRecord {
  TermId term = 0;
  TermId compared = 0;
  bool same = false;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

// Oracle-gated BIRCH tree. A new term descends by nearest node center
// (cosine against sum/count) to a leaf, is compared with one seeded-random
// member of that leaf, and either joins it or becomes a sibling singleton
// leaf. Overfull nodes are split bottom-up. Exactly one oracle query is
// spent per insertion after the first.
class BirchTree {
 public:
  BirchTree(const Corpus& corpus, BirchConfig config);

  // On oracle failure the tree (and its generator state) is left unchanged.
  void insert(TermId term, Oracle& oracle);

  // Splits an overfull node into two with fanouts ceil(c/2) and floor(c/2);
  // the first keeps the node's id. A split root gets a new parent root.
  std::pair<NodeId, NodeId> split_node(NodeId node);

  bool empty() const noexcept { return !root_.has_value(); }
  std::optional<NodeId> root() const noexcept { return root_; }
  const BirchNode& node(NodeId id) const { return nodes_.at(id); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t size() const noexcept { return inserted_.size(); }
  std::size_t height() const;
  const BirchConfig& config() const noexcept { return config_; }
  const std::vector<QueryRecord>& query_log() const noexcept { return query_log_; }

  // Leaf member lists, each sorted, ordered by smallest member.
  std::vector<std::vector<TermId>> leaves() const;

  // Largest absolute component difference between each node's stored
  // center and the mean recomputed from its descendant members.
  double audit_centers() const;

  // Throws contract errors on broken parent links, fanout above the
  // branching factor, empty nodes, or a leaf set that does not partition
  // the inserted terms.
  void check_structure() const;

 private:
  NodeId add_node(BirchNode node);
  NodeId descend(std::span<const float> e) const;
  double center_cosine(NodeId id, std::span<const float> e) const;
  void add_to_path(std::optional<NodeId> from, std::span<const float> e);
  void rebalance(std::optional<NodeId> from);
  std::vector<double> member_vector(TermId term) const;

  const Corpus* corpus_;
  BirchConfig config_;
  Rng rng_;
  std::vector<BirchNode> nodes_;
  std::optional<NodeId> root_;
  std::unordered_set<TermId> inserted_;
  std::vector<QueryRecord> query_log_;
};

// Two-way balanced grouping of `vectors` (node sums or member embeddings).
// The least-similar pair seeds groups 0 and 1; the rest go, most decided
// first, to the nearer seed until that group holds its cap of ceil(c/2)
// (group 0) or floor(c/2) (group 1). Returns a 0/1 label per vector.
std::vector<int> split_groups(std::span<const std::vector<double>> vectors);

struct PartitionClusters {
  std::vector<std::vector<TermId>> clusters;  // leaves, sorted, by smallest member
  std::size_t queries = 0;                    // oracle resolutions, cache included
};

// Inserts the partition's terms in ascending id order into a fresh tree.
PartitionClusters cluster_partition(std::span<const TermId> partition, const Corpus& corpus,
                                    Oracle& oracle, const BirchConfig& config);

}  // namespace synclust
