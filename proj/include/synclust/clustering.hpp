#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synclust/birch.hpp"
#include "synclust/corpus.hpp"
#include "synclust/error.hpp"
#include "synclust/oracle.hpp"
#include "synclust/partitioner.hpp"

namespace synclust {

struct ClusterAssignment {
  std::vector<std::int64_t> cluster_of;       // per term_id, -1 when unassigned
  std::vector<std::vector<TermId>> clusters;  // cluster_id -> sorted members

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

// Dense cluster ids in order of each cluster's smallest member.
ClusterAssignment make_assignment(std::size_t n_terms, std::vector<std::vector<TermId>> clusters);

struct ClusterSummary {
  std::size_t terms = 0;
  std::size_t clusters = 0;
  std::size_t singletons = 0;
  std::size_t max_cluster = 0;
  std::size_t partitions = 0;
  std::size_t queries = 0;
};

ClusterSummary summarize(const ClusterAssignment& assignment);
nlohmann::json to_json(const ClusterSummary& summary);

// TSV term_id <TAB> cluster_id, ascending term_id.
void write_clusters(const std::filesystem::path& path, const ClusterAssignment& assignment);
ClusterAssignment read_clusters(const std::filesystem::path& path, std::size_t n_terms);

struct ClusteringOptions {
  BirchConfig birch;
  unsigned workers = 1;
  std::optional<std::filesystem::path> checkpoint_dir;
  bool resume = false;  // reuse completed partition checkpoints
};

struct PartitionFailure {
  std::size_t partition = 0;
  ErrorCode code = ErrorCode::oracle_unavailable;
  std::string message;
};

struct ClusteringRun {
  ClusterAssignment assignment;  // complete only when failures is empty
  ClusterSummary summary;
  std::vector<PartitionFailure> failures;
  std::size_t resumed_partitions = 0;
};

// Seed of the BIRCH tree for one partition: the run seed mixed with the
// partition's smallest term id, so it does not depend on scheduling.
std::uint64_t partition_seed(std::uint64_t run_seed, TermId smallest_member);

// Clusters every partition independently. A failing partition does not stop
// the others; completed partitions are checkpointed when a directory is set,
// failed ones leave a .partial.json with the leaves built so far.
ClusteringRun run_clustering(const Corpus& corpus, const PartitionSet& partitions, Oracle& oracle,
                             const ClusteringOptions& options);

}  // namespace synclust
