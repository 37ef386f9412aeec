#include "synclust/partitioner.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "synclust/error.hpp"

namespace synclust {

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
  std::size_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) x = std::exchange(parent_[x], root);
  return root;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  return true;
}

PartitionSet components(std::span<const Edge> edges, std::size_t n) {
  UnionFind uf(n);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) {
      fail(ErrorCode::index, "edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                 ") has an endpoint outside [0, " + std::to_string(n) + ")");
    }
    uf.unite(a, b);
  }
  // Scanning ids in ascending order yields partitions ordered by smallest
  // member, each already sorted.
  PartitionSet out;
  out.partition_of.assign(n, 0);
  std::vector<std::size_t> slot_of_root(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = uf.find(i);
    if (slot_of_root[r] == static_cast<std::size_t>(-1)) {
      slot_of_root[r] = out.partitions.size();
      out.partitions.emplace_back();
    }
    out.partition_of[i] = slot_of_root[r];
    out.partitions[slot_of_root[r]].push_back(static_cast<TermId>(i));
  }
  return out;
}

std::vector<Edge> knn_edges(const Corpus& corpus, const SimIndex& index, std::size_t k,
                            double threshold, unsigned workers) {
  if (k == 0) fail(ErrorCode::config, "partitioner k must be at least 1");
  if (!(threshold >= -1.0 && threshold <= 1.0)) fail(ErrorCode::config, "partitioner threshold must lie in [-1, 1]");
  if (index.size() != corpus.size()) fail(ErrorCode::state, "index and corpus sizes differ");

  std::vector<std::vector<Edge>> per_term(corpus.size());
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    const auto q = static_cast<TermId>(i);
    for (const auto& n : index.top_k(q, k).neighbors) {
      // Re-check against the corpus embeddings; the index may be approximate or stale.
      if (corpus.cosine(q, n.id) > threshold) per_term[i].emplace_back(std::min(q, n.id), std::max(q, n.id));
    }
  });
  std::vector<Edge> edges;
  for (auto& v : per_term) edges.insert(edges.end(), v.begin(), v.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<Edge> knn_edges(const Corpus& corpus, std::span<const NeighborList> lists, double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) fail(ErrorCode::config, "partitioner threshold must lie in [-1, 1]");
  std::vector<Edge> edges;
  for (const auto& l : lists) {
    for (const auto& n : l.neighbors) {
      if (corpus.cosine(l.query, n.id) > threshold) edges.emplace_back(std::min(l.query, n.id), std::max(l.query, n.id));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

PartitionSet build_partition(const Corpus& corpus, const SimIndex& index, std::size_t k,
                             double threshold, unsigned workers) {
  const auto edges = knn_edges(corpus, index, k, threshold, workers);
  return components(edges, corpus.size());
}

void write_partitions(const std::filesystem::path& path, const PartitionSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  for (std::size_t i = 0; i < set.partitions.size(); ++i) {
    out << nlohmann::json{{"partition", i}, {"terms", set.partitions[i]}}.dump() << '\n';
  }
}

PartitionSet read_partitions(const std::filesystem::path& path, std::size_t n_terms) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  PartitionSet out;
  constexpr auto unset = static_cast<std::size_t>(-1);
  out.partition_of.assign(n_terms, unset);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, where + ": " + e.what());
    }
    if (!j.contains("partition") || !j.contains("terms") || j["partition"] != out.partitions.size()) {
      fail(ErrorCode::parse, where + ": expected {\"partition\": " + std::to_string(out.partitions.size()) +
                                 ", \"terms\": [...]}");
    }
    auto terms = j["terms"].get<std::vector<TermId>>();
    for (auto t : terms) {
      if (t >= n_terms) fail(ErrorCode::index, where + ": term " + std::to_string(t) + " out of range");
      if (out.partition_of[t] != unset) fail(ErrorCode::integrity, where + ": term " + std::to_string(t) + " in two partitions");
      out.partition_of[t] = out.partitions.size();
    }
    out.partitions.push_back(std::move(terms));
  }
  for (std::size_t t = 0; t < n_terms; ++t) {
    if (out.partition_of[t] == unset) fail(ErrorCode::integrity, path.string() + ": term " + std::to_string(t) + " not covered");
  }
  return out;
}

}  // namespace synclust
