#pragma once

// Slow, direct reference computations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "synclust/birch.hpp"
#include "synclust/corpus.hpp"

namespace oracle {

using synclust::Corpus;
using synclust::TermId;

inline double dot(const Corpus& c, TermId a, TermId b) {
  const auto x = c.embedding(a);
  const auto y = c.embedding(b);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return s;
}

// Every other term ranked by (similarity desc, id asc), filtered, cut at k.
template <typename Keep>
std::vector<std::pair<TermId, double>> top_k(const Corpus& c, TermId q, std::size_t k, Keep keep) {
  std::vector<std::pair<TermId, double>> all;
  for (TermId j = 0; j < c.size(); ++j) {
    if (j != q && keep(j)) all.emplace_back(j, dot(c, q, j));
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

inline std::vector<std::pair<TermId, double>> top_k(const Corpus& c, TermId q, std::size_t k) {
  return top_k(c, q, k, [](TermId) { return true; });
}

// Components by breadth-first search; each sorted, ordered by smallest member.
inline std::vector<std::vector<TermId>> bfs_components(std::size_t n,
                                                       const std::vector<std::pair<TermId, TermId>>& edges) {
  std::vector<std::vector<TermId>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::vector<TermId>> out;
  for (TermId s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<TermId> comp;
    std::queue<TermId> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const TermId u = q.front();
      q.pop();
      comp.push_back(u);
      for (TermId v : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          q.push(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

// All kNN edges above threshold, as an undirected set.
inline std::vector<std::pair<TermId, TermId>> knn_edges(const Corpus& c, std::size_t k, double threshold) {
  std::set<std::pair<TermId, TermId>> edges;
  for (TermId q = 0; q < c.size(); ++q) {
    for (auto [j, s] : top_k(c, q, k)) {
      if (s > threshold) edges.insert({std::min(q, j), std::max(q, j)});
    }
  }
  return {edges.begin(), edges.end()};
}

// Informative sets written straight from their definitions.
struct Sets {
  std::vector<std::size_t> negatives;
  std::vector<std::size_t> positives;
};

inline Sets informative(const std::vector<double>& pos, const std::vector<double>& neg, double eps) {
  Sets s;
  if (!pos.empty()) {
    double lo = pos[0];
    for (double v : pos) lo = std::min(lo, v);
    for (std::size_t j = 0; j < neg.size(); ++j) {
      if (neg[j] > lo - eps) s.negatives.push_back(j);
    }
  }
  if (!neg.empty()) {
    double hi = neg[0];
    for (double v : neg) hi = std::max(hi, v);
    for (std::size_t j = 0; j < pos.size(); ++j) {
      if (pos[j] < hi + eps) s.positives.push_back(j);
    }
  }
  return s;
}

// The loss in long double, summed directly with no stabilization.
struct AnchorSims {
  std::vector<long double> pi;
  std::vector<long double> ni;
};

inline long double ms_loss(const std::vector<AnchorSims>& anchors, long double alpha, long double beta,
                           long double mu) {
  long double total = 0;
  for (const auto& a : anchors) {
    long double sp = 0, sn = 0;
    for (auto s : a.pi) sp += std::exp(-alpha * (s - mu));
    for (auto s : a.ni) sn += std::exp(beta * (s - mu));
    total += std::log1p(sp) / alpha + std::log1p(sn) / beta;
  }
  return total / anchors.size();
}

struct Counts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline double f1_of(const Counts& c) {
  const long double p = c.tp + c.fp ? (long double)c.tp / (c.tp + c.fp) : 0;
  const long double r = c.tp + c.fn ? (long double)c.tp / (c.tp + c.fn) : 0;
  return p + r > 0 ? double(2 * p * r / (p + r)) : 0.0;
}

inline Counts threshold_counts(const std::vector<std::pair<double, bool>>& pairs, double t) {
  Counts c;
  for (auto [s, pos] : pairs) {
    const bool pred = s > t;
    if (pred && pos) ++c.tp;
    else if (pred) ++c.fp;
    else if (pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

// Best F1 over `points` evenly spaced thresholds on [-1, 1].
inline double grid_best_f1(const std::vector<std::pair<double, bool>>& pairs, int points = 10001) {
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    const double t = -1.0 + 2.0 * i / (points - 1);
    best = std::max(best, f1_of(threshold_counts(pairs, t)));
  }
  return best;
}

// Pair confusion counts by enumerating every unordered pair.
inline Counts clustering_counts(const std::vector<std::int64_t>& cluster_of, const Corpus& c) {
  Counts k;
  for (TermId a = 0; a < cluster_of.size(); ++a) {
    for (TermId b = a + 1; b < cluster_of.size(); ++b) {
      const bool pred = cluster_of[a] == cluster_of[b];
      const bool gold = *c.term(a).concept_id == *c.term(b).concept_id;
      if (pred && gold) ++k.tp;
      else if (pred) ++k.fp;
      else if (gold) ++k.fn;
      else ++k.tn;
    }
  }
  return k;
}

inline double clustering_f1(const std::vector<std::vector<TermId>>& clusters, const Corpus& c) {
  std::vector<std::int64_t> of(c.size(), -1);
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (TermId t : clusters[i]) of[t] = static_cast<std::int64_t>(i);
  }
  return f1_of(clustering_counts(of, c));
}

// Largest deviation between each node's stored mean and the mean of the
// member embeddings reachable below it, gathered by walking the tree.
inline double center_deviation(const synclust::BirchTree& tree, const Corpus& c) {
  if (!tree.root()) return 0.0;
  double worst = 0.0;
  std::vector<synclust::NodeId> stack{*tree.root()};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    std::vector<TermId> members;
    std::vector<synclust::NodeId> walk{id};
    while (!walk.empty()) {
      const auto& n = tree.node(walk.back());
      walk.pop_back();
      if (n.leaf) members.insert(members.end(), n.members.begin(), n.members.end());
      else walk.insert(walk.end(), n.children.begin(), n.children.end());
    }
    const auto& node = tree.node(id);
    if (members.size() != node.count || members.empty()) return INFINITY;
    for (std::size_t d = 0; d < c.dim(); ++d) {
      long double mean = 0;
      for (TermId t : members) mean += c.embedding(t)[d];
      mean /= members.size();
      worst = std::max(worst, double(std::fabs(mean - node.sum[d] / node.count)));
    }
    if (!node.leaf) stack.insert(stack.end(), node.children.begin(), node.children.end());
  }
  return worst;
}

}  // namespace oracle
