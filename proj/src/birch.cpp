#include "synclust/birch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "synclust/error.hpp"

namespace synclust {

namespace {

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine_of(std::span<const double> a, std::span<const double> b) {
  const double na = norm_of(a);
  const double nb = norm_of(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / (na * nb);
}

}  // namespace

void BirchConfig::validate() const {
  if (branching_factor < 2) fail(ErrorCode::config, "branching factor must be at least 2");
}

std::vector<int> split_groups(std::span<const std::vector<double>> vectors) {
  const auto c = vectors.size();
  if (c < 2) fail(ErrorCode::contract, "split needs at least two entries");

  std::size_t seed_a = 0;
  std::size_t seed_b = 1;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i + 1; j < c; ++j) {
      const double s = cosine_of(vectors[i], vectors[j]);
      if (s < lowest) {
        lowest = s;
        seed_a = i;
        seed_b = j;
      }
    }
  }

  std::vector<int> group(c, -1);
  const std::array<std::size_t, 2> cap = {(c + 1) / 2, c / 2};
  std::array<std::size_t, 2> filled = {1, 1};
  group[seed_a] = 0;
  group[seed_b] = 1;

  std::vector<std::size_t> rest;
  std::vector<double> margin(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    if (k == seed_a || k == seed_b) continue;
    margin[k] = cosine_of(vectors[k], vectors[seed_a]) - cosine_of(vectors[k], vectors[seed_b]);
    rest.push_back(k);
  }
  std::stable_sort(rest.begin(), rest.end(),
                   [&](std::size_t x, std::size_t y) { return std::abs(margin[x]) > std::abs(margin[y]); });
  for (auto k : rest) {
    int g = margin[k] >= 0.0 ? 0 : 1;
    if (filled[g] >= cap[g]) g = 1 - g;
    group[k] = g;
    ++filled[g];
  }
  return group;
}

BirchTree::BirchTree(const Corpus& corpus, BirchConfig config)
    : corpus_(&corpus), config_(config), rng_(config.seed) {
  config_.validate();
  if (!corpus.has_embeddings()) fail(ErrorCode::state, "BIRCH needs a corpus with embeddings");
}

NodeId BirchTree::add_node(BirchNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::vector<double> BirchTree::member_vector(TermId term) const {
  const auto e = corpus_->embedding(term);
  return {e.begin(), e.end()};
}

double BirchTree::center_cosine(NodeId id, std::span<const float> e) const {
  const auto& sum = nodes_[id].sum;
  const double n = norm_of(sum);
  if (n == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += e[i] * sum[i];
  return s / n;
}

NodeId BirchTree::descend(std::span<const float> e) const {
  NodeId at = *root_;
  while (!nodes_[at].leaf) {
    const auto& children = nodes_[at].children;
    NodeId best = children.front();
    double best_sim = center_cosine(best, e);
    for (std::size_t i = 1; i < children.size(); ++i) {
      const double s = center_cosine(children[i], e);
      if (s > best_sim || (s == best_sim && children[i] < best)) {
        best = children[i];
        best_sim = s;
      }
    }
    at = best;
  }
  return at;
}

void BirchTree::add_to_path(std::optional<NodeId> from, std::span<const float> e) {
  for (auto at = from; at; at = nodes_[*at].parent) {
    auto& n = nodes_[*at];
    for (std::size_t i = 0; i < e.size(); ++i) n.sum[i] += e[i];
    ++n.count;
  }
}

void BirchTree::insert(TermId term, Oracle& oracle) {
  const auto e = corpus_->embedding(term);
  if (inserted_.contains(term)) fail(ErrorCode::contract, "term " + std::to_string(term) + " already inserted");
  if (std::abs(std::sqrt(dot(e, e)) - 1.0) > 1e-4) {
    fail(ErrorCode::contract, "embedding of term " + std::to_string(term) + " is not unit-norm");
  }

  if (!root_) {
    BirchNode leaf;
    leaf.members = {term};
    leaf.sum.assign(e.begin(), e.end());
    leaf.count = 1;
    root_ = add_node(std::move(leaf));
    inserted_.insert(term);
    return;
  }

  const NodeId leaf_id = descend(e);
  const auto saved_rng = rng_;
  const auto& members = nodes_[leaf_id].members;
  const TermId compared = members[uniform_index(rng_, members.size())];

  const auto& a = corpus_->term(term);
  const auto& b = corpus_->term(compared);
  OracleVerdict verdict;
  try {
    verdict = oracle.judge(OracleTerm{a.text, a.concept_id ? std::optional<std::string_view>(*a.concept_id) : std::nullopt},
                           OracleTerm{b.text, b.concept_id ? std::optional<std::string_view>(*b.concept_id) : std::nullopt});
  } catch (...) {
    rng_ = saved_rng;
    throw;
  }
  query_log_.push_back({term, compared, verdict.same});
  inserted_.insert(term);

  if (verdict.same) {
    nodes_[leaf_id].members.push_back(term);
    add_to_path(leaf_id, e);
    if (config_.split_oversized_leaves) rebalance(leaf_id);
    return;
  }

  if (!nodes_[leaf_id].parent) {
    BirchNode root;
    root.leaf = false;
    root.children = {leaf_id};
    root.sum = nodes_[leaf_id].sum;
    root.count = nodes_[leaf_id].count;
    const auto r = add_node(std::move(root));
    nodes_[leaf_id].parent = r;
    root_ = r;
  }
  const NodeId parent = *nodes_[leaf_id].parent;
  BirchNode fresh;
  fresh.members = {term};
  fresh.sum.assign(e.size(), 0.0);
  fresh.parent = parent;
  const auto fresh_id = add_node(std::move(fresh));
  nodes_[parent].children.push_back(fresh_id);
  add_to_path(fresh_id, e);
  rebalance(parent);
}

void BirchTree::rebalance(std::optional<NodeId> from) {
  for (auto at = from; at;) {
    const auto& n = nodes_[*at];
    if (n.fanout() <= config_.branching_factor) break;
    if (n.leaf && !config_.split_oversized_leaves) break;
    const auto parent = n.parent;
    split_node(*at);
    if (!parent) break;  // the split grew a new two-child root
    at = parent;
  }
}

std::pair<NodeId, NodeId> BirchTree::split_node(NodeId id) {
  if (id >= nodes_.size()) fail(ErrorCode::index, "node " + std::to_string(id) + " does not exist");
  const auto c = nodes_[id].fanout();
  if (c <= config_.branching_factor) {
    fail(ErrorCode::contract, "node " + std::to_string(id) + " has " + std::to_string(c) +
                                  " entries, not more than the branching factor");
  }
  const bool leaf = nodes_[id].leaf;

  std::vector<std::vector<double>> vectors;
  vectors.reserve(c);
  if (leaf) {
    for (auto m : nodes_[id].members) vectors.push_back(member_vector(m));
  } else {
    for (auto ch : nodes_[id].children) vectors.push_back(nodes_[ch].sum);
  }
  const auto group = split_groups(vectors);

  const auto dim = corpus_->dim();
  BirchNode second;
  second.leaf = leaf;
  second.parent = nodes_[id].parent;
  second.sum.assign(dim, 0.0);
  const NodeId other = add_node(std::move(second));

  auto& first = nodes_[id];
  auto& split = nodes_[other];
  first.sum.assign(dim, 0.0);
  first.count = 0;
  if (leaf) {
    std::vector<TermId> keep;
    for (std::size_t k = 0; k < c; ++k) (group[k] == 0 ? keep : split.members).push_back(first.members[k]);
    first.members = std::move(keep);
  } else {
    std::vector<NodeId> keep;
    for (std::size_t k = 0; k < c; ++k) (group[k] == 0 ? keep : split.children).push_back(first.children[k]);
    first.children = std::move(keep);
    for (auto ch : split.children) nodes_[ch].parent = other;
  }
  for (auto* n : {&first, &split}) {
    if (leaf) {
      for (auto m : n->members) {
        const auto e = corpus_->embedding(m);
        for (std::size_t d = 0; d < dim; ++d) n->sum[d] += e[d];
      }
      n->count = n->members.size();
    } else {
      for (auto ch : n->children) {
        for (std::size_t d = 0; d < dim; ++d) n->sum[d] += nodes_[ch].sum[d];
        n->count += nodes_[ch].count;
      }
    }
  }

  if (!first.parent) {
    BirchNode root;
    root.leaf = false;
    root.children = {id, other};
    root.sum.assign(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) root.sum[d] = nodes_[id].sum[d] + nodes_[other].sum[d];
    root.count = nodes_[id].count + nodes_[other].count;
    const auto r = add_node(std::move(root));
    nodes_[id].parent = r;
    nodes_[other].parent = r;
    root_ = r;
  } else {
    auto& siblings = nodes_[*nodes_[id].parent].children;
    siblings.insert(std::find(siblings.begin(), siblings.end(), id) + 1, other);
  }
  return {id, other};
}

std::size_t BirchTree::height() const {
  if (!root_) return 0;
  std::size_t h = 1;
  for (NodeId at = *root_; !nodes_[at].leaf; at = nodes_[at].children.front()) ++h;
  return h;
}

std::vector<std::vector<TermId>> BirchTree::leaves() const {
  std::vector<std::vector<TermId>> out;
  for (const auto& n : nodes_) {
    if (!n.leaf || n.members.empty()) continue;
    auto m = n.members;
    std::sort(m.begin(), m.end());
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return out;
}

double BirchTree::audit_centers() const {
  if (!root_) return 0.0;
  const auto dim = corpus_->dim();
  double worst = 0.0;
  // Post-order: recompute every node's member sum from scratch.
  std::function<std::pair<std::vector<double>, std::size_t>(NodeId)> visit = [&](NodeId id) {
    const auto& n = nodes_[id];
    std::vector<double> sum(dim, 0.0);
    std::size_t count = 0;
    if (n.leaf) {
      for (auto m : n.members) {
        const auto e = corpus_->embedding(m);
        for (std::size_t d = 0; d < dim; ++d) sum[d] += e[d];
        ++count;
      }
    } else {
      for (auto ch : n.children) {
        auto [s, c] = visit(ch);
        for (std::size_t d = 0; d < dim; ++d) sum[d] += s[d];
        count += c;
      }
    }
    if (count != n.count || count == 0) {
      worst = std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t d = 0; d < dim; ++d) {
        worst = std::max(worst, std::abs(n.sum[d] / n.count - sum[d] / count));
      }
    }
    return std::pair{std::move(sum), count};
  };
  visit(*root_);
  return worst;
}

void BirchTree::check_structure() const {
  if (!root_) {
    if (!inserted_.empty()) fail(ErrorCode::contract, "terms inserted but tree has no root");
    return;
  }
  if (nodes_[*root_].parent) fail(ErrorCode::contract, "root has a parent");
  std::vector<TermId> seen;
  std::function<void(NodeId, std::size_t)> visit = [&](NodeId id, std::size_t depth) {
    const auto& n = nodes_[id];
    if (n.fanout() == 0) fail(ErrorCode::contract, "node " + std::to_string(id) + " is empty");
    if (n.leaf) {
      if (config_.split_oversized_leaves && n.fanout() > config_.branching_factor) {
        fail(ErrorCode::contract, "leaf " + std::to_string(id) + " exceeds the branching factor");
      }
      if (depth != height()) fail(ErrorCode::contract, "leaf " + std::to_string(id) + " at unbalanced depth");
      seen.insert(seen.end(), n.members.begin(), n.members.end());
      return;
    }
    if (n.fanout() > config_.branching_factor) {
      fail(ErrorCode::contract, "node " + std::to_string(id) + " exceeds the branching factor");
    }
    for (auto ch : n.children) {
      if (nodes_[ch].parent != id) fail(ErrorCode::contract, "node " + std::to_string(ch) + " has a stale parent link");
      visit(ch, depth + 1);
    }
  };
  visit(*root_, 1);
  std::sort(seen.begin(), seen.end());
  std::vector<TermId> expected(inserted_.begin(), inserted_.end());
  std::sort(expected.begin(), expected.end());
  if (seen != expected) fail(ErrorCode::contract, "leaves do not partition the inserted terms");
}

PartitionClusters cluster_partition(std::span<const TermId> partition, const Corpus& corpus, Oracle& oracle,
                                    const BirchConfig& config) {
  if (partition.empty()) fail(ErrorCode::contract, "cannot cluster an empty partition");
  std::vector<TermId> order(partition.begin(), partition.end());
  std::sort(order.begin(), order.end());
  BirchTree tree(corpus, config);
  for (auto t : order) tree.insert(t, oracle);
  return {tree.leaves(), tree.query_log().size()};
}

}  // namespace synclust
