#include "synclust/simindex.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "synclust/error.hpp"

namespace synclust {

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t threads = std::min<std::size_t>(workers, n);
  const std::size_t block = (n + threads - 1) / threads;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t * block; i < std::min(n, (t + 1) * block); ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

SimIndex SimIndex::build(const Corpus& corpus) {
  if (!corpus.has_embeddings()) fail(ErrorCode::state, "cannot build index: corpus has no embeddings");
  return SimIndex(corpus.embeddings());
}

double SimIndex::similarity(TermId a, TermId b) const {
  if (a >= size() || b >= size()) fail(ErrorCode::index, "term_id out of range for index");
  return dot(snapshot_.row(a), snapshot_.row(b));
}

NeighborList SimIndex::top_k(TermId query, std::size_t k) const {
  return top_k_where(query, k, nullptr);
}

NeighborList SimIndex::top_k_where(TermId query, std::size_t k,
                                   const std::function<bool(TermId)>& keep) const {
  if (query >= size()) {
    fail(ErrorCode::index, "query term_id " + std::to_string(query) + " out of range");
  }
  NeighborList out{query, {}};
  if (k == 0) return out;
  const auto q = snapshot_.row(query);
  std::vector<Neighbor> all;
  all.reserve(size());
  for (TermId j = 0; j < size(); ++j) {
    if (j == query || (keep && !keep(j))) continue;
    all.push_back({j, dot(q, snapshot_.row(j))});
  }
  const auto take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    neighbor_before);
  all.resize(take);
  out.neighbors = std::move(all);
  return out;
}

std::vector<NeighborList> SimIndex::all_top_k(std::size_t k, unsigned workers) const {
  std::vector<NeighborList> out(size());
  parallel_for(size(), workers, [&](std::size_t i) { out[i] = top_k(static_cast<TermId>(i), k); });
  return out;
}

void write_neighbor_lists(std::ostream& out, std::span<const NeighborList> lists) {
  for (const auto& l : lists) {
    nlohmann::json nn = nlohmann::json::array();
    for (const auto& n : l.neighbors) nn.push_back({n.id, n.similarity});
    out << nlohmann::json{{"q", l.query}, {"nn", std::move(nn)}}.dump() << '\n';
  }
}

void write_neighbor_lists(const std::filesystem::path& path, std::span<const NeighborList> lists) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  write_neighbor_lists(out, lists);
}

std::vector<NeighborList> read_neighbor_lists(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::vector<NeighborList> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      NeighborList l{j.at("q").get<TermId>(), {}};
      for (const auto& p : j.at("nn")) l.neighbors.push_back({p.at(0).get<TermId>(), p.at(1).get<double>()});
      out.push_back(std::move(l));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace synclust
