#include "synclust/clustering.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "synclust/random.hpp"

namespace synclust {

namespace fs = std::filesystem;

ClusterAssignment make_assignment(std::size_t n_terms, std::vector<std::vector<TermId>> clusters) {
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::erase_if(clusters, [](const auto& c) { return c.empty(); });
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  ClusterAssignment out;
  out.cluster_of.assign(n_terms, -1);
  for (std::size_t id = 0; id < clusters.size(); ++id) {
    for (auto t : clusters[id]) {
      if (t >= n_terms) fail(ErrorCode::index, "clustered term " + std::to_string(t) + " out of range");
      if (out.cluster_of[t] != -1) fail(ErrorCode::integrity, "term " + std::to_string(t) + " in two clusters");
      out.cluster_of[t] = static_cast<std::int64_t>(id);
    }
  }
  out.clusters = std::move(clusters);
  return out;
}

ClusterSummary summarize(const ClusterAssignment& assignment) {
  ClusterSummary s;
  s.clusters = assignment.clusters.size();
  for (const auto& c : assignment.clusters) {
    s.terms += c.size();
    s.singletons += c.size() == 1;
    s.max_cluster = std::max(s.max_cluster, c.size());
  }
  return s;
}

nlohmann::json to_json(const ClusterSummary& s) {
  return {{"terms", s.terms},           {"clusters", s.clusters}, {"singletons", s.singletons},
          {"max_cluster", s.max_cluster}, {"partitions", s.partitions}, {"queries", s.queries}};
}

void write_clusters(const fs::path& path, const ClusterAssignment& assignment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  for (std::size_t t = 0; t < assignment.cluster_of.size(); ++t) {
    if (assignment.cluster_of[t] >= 0) out << t << '\t' << assignment.cluster_of[t] << '\n';
  }
}

ClusterAssignment read_clusters(const fs::path& path, std::size_t n_terms) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::map<std::int64_t, std::vector<TermId>> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::int64_t term = -1;
    std::int64_t cluster = -1;
    if (!(row >> term >> cluster) || term < 0 || cluster < 0) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": expected term_id <TAB> cluster_id");
    }
    by_id[cluster].push_back(static_cast<TermId>(term));
  }
  std::vector<std::vector<TermId>> clusters;
  for (auto& [id, members] : by_id) clusters.push_back(std::move(members));
  return make_assignment(n_terms, std::move(clusters));
}

std::uint64_t partition_seed(std::uint64_t run_seed, TermId smallest_member) {
  return mix_seed(run_seed, smallest_member);
}

namespace {

fs::path checkpoint_path(const fs::path& dir, std::size_t idx, const char* suffix) {
  char name[64];
  std::snprintf(name, sizeof name, "partition_%06zu%s", idx, suffix);
  return dir / name;
}

void write_atomically(const fs::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + tmp.string());
    out << content;
    if (!out) fail(ErrorCode::io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<PartitionClusters> load_checkpoint(const fs::path& path, std::span<const TermId> terms) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("terms").get<std::vector<TermId>>() != std::vector<TermId>(terms.begin(), terms.end())) {
      return std::nullopt;
    }
    return PartitionClusters{j.at("clusters").get<std::vector<std::vector<TermId>>>(),
                             j.at("queries").get<std::size_t>()};
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

}  // namespace

ClusteringRun run_clustering(const Corpus& corpus, const PartitionSet& partitions, Oracle& oracle,
                             const ClusteringOptions& options) {
  options.birch.validate();
  if (options.checkpoint_dir) fs::create_directories(*options.checkpoint_dir);

  const auto n_parts = partitions.partitions.size();
  std::vector<std::optional<PartitionClusters>> results(n_parts);
  ClusteringRun run;

  std::vector<std::size_t> todo;
  for (std::size_t p = 0; p < n_parts; ++p) {
    if (partitions.partitions[p].empty()) fail(ErrorCode::integrity, "partition " + std::to_string(p) + " is empty");
    if (options.resume && options.checkpoint_dir) {
      results[p] = load_checkpoint(checkpoint_path(*options.checkpoint_dir, p, ".json"), partitions.partitions[p]);
      if (results[p]) {
        ++run.resumed_partitions;
        continue;
      }
    }
    todo.push_back(p);
  }

  std::mutex failure_mutex;
  auto work = [&](std::size_t p) {
    const auto& terms = partitions.partitions[p];
    BirchConfig cfg = options.birch;
    cfg.seed = partition_seed(options.birch.seed, *std::min_element(terms.begin(), terms.end()));
    std::vector<TermId> order(terms.begin(), terms.end());
    std::sort(order.begin(), order.end());
    BirchTree tree(corpus, cfg);
    try {
      for (auto t : order) tree.insert(t, oracle);
    } catch (const Error& e) {
      if (options.checkpoint_dir) {
        nlohmann::json partial{{"partition", p},        {"terms", order},          {"inserted", tree.size()},
                               {"clusters", tree.leaves()}, {"error", to_string(e.code())}, {"message", e.what()}};
        write_atomically(checkpoint_path(*options.checkpoint_dir, p, ".partial.json"), partial.dump() + "\n");
      }
      std::lock_guard lock(failure_mutex);
      run.failures.push_back({p, e.code(), e.what()});
      return;
    }
    PartitionClusters done{tree.leaves(), tree.query_log().size()};
    if (options.checkpoint_dir) {
      nlohmann::json j{{"partition", p}, {"terms", order}, {"clusters", done.clusters}, {"queries", done.queries}};
      write_atomically(checkpoint_path(*options.checkpoint_dir, p, ".json"), j.dump() + "\n");
      fs::remove(checkpoint_path(*options.checkpoint_dir, p, ".partial.json"));
    }
    results[p] = std::move(done);
  };

  // Largest partitions first; workers pull from a shared cursor.
  std::stable_sort(todo.begin(), todo.end(), [&](std::size_t a, std::size_t b) {
    return partitions.partitions[a].size() > partitions.partitions[b].size();
  });
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < todo.size(); i = cursor++) work(todo[i]);
  };
  const auto threads = std::min<std::size_t>(std::max(1u, options.workers), std::max<std::size_t>(todo.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::sort(run.failures.begin(), run.failures.end(),
            [](const auto& a, const auto& b) { return a.partition < b.partition; });
  std::vector<std::vector<TermId>> clusters;
  std::size_t queries = 0;
  for (auto& r : results) {
    if (!r) continue;
    queries += r->queries;
    for (auto& c : r->clusters) clusters.push_back(std::move(c));
  }
  run.assignment = make_assignment(corpus.size(), std::move(clusters));
  run.summary = summarize(run.assignment);
  run.summary.partitions = n_parts;
  run.summary.queries = queries;
  return run;
}

}  // namespace synclust
