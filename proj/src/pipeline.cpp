#include "synclust/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "synclust/clustering.hpp"
#include "synclust/contrastive.hpp"
#include "synclust/error.hpp"
#include "synclust/eval.hpp"
#include "synclust/partitioner.hpp"
#include "synclust/random.hpp"
#include "synclust/remote_oracle.hpp"
#include "synclust/simindex.hpp"

namespace synclust {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCorpusFile = "corpus.tsv";
constexpr const char* kEmbeddingsFile = "embeddings.bin";
constexpr const char* kOptimizedFile = "embeddings.optimized.bin";

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
  return buf;
}

nlohmann::json describe_files(const fs::path& dir, std::initializer_list<fs::path> names) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& name : names) {
    const auto p = name.is_absolute() ? name : dir / name;
    if (!fs::exists(p) || !fs::is_regular_file(p)) continue;
    out[name.string()] = {{"bytes", fs::file_size(p)}, {"fnv1a64", file_digest(p)}};
  }
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_manifest(Stage stage, const PipelineConfig& config, const nlohmann::json& inputs,
                    const nlohmann::json& outputs, const nlohmann::json& summary, const nlohmann::json& extra = {}) {
  nlohmann::json m{{"stage", to_string(stage)},
                   {"version", SYNCLUST_VERSION},
                   {"config_hash", config.hash()},
                   {"config", config.entries()},
                   {"seeds",
                    {{"optimizer", config.get_uint("optimizer.seed")},
                     {"birch", config.get_uint("birch.seed")},
                     {"oracle", config.get_uint("oracle.seed")},
                     {"eval_anchors", config.get_uint("eval.anchor_seed")}}},
                   {"inputs", inputs},
                   {"outputs", outputs},
                   {"summary", summary}};
  for (auto it = extra.begin(); extra.is_object() && it != extra.end(); ++it) m[it.key()] = it.value();
  write_json(config.output_dir() / (std::string("manifest_") + to_string(stage) + ".json"), m);
}

fs::path require(const fs::path& p, const char* what) {
  if (p.empty()) fail(ErrorCode::config, std::string(what) + " is not set");
  if (!fs::exists(p)) fail(ErrorCode::io, std::string(what) + " " + p.string() + " does not exist (run the earlier stage first)");
  return p;
}

fs::path embeddings_for(const PipelineConfig& config) {
  return config.output_dir() / (config.get("pipeline.embeddings") == "optimized" ? kOptimizedFile : kEmbeddingsFile);
}

Corpus load_stage_corpus(const PipelineConfig& config) {
  const auto dir = config.output_dir();
  auto corpus = ingest_terms(require(dir / kCorpusFile, "ingested corpus"));
  return attach_embeddings(corpus, require(embeddings_for(config), "embedding file"));
}

nlohmann::json stage_ingest(const PipelineConfig& config) {
  const auto dir = config.output_dir();
  const fs::path terms_path = require(config.get("paths.terms"), "paths.terms");
  const fs::path emb_path = require(config.get("paths.embeddings"), "paths.embeddings");
  const auto options = config.ingest_options();
  auto corpus = ingest_terms(terms_path, options);
  auto raw = read_embeddings(emb_path);

  std::size_t dropped = 0;
  if (options.filter_long_terms) {
    const auto unfiltered = ingest_terms(terms_path, IngestOptions{}).size();
    dropped = unfiltered - corpus.size();
    if (raw.rows() == unfiltered && dropped > 0) {
      std::vector<std::size_t> keep;
      for (const auto& t : corpus.terms()) keep.push_back(t.source_row);
      raw = raw.select_rows(keep);
    }
  }
  corpus = attach_embeddings(corpus, std::move(raw));

  fs::create_directories(dir);
  write_terms(dir / kCorpusFile, corpus);
  write_embeddings(dir / kEmbeddingsFile, corpus.embeddings());

  nlohmann::json summary{{"terms", corpus.size()},
                         {"dropped_long_terms", dropped},
                         {"concepts", corpus.concept_index().size()},
                         {"dim", corpus.dim()}};
  write_manifest(Stage::ingest, config, describe_files(dir, {terms_path, emb_path}),
                 describe_files(dir, {kCorpusFile, kEmbeddingsFile}), summary);
  return summary;
}

nlohmann::json stage_optimize(const PipelineConfig& config) {
  const auto dir = config.output_dir();
  auto corpus = ingest_terms(require(dir / kCorpusFile, "ingested corpus"));
  corpus = attach_embeddings(corpus, require(dir / kEmbeddingsFile, "ingested embeddings"));
  auto result = optimize_embeddings(corpus, config.optimizer());
  write_embeddings(dir / kOptimizedFile, result.embeddings);
  write_loss_trace(dir / "loss_trace.csv", result.loss_trace);

  auto mean = [&](std::size_t from, std::size_t to) {
    to = std::min(to, result.loss_trace.size());
    if (from >= to) return 0.0;
    return std::accumulate(result.loss_trace.begin() + from, result.loss_trace.begin() + to, 0.0) / (to - from);
  };
  const auto n = result.loss_trace.size();
  const auto window = std::min<std::size_t>(20, n);
  nlohmann::json summary{{"steps", n},
                         {"index_builds", result.index_builds},
                         {"leading_mean_loss", mean(0, window)},
                         {"trailing_mean_loss", mean(n - window, n)}};
  write_manifest(Stage::optimize, config, describe_files(dir, {kCorpusFile, kEmbeddingsFile}),
                 describe_files(dir, {kOptimizedFile, "loss_trace.csv"}), summary);
  return summary;
}

nlohmann::json stage_partition(const PipelineConfig& config) {
  const auto dir = config.output_dir();
  const auto corpus = load_stage_corpus(config);
  const auto index = SimIndex::build(corpus);
  const auto k = config.get_uint("partitioner.k");
  const auto threshold = config.get_double("partitioner.threshold");
  const auto lists = index.all_top_k(k, config.workers());
  write_neighbor_lists(dir / "neighbors.jsonl", lists);
  const auto edges = knn_edges(corpus, lists, threshold);
  const auto parts = components(edges, corpus.size());
  write_partitions(dir / "partitions.jsonl", parts);

  std::size_t largest = 0;
  std::size_t singletons = 0;
  for (const auto& p : parts.partitions) {
    largest = std::max(largest, p.size());
    singletons += p.size() == 1;
  }
  nlohmann::json summary{{"terms", corpus.size()},   {"edges", edges.size()},
                         {"partitions", parts.size()}, {"largest_partition", largest},
                         {"singleton_partitions", singletons}};
  write_manifest(Stage::partition, config, describe_files(dir, {kCorpusFile, embeddings_for(config).filename()}),
                 describe_files(dir, {"neighbors.jsonl", "partitions.jsonl"}), summary);
  return summary;
}

nlohmann::json budget_json(const OracleBudget& b) {
  nlohmann::json j{{"queries_issued", b.queries_issued}, {"cache_hits", b.cache_hits}};
  j["limit"] = b.limit ? nlohmann::json(*b.limit) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json stage_cluster(const PipelineConfig& config, const StageFlags& flags) {
  const auto dir = config.output_dir();
  const auto corpus = load_stage_corpus(config);
  const auto parts = read_partitions(require(dir / "partitions.jsonl", "partition file"), corpus.size());
  auto oracle = make_oracle(config);

  ClusteringOptions options;
  options.birch = config.birch();
  options.workers = config.workers();
  options.checkpoint_dir = dir / "checkpoints";
  options.resume = flags.resume;
  if (!flags.resume && fs::exists(*options.checkpoint_dir)) fs::remove_all(*options.checkpoint_dir);

  auto run = run_clustering(corpus, parts, *oracle, options);
  const auto budget = oracle->budget();

  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : run.failures) {
    failures.push_back({{"partition", f.partition}, {"error", to_string(f.code)}, {"message", f.message}});
  }
  if (!run.failures.empty()) {
    nlohmann::json summary{{"failed_partitions", run.failures.size()}, {"partitions", parts.size()}};
    write_manifest(Stage::cluster, config, describe_files(dir, {kCorpusFile, "partitions.jsonl"}), nlohmann::json::object(),
                   summary, {{"budget", budget_json(budget)}, {"failures", failures}});
    const auto& first = run.failures.front();
    fail(first.code, std::to_string(run.failures.size()) + " of " + std::to_string(parts.size()) +
                         " partitions failed (completed ones are checkpointed; rerun with --resume); partition " +
                         std::to_string(first.partition) + ": " + first.message);
  }

  write_clusters(dir / "clusters.tsv", run.assignment);
  auto summary = to_json(run.summary);
  if (corpus.fully_labeled() && !corpus.empty()) {
    const auto report = score_clustering(run.assignment, corpus);
    summary["pairwise"] = {{"precision", report.precision}, {"recall", report.recall}, {"f1", report.f1}};
  }
  write_json(dir / "cluster_summary.json", summary);
  write_manifest(Stage::cluster, config, describe_files(dir, {kCorpusFile, embeddings_for(config).filename(), "partitions.jsonl"}),
                 describe_files(dir, {"clusters.tsv", "cluster_summary.json"}), summary,
                 {{"budget", budget_json(budget)}, {"resumed_partitions", run.resumed_partitions}});
  return summary;
}

nlohmann::json stage_eval(const PipelineConfig& config) {
  const auto dir = config.output_dir();
  const auto corpus = load_stage_corpus(config);
  nlohmann::json summary = nlohmann::json::object();
  std::vector<fs::path> outputs;

  if (fs::exists(dir / "clusters.tsv")) {
    const auto assignment = read_clusters(dir / "clusters.tsv", corpus.size());
    const auto report = score_clustering(assignment, corpus);
    write_json(dir / "eval_clusters.json", to_json(report));
    summary["clusters"] = to_json(report);
    outputs.push_back("eval_clusters.json");
  }

  const auto& threshold_text = config.get("eval.threshold");
  auto score = [&](const PairSet& pairs) {
    if (threshold_text.empty()) return best_f1_sweep(pairs, corpus);
    double t = 0.0;
    try {
      t = std::stod(threshold_text);
    } catch (const std::exception&) {
      fail(ErrorCode::config, "eval.threshold: '" + threshold_text + "' is not a number");
    }
    return score_at_threshold(pairs, corpus, t);
  };

  if (const fs::path pairs_path = config.get("eval.pairs"); !pairs_path.empty()) {
    const auto pairs = read_pairs(require(pairs_path, "eval.pairs"), corpus.size());
    const auto report = score(pairs);
    write_json(dir / "eval_pairs.json", to_json(report));
    summary["pairs"] = to_json(report);
    outputs.push_back("eval_pairs.json");
  }

  if (config.get_bool("eval.build_hard_negatives")) {
    const auto index = SimIndex::build(corpus);
    const auto anchors = choose_concept_anchors(corpus, config.get_uint("eval.anchor_seed"));
    const auto pairs = build_hard_negative_set(corpus, index, anchors, config.get_uint("eval.hard_negative_neighbors"));
    write_pairs(dir / "pairs_hard_negative.tsv", pairs);
    auto report = to_json(score(pairs));
    std::size_t positives = 0;
    for (const auto& p : pairs.pairs) positives += p.positive;
    report["pair_counts"] = {{"positive", positives}, {"negative", pairs.pairs.size() - positives}};
    write_json(dir / "eval_hard_negative.json", report);
    summary["hard_negative"] = report;
    outputs.push_back("pairs_hard_negative.tsv");
    outputs.push_back("eval_hard_negative.json");
  }

  if (summary.empty()) {
    fail(ErrorCode::config, "nothing to evaluate: no clusters.tsv, eval.pairs unset, eval.build_hard_negatives false");
  }
  nlohmann::json out_files = nlohmann::json::object();
  for (const auto& o : outputs) out_files.update(describe_files(dir, {o}));
  write_manifest(Stage::eval, config, describe_files(dir, {kCorpusFile, embeddings_for(config).filename(), "clusters.tsv"}),
                 out_files, summary);
  return summary;
}

}  // namespace

Stage parse_stage(std::string_view name) {
  for (auto s : {Stage::ingest, Stage::optimize, Stage::partition, Stage::cluster, Stage::eval}) {
    if (name == to_string(s)) return s;
  }
  fail(ErrorCode::config, "unknown stage '" + std::string(name) + "'");
}

const char* to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::optimize: return "optimize";
    case Stage::partition: return "partition";
    case Stage::cluster: return "cluster";
    case Stage::eval: return "eval";
  }
  return "unknown";
}

std::unique_ptr<Oracle> make_oracle(const PipelineConfig& config) {
  const auto& kind = config.get("oracle.kind");
  std::unique_ptr<OracleBackend> backend;
  if (kind == "mock") {
    backend = std::make_unique<MockOracle>(MockOracleConfig{config.get_double("oracle.agreement_rate"),
                                                            config.get_uint("oracle.seed")});
  } else if (kind == "heuristic") {
    backend = std::make_unique<HeuristicOracle>();
  } else {
    std::unique_ptr<Transport> transport;
    if (const auto& fixture = config.get("oracle.replay_fixture"); !fixture.empty()) {
      transport = std::make_unique<ReplayTransport>(fixture);
    } else {
      const auto& endpoint = config.get("oracle.endpoint");
      if (endpoint.empty()) fail(ErrorCode::config, "oracle.kind = remote needs oracle.endpoint");
      std::optional<std::string> key;
      if (const char* v = std::getenv(config.get("oracle.api_key_env").c_str()); v && *v) key = v;
      transport = std::make_unique<HttpTransport>(
          endpoint, key, std::chrono::seconds(config.get_uint("oracle.timeout_seconds")));
    }
    RemoteConfig rc;
    rc.model = config.get("oracle.model");
    rc.max_in_flight = config.get_uint("oracle.max_in_flight");
    rc.requests_per_second = config.get_double("oracle.requests_per_second");
    backend = std::make_unique<RemoteOracle>(std::make_shared<RemoteClient>(std::move(transport), rc));
  }

  std::optional<std::uint64_t> limit;
  if (const auto l = config.get_uint("oracle.budget_limit"); l > 0) limit = l;
  fs::path cache = config.get("oracle.cache_path");
  if (cache.empty()) cache = config.output_dir() / "oracle_cache.jsonl";
  return std::make_unique<Oracle>(std::move(backend), limit, cache);
}

nlohmann::json run_stage(Stage stage, const PipelineConfig& config, const StageFlags& flags) {
  try {
    switch (stage) {
      case Stage::ingest: return stage_ingest(config);
      case Stage::optimize: return stage_optimize(config);
      case Stage::partition: return stage_partition(config);
      case Stage::cluster: return stage_cluster(config, flags);
      case Stage::eval: return stage_eval(config);
    }
  } catch (const Error& e) {
    throw Error(e.code(), std::string(to_string(stage)) + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::io, std::string(to_string(stage)) + ": " + e.what());
  }
  fail(ErrorCode::config, "unknown stage");
}

nlohmann::json run_synth(const SynthConfig& config, const fs::path& out_dir) {
  const auto corpus = synthesize_corpus(config);
  fs::create_directories(out_dir);
  write_terms(out_dir / "terms.tsv", corpus);
  write_embeddings(out_dir / "embeddings.bin", corpus.embeddings());
  return {{"terms", corpus.size()},
          {"concepts", corpus.concept_index().size()},
          {"dim", corpus.dim()},
          {"terms_path", (out_dir / "terms.tsv").string()},
          {"embeddings_path", (out_dir / "embeddings.bin").string()}};
}

}  // namespace synclust
