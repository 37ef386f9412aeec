#include "synclust/synclust.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "synclust/clustering.hpp"
#include "synclust/config.hpp"
#include "synclust/corpus.hpp"
#include "synclust/error.hpp"
#include "synclust/eval.hpp"
#include "synclust/oracle.hpp"
#include "synclust/partitioner.hpp"
#include "synclust/pipeline.hpp"
#include "synclust/simindex.hpp"
#include "synclust/synth.hpp"

struct synclust_corpus {
  synclust::Corpus corpus;
};
struct synclust_index {
  synclust::SimIndex index;
};
struct synclust_partitions {
  synclust::PartitionSet set;
};
struct synclust_oracle {
  std::unique_ptr<synclust::Oracle> oracle;
};
struct synclust_assignment {
  synclust::ClusterAssignment assignment;
};
struct synclust_config {
  synclust::PipelineConfig config;
};

namespace {

thread_local std::string g_last_error;

synclust_status status_of(synclust::ErrorCode code) {
  return static_cast<synclust_status>(static_cast<int>(code) + 1);
}

synclust_status set_error(synclust_status status, const char* message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
synclust_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return SYNCLUST_OK;
  } catch (const synclust::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SYNCLUST_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SYNCLUST_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SYNCLUST_ERR_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<std::uint64_t> limit_of(uint64_t limit) {
  return limit == 0 ? std::nullopt : std::optional<std::uint64_t>(limit);
}

std::optional<std::filesystem::path> path_of(const char* p) {
  return p && *p ? std::optional<std::filesystem::path>(p) : std::nullopt;
}

}  // namespace

// Null arguments are reported as SYNCLUST_ERR_INVALID_ARGUMENT rather than
// SYNCLUST_ERR_INTERNAL.
#define SYNCLUST_REQUIRE(cond)                                                       \
  do {                                                                               \
    if (!(cond)) return set_error(SYNCLUST_ERR_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

extern "C" {

const char* synclust_version(void) { return SYNCLUST_VERSION; }

const char* synclust_status_name(synclust_status status) {
  switch (status) {
    case SYNCLUST_OK: return "ok";
    case SYNCLUST_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SYNCLUST_ERR_INTERNAL: return "internal";
    default: break;
  }
  if (status >= SYNCLUST_ERR_PARSE && status <= SYNCLUST_ERR_IO) {
    return synclust::to_string(static_cast<synclust::ErrorCode>(status - 1));
  }
  return "unknown";
}

const char* synclust_last_error(void) { return g_last_error.c_str(); }

void synclust_string_free(char* s) { std::free(s); }

synclust_status synclust_corpus_load(const char* terms_path, const char* embeddings_path, int filter_long_terms,
                                     uint32_t max_words, synclust_corpus** out) {
  SYNCLUST_REQUIRE(terms_path && out);
  return guarded([&] {
    synclust::IngestOptions options;
    options.filter_long_terms = filter_long_terms != 0;
    if (max_words > 0) options.max_words = max_words;
    auto corpus = synclust::ingest_terms(terms_path, options);
    if (embeddings_path) corpus = synclust::attach_embeddings(corpus, std::filesystem::path(embeddings_path));
    *out = new synclust_corpus{std::move(corpus)};
  });
}

synclust_status synclust_corpus_synth(size_t concepts, size_t terms_per_concept, size_t dim, double intra_min,
                                      double inter_max, uint64_t seed, synclust_corpus** out) {
  SYNCLUST_REQUIRE(out);
  return guarded([&] {
    synclust::SynthConfig config;
    config.concepts = concepts;
    config.terms_per_concept = terms_per_concept;
    config.dim = dim;
    config.intra_min = intra_min;
    config.inter_max = inter_max;
    config.seed = seed;
    *out = new synclust_corpus{synclust::synthesize_corpus(config)};
  });
}

synclust_status synclust_corpus_save(const synclust_corpus* corpus, const char* terms_path,
                                     const char* embeddings_path) {
  SYNCLUST_REQUIRE(corpus && terms_path);
  return guarded([&] {
    synclust::write_terms(terms_path, corpus->corpus);
    if (embeddings_path) synclust::write_embeddings(embeddings_path, corpus->corpus.embeddings());
  });
}

void synclust_corpus_free(synclust_corpus* corpus) { delete corpus; }

size_t synclust_corpus_size(const synclust_corpus* corpus) { return corpus ? corpus->corpus.size() : 0; }

size_t synclust_corpus_dim(const synclust_corpus* corpus) { return corpus ? corpus->corpus.dim() : 0; }

synclust_status synclust_corpus_term_text(const synclust_corpus* corpus, uint32_t term, const char** text) {
  SYNCLUST_REQUIRE(corpus && text);
  return guarded([&] { *text = corpus->corpus.term(term).text.c_str(); });
}

synclust_status synclust_corpus_cosine(const synclust_corpus* corpus, uint32_t a, uint32_t b, double* out) {
  SYNCLUST_REQUIRE(corpus && out);
  return guarded([&] { *out = corpus->corpus.cosine(a, b); });
}

synclust_status synclust_index_build(const synclust_corpus* corpus, synclust_index** out) {
  SYNCLUST_REQUIRE(corpus && out);
  return guarded([&] { *out = new synclust_index{synclust::SimIndex::build(corpus->corpus)}; });
}

void synclust_index_free(synclust_index* index) { delete index; }

synclust_status synclust_index_top_k(const synclust_index* index, uint32_t query, size_t k, uint32_t* ids,
                                     double* sims, size_t* count) {
  SYNCLUST_REQUIRE(index && count && (k == 0 || (ids && sims)));
  return guarded([&] {
    const auto list = index->index.top_k(query, k);
    for (std::size_t i = 0; i < list.neighbors.size(); ++i) {
      ids[i] = list.neighbors[i].id;
      sims[i] = list.neighbors[i].similarity;
    }
    *count = list.neighbors.size();
  });
}

synclust_status synclust_partition_build(const synclust_corpus* corpus, const synclust_index* index, size_t k,
                                         double threshold, unsigned workers, synclust_partitions** out) {
  SYNCLUST_REQUIRE(corpus && index && out);
  return guarded([&] {
    *out = new synclust_partitions{synclust::build_partition(corpus->corpus, index->index, k, threshold,
                                                             workers == 0 ? 1 : workers)};
  });
}

void synclust_partitions_free(synclust_partitions* partitions) { delete partitions; }

size_t synclust_partitions_count(const synclust_partitions* partitions) {
  return partitions ? partitions->set.size() : 0;
}

synclust_status synclust_partitions_members(const synclust_partitions* partitions, size_t i,
                                            const uint32_t** members, size_t* count) {
  SYNCLUST_REQUIRE(partitions && members && count);
  return guarded([&] {
    if (i >= partitions->set.size()) synclust::fail(synclust::ErrorCode::index, "partition index out of range");
    const auto& p = partitions->set.partitions[i];
    *members = p.data();
    *count = p.size();
  });
}

synclust_status synclust_oracle_mock(double agreement_rate, uint64_t seed, uint64_t budget_limit,
                                     const char* cache_path, synclust_oracle** out) {
  SYNCLUST_REQUIRE(out);
  return guarded([&] {
    auto backend = std::make_unique<synclust::MockOracle>(synclust::MockOracleConfig{agreement_rate, seed});
    *out = new synclust_oracle{
        std::make_unique<synclust::Oracle>(std::move(backend), limit_of(budget_limit), path_of(cache_path))};
  });
}

synclust_status synclust_oracle_heuristic(uint64_t budget_limit, const char* cache_path, synclust_oracle** out) {
  SYNCLUST_REQUIRE(out);
  return guarded([&] {
    *out = new synclust_oracle{std::make_unique<synclust::Oracle>(std::make_unique<synclust::HeuristicOracle>(),
                                                                  limit_of(budget_limit), path_of(cache_path))};
  });
}

synclust_status synclust_oracle_from_config(const synclust_config* config, synclust_oracle** out) {
  SYNCLUST_REQUIRE(config && out);
  return guarded([&] { *out = new synclust_oracle{synclust::make_oracle(config->config)}; });
}

void synclust_oracle_free(synclust_oracle* oracle) { delete oracle; }

synclust_status synclust_oracle_judge(synclust_oracle* oracle, const char* a, const char* a_concept, const char* b,
                                      const char* b_concept, int* same) {
  SYNCLUST_REQUIRE(oracle && a && b && same);
  return guarded([&] {
    auto term = [](const char* text, const char* concept_id) {
      synclust::OracleTerm t{text, {}};
      if (concept_id) t.concept_id = std::string_view(concept_id);
      return t;
    };
    *same = oracle->oracle->judge(term(a, a_concept), term(b, b_concept)).same ? 1 : 0;
  });
}

synclust_status synclust_oracle_budget(const synclust_oracle* oracle, uint64_t* queries_issued,
                                       uint64_t* cache_hits) {
  SYNCLUST_REQUIRE(oracle);
  return guarded([&] {
    const auto b = oracle->oracle->budget();
    if (queries_issued) *queries_issued = b.queries_issued;
    if (cache_hits) *cache_hits = b.cache_hits;
  });
}

synclust_status synclust_cluster_run(const synclust_corpus* corpus, const synclust_partitions* partitions,
                                     synclust_oracle* oracle, uint32_t branching_factor, uint64_t seed,
                                     unsigned workers, const char* checkpoint_dir, synclust_assignment** out) {
  SYNCLUST_REQUIRE(corpus && partitions && oracle && out);
  return guarded([&] {
    synclust::ClusteringOptions options;
    options.birch.branching_factor = branching_factor;
    options.birch.seed = seed;
    options.workers = workers == 0 ? 1 : workers;
    options.checkpoint_dir = path_of(checkpoint_dir);
    auto run = synclust::run_clustering(corpus->corpus, partitions->set, *oracle->oracle, options);
    if (!run.failures.empty()) {
      const auto& f = run.failures.front();
      synclust::fail(f.code, "partition " + std::to_string(f.partition) + ": " + f.message);
    }
    *out = new synclust_assignment{std::move(run.assignment)};
  });
}

void synclust_assignment_free(synclust_assignment* assignment) { delete assignment; }

size_t synclust_assignment_cluster_count(const synclust_assignment* assignment) {
  return assignment ? assignment->assignment.clusters.size() : 0;
}

synclust_status synclust_assignment_cluster_of(const synclust_assignment* assignment, uint32_t term,
                                               int64_t* cluster) {
  SYNCLUST_REQUIRE(assignment && cluster);
  return guarded([&] {
    const auto& of = assignment->assignment.cluster_of;
    if (term >= of.size()) synclust::fail(synclust::ErrorCode::index, "term id out of range");
    *cluster = of[term];
  });
}

synclust_status synclust_assignment_save(const synclust_assignment* assignment, const char* path) {
  SYNCLUST_REQUIRE(assignment && path);
  return guarded([&] { synclust::write_clusters(path, assignment->assignment); });
}

synclust_status synclust_assignment_summary(const synclust_assignment* assignment, char** json) {
  SYNCLUST_REQUIRE(assignment && json);
  return guarded([&] { *json = dup_string(synclust::to_json(synclust::summarize(assignment->assignment)).dump()); });
}

synclust_status synclust_eval_clustering(const synclust_assignment* assignment, const synclust_corpus* corpus,
                                         char** json) {
  SYNCLUST_REQUIRE(assignment && corpus && json);
  return guarded([&] {
    *json = dup_string(synclust::to_json(synclust::score_clustering(assignment->assignment, corpus->corpus)).dump());
  });
}

synclust_status synclust_eval_pairs(const synclust_corpus* corpus, const uint32_t* a, const uint32_t* b, size_t n,
                                    double threshold, int sweep, char** json) {
  SYNCLUST_REQUIRE(corpus && json && (n == 0 || (a && b)));
  return guarded([&] {
    std::vector<std::pair<synclust::TermId, synclust::TermId>> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(a[i], b[i]);
    const auto set = synclust::make_pair_set(corpus->corpus, pairs);
    const auto report = sweep ? synclust::best_f1_sweep(set, corpus->corpus)
                              : synclust::score_at_threshold(set, corpus->corpus, threshold);
    *json = dup_string(synclust::to_json(report).dump());
  });
}

synclust_status synclust_config_new(synclust_config** out) {
  SYNCLUST_REQUIRE(out);
  return guarded([&] { *out = new synclust_config{}; });
}

synclust_status synclust_config_load(const char* path, synclust_config** out) {
  SYNCLUST_REQUIRE(path && out);
  return guarded([&] { *out = new synclust_config{synclust::PipelineConfig::load(path)}; });
}

void synclust_config_free(synclust_config* config) { delete config; }

synclust_status synclust_config_set(synclust_config* config, const char* key, const char* value) {
  SYNCLUST_REQUIRE(config && key && value);
  return guarded([&] { config->config.set(key, value); });
}

synclust_status synclust_config_get(const synclust_config* config, const char* key, char** value) {
  SYNCLUST_REQUIRE(config && key && value);
  return guarded([&] { *value = dup_string(config->config.get(key)); });
}

synclust_status synclust_config_hash(const synclust_config* config, char** hash) {
  SYNCLUST_REQUIRE(config && hash);
  return guarded([&] { *hash = dup_string(config->config.hash()); });
}

synclust_status synclust_stage_run(const synclust_config* config, const char* stage, int resume,
                                   char** summary_json) {
  SYNCLUST_REQUIRE(config && stage);
  return guarded([&] {
    synclust::StageFlags flags;
    flags.resume = resume != 0;
    const auto summary = synclust::run_stage(synclust::parse_stage(stage), config->config, flags);
    if (summary_json) *summary_json = dup_string(summary.dump());
  });
}

synclust_status synclust_synth_write(size_t concepts, size_t terms_per_concept, size_t dim, double intra_min,
                                     double inter_max, uint64_t seed, const char* out_dir, char** summary_json) {
  SYNCLUST_REQUIRE(out_dir);
  return guarded([&] {
    synclust::SynthConfig config;
    config.concepts = concepts;
    config.terms_per_concept = terms_per_concept;
    config.dim = dim;
    config.intra_min = intra_min;
    config.inter_max = inter_max;
    config.seed = seed;
    const auto summary = synclust::run_synth(config, out_dir);
    if (summary_json) *summary_json = dup_string(summary.dump());
  });
}

}  // extern "C"
