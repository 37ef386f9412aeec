#ifndef SYNCLUST_SYNCLUST_H
#define SYNCLUST_SYNCLUST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SYNCLUST_BUILDING_LIBRARY)
#    define SYNCLUST_API __declspec(dllexport)
#  else
#    define SYNCLUST_API __declspec(dllimport)
#  endif
#else
#  define SYNCLUST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum synclust_status {
  SYNCLUST_OK = 0,
  SYNCLUST_ERR_PARSE = 1,
  SYNCLUST_ERR_INTEGRITY = 2,
  SYNCLUST_ERR_SHAPE = 3,
  SYNCLUST_ERR_DEGENERATE_VECTOR = 4,
  SYNCLUST_ERR_INDEX = 5,
  SYNCLUST_ERR_STATE = 6,
  SYNCLUST_ERR_CONFIG = 7,
  SYNCLUST_ERR_LABEL = 8,
  SYNCLUST_ERR_NUMERIC = 9,
  SYNCLUST_ERR_ORACLE_UNAVAILABLE = 10,
  SYNCLUST_ERR_UNPARSEABLE_REPLY = 11,
  SYNCLUST_ERR_BUDGET = 12,
  SYNCLUST_ERR_UNDEFINED_METRICS = 13,
  SYNCLUST_ERR_CONTRACT = 14,
  SYNCLUST_ERR_IO = 15,
  SYNCLUST_ERR_INVALID_ARGUMENT = 16, /* null handle or pointer */
  SYNCLUST_ERR_INTERNAL = 17
} synclust_status;

typedef struct synclust_corpus synclust_corpus;
typedef struct synclust_index synclust_index;
typedef struct synclust_partitions synclust_partitions;
typedef struct synclust_oracle synclust_oracle;
typedef struct synclust_assignment synclust_assignment;
typedef struct synclust_config synclust_config;

SYNCLUST_API const char* synclust_version(void);
SYNCLUST_API const char* synclust_status_name(synclust_status status);
/* Message of the last failed call on this thread; empty after success. */
SYNCLUST_API const char* synclust_last_error(void);
/* Frees strings returned through char** out-parameters. */
SYNCLUST_API void synclust_string_free(char* s);

/* Corpus. embeddings_path may be NULL, leaving the corpus without vectors. */
SYNCLUST_API synclust_status synclust_corpus_load(const char* terms_path, const char* embeddings_path,
                                                  int filter_long_terms, uint32_t max_words,
                                                  synclust_corpus** out);
SYNCLUST_API synclust_status synclust_corpus_synth(size_t concepts, size_t terms_per_concept, size_t dim,
                                                   double intra_min, double inter_max, uint64_t seed,
                                                   synclust_corpus** out);
SYNCLUST_API synclust_status synclust_corpus_save(const synclust_corpus* corpus, const char* terms_path,
                                                  const char* embeddings_path);
SYNCLUST_API void synclust_corpus_free(synclust_corpus* corpus);
SYNCLUST_API size_t synclust_corpus_size(const synclust_corpus* corpus);
SYNCLUST_API size_t synclust_corpus_dim(const synclust_corpus* corpus);
/* *text is owned by the corpus. */
SYNCLUST_API synclust_status synclust_corpus_term_text(const synclust_corpus* corpus, uint32_t term,
                                                       const char** text);
SYNCLUST_API synclust_status synclust_corpus_cosine(const synclust_corpus* corpus, uint32_t a, uint32_t b,
                                                    double* out);

/* Exact top-k index over a snapshot of the corpus embeddings. */
SYNCLUST_API synclust_status synclust_index_build(const synclust_corpus* corpus, synclust_index** out);
SYNCLUST_API void synclust_index_free(synclust_index* index);
/* ids and sims must hold k entries; *count receives the number written. */
SYNCLUST_API synclust_status synclust_index_top_k(const synclust_index* index, uint32_t query, size_t k,
                                                  uint32_t* ids, double* sims, size_t* count);

SYNCLUST_API synclust_status synclust_partition_build(const synclust_corpus* corpus, const synclust_index* index,
                                                      size_t k, double threshold, unsigned workers,
                                                      synclust_partitions** out);
SYNCLUST_API void synclust_partitions_free(synclust_partitions* partitions);
SYNCLUST_API size_t synclust_partitions_count(const synclust_partitions* partitions);
/* *members is owned by the partition set and sorted ascending. */
SYNCLUST_API synclust_status synclust_partitions_members(const synclust_partitions* partitions, size_t i,
                                                         const uint32_t** members, size_t* count);

/* Oracles. budget_limit 0 means unlimited; cache_path may be NULL. */
SYNCLUST_API synclust_status synclust_oracle_mock(double agreement_rate, uint64_t seed, uint64_t budget_limit,
                                                  const char* cache_path, synclust_oracle** out);
SYNCLUST_API synclust_status synclust_oracle_heuristic(uint64_t budget_limit, const char* cache_path,
                                                       synclust_oracle** out);
SYNCLUST_API synclust_status synclust_oracle_from_config(const synclust_config* config, synclust_oracle** out);
SYNCLUST_API void synclust_oracle_free(synclust_oracle* oracle);
/* Concept ids may be NULL; the mock oracle needs them. */
SYNCLUST_API synclust_status synclust_oracle_judge(synclust_oracle* oracle, const char* a, const char* a_concept,
                                                   const char* b, const char* b_concept, int* same);
SYNCLUST_API synclust_status synclust_oracle_budget(const synclust_oracle* oracle, uint64_t* queries_issued,
                                                    uint64_t* cache_hits);

/* checkpoint_dir may be NULL. */
SYNCLUST_API synclust_status synclust_cluster_run(const synclust_corpus* corpus,
                                                  const synclust_partitions* partitions, synclust_oracle* oracle,
                                                  uint32_t branching_factor, uint64_t seed, unsigned workers,
                                                  const char* checkpoint_dir, synclust_assignment** out);
SYNCLUST_API void synclust_assignment_free(synclust_assignment* assignment);
SYNCLUST_API size_t synclust_assignment_cluster_count(const synclust_assignment* assignment);
/* *cluster is -1 for a term that was not clustered. */
SYNCLUST_API synclust_status synclust_assignment_cluster_of(const synclust_assignment* assignment, uint32_t term,
                                                            int64_t* cluster);
SYNCLUST_API synclust_status synclust_assignment_save(const synclust_assignment* assignment, const char* path);
SYNCLUST_API synclust_status synclust_assignment_summary(const synclust_assignment* assignment, char** json);

/* Pairwise precision/recall/F1 of the clustering against concept labels. */
SYNCLUST_API synclust_status synclust_eval_clustering(const synclust_assignment* assignment,
                                                      const synclust_corpus* corpus, char** json);
/* Scores labeled pairs by cosine; sweep != 0 picks the F1-best threshold. */
SYNCLUST_API synclust_status synclust_eval_pairs(const synclust_corpus* corpus, const uint32_t* a,
                                                 const uint32_t* b, size_t n, double threshold, int sweep,
                                                 char** json);

SYNCLUST_API synclust_status synclust_config_new(synclust_config** out);
SYNCLUST_API synclust_status synclust_config_load(const char* path, synclust_config** out);
SYNCLUST_API void synclust_config_free(synclust_config* config);
SYNCLUST_API synclust_status synclust_config_set(synclust_config* config, const char* key, const char* value);
SYNCLUST_API synclust_status synclust_config_get(const synclust_config* config, const char* key, char** value);
SYNCLUST_API synclust_status synclust_config_hash(const synclust_config* config, char** hash);

/* Stages: ingest, optimize, partition, cluster, eval. */
SYNCLUST_API synclust_status synclust_stage_run(const synclust_config* config, const char* stage, int resume,
                                                char** summary_json);
SYNCLUST_API synclust_status synclust_synth_write(size_t concepts, size_t terms_per_concept, size_t dim,
                                                  double intra_min, double inter_max, uint64_t seed,
                                                  const char* out_dir, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
