#pragma once

#include <filesystem>
#include <memory>
#include <string_view>

#include <json.hpp>

#include "synclust/config.hpp"
#include "synclust/oracle.hpp"
#include "synclust/synth.hpp"

namespace synclust {

enum class Stage { ingest, optimize, partition, cluster, eval };

Stage parse_stage(std::string_view name);
const char* to_string(Stage stage) noexcept;

struct StageFlags {
  bool resume = false;
};

// Artifacts, all under paths.output_dir:
//   ingest     corpus.tsv, embeddings.bin
//   optimize   embeddings.optimized.bin, loss_trace.csv
//   partition  neighbors.jsonl, partitions.jsonl
//   cluster    clusters.tsv, cluster_summary.json, checkpoints/, oracle_cache.jsonl
//   eval       eval_clusters.json, eval_pairs.json, pairs_hard_negative.tsv, eval_hard_negative.json
// plus manifest_<stage>.json. Returns the stage summary (also in the manifest).
nlohmann::json run_stage(Stage stage, const PipelineConfig& config, const StageFlags& flags = {});

// Oracle described by the oracle.* keys; the remote credential is read from
// the environment variable named by oracle.api_key_env.
std::unique_ptr<Oracle> make_oracle(const PipelineConfig& config);

// Writes terms.tsv and embeddings.bin for a synthetic labeled corpus.
nlohmann::json run_synth(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace synclust
