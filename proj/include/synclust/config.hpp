#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "synclust/birch.hpp"
#include "synclust/contrastive.hpp"
#include "synclust/corpus.hpp"

namespace synclust {

// Flat dotted-key pipeline configuration:
//
//   # comment
//   partitioner.k = 100
//   oracle.kind = mock
//
// Every key has a default; unknown keys and out-of-domain values are
// rejected with ErrorCode::config.
class PipelineConfig {
 public:
  PipelineConfig();

  // Relative paths inside the file resolve against the file's directory.
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});

  void set(std::string_view key, std::string_view value);
  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return values_; }
  static bool is_known_key(std::string_view key);

  // "key=value\n" lines in key order, and its FNV-1a 64 hex digest.
  std::string canonical() const;
  std::string hash() const;

  std::filesystem::path output_dir() const;
  IngestOptions ingest_options() const;
  LossConfig loss() const;
  OptimizerConfig optimizer() const;
  BirchConfig birch() const;
  unsigned workers() const;

 private:
  void set_resolved(std::string_view key, std::string_view value, const std::filesystem::path& base_dir);

  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace synclust
