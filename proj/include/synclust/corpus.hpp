#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synclust {

using TermId = std::uint32_t;

struct TermRecord {
  TermId term_id = 0;
  std::string text;
  std::optional<std::string> concept_id;
  // term_id column as it appeared in the source file.
  std::uint64_t source_id = 0;
  // 0-based data row in the source file, before any filtering.
  std::size_t source_row = 0;
};

// Dense row-major float32 matrix. Rows are unit-normalized on construction
// through normalized(); the raw constructor leaves values as given.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values);

  // L2-normalizes every row. Rows already within float round-off of unit
  // length are left untouched, which makes normalization idempotent.
  // Throws degenerate_vector naming the first zero (or non-finite) row.
  static EmbeddingMatrix normalized(std::size_t rows, std::size_t dim,
                                    std::vector<float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<float> mutable_row(std::size_t i) {
    return {values_.data() + i * dim_, dim_};
  }
  const std::vector<float>& values() const noexcept { return values_; }

  EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

// Normalizes a single row in place; returns false for a zero/non-finite row.
bool normalize_row(std::span<float> row);

double dot(std::span<const float> a, std::span<const float> b) noexcept;

// Reads the canonical binary format (magic "SYNFEMB1", u32 dim, u64 count,
// count*dim f32, all little-endian) or, for *.jsonl / *.json files, lines of
// {"term_id": n, "vec": [...]}. Values are returned un-normalized.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);

struct IngestOptions {
  bool filter_long_terms = false;
  std::size_t max_words = 5;
};

class Corpus {
 public:
  Corpus() = default;
  // Validates records (dense ids, non-empty text) and builds the concept index.
  explicit Corpus(std::vector<TermRecord> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const std::vector<TermRecord>& terms() const noexcept { return terms_; }
  const TermRecord& term(TermId id) const;

  bool has_embeddings() const noexcept { return embeddings_.has_value(); }
  const EmbeddingMatrix& embeddings() const;
  std::size_t dim() const noexcept { return embeddings_ ? embeddings_->dim() : 0; }
  std::span<const float> embedding(TermId id) const;

  const std::map<std::string, std::vector<TermId>>& concept_index() const noexcept {
    return concept_index_;
  }
  // Terms sharing `id`'s concept, excluding `id`. Empty for unlabeled terms.
  std::vector<TermId> synonyms_of(TermId id) const;
  bool same_concept(TermId a, TermId b) const;
  bool fully_labeled() const noexcept;

  double cosine(TermId a, TermId b) const;

  // Returns a copy carrying `m`; rows must already be unit-norm.
  Corpus with_embeddings(EmbeddingMatrix m) const;

 private:
  void check_id(TermId id) const;

  std::vector<TermRecord> terms_;
  std::map<std::string, std::vector<TermId>> concept_index_;
  std::optional<EmbeddingMatrix> embeddings_;
};

Corpus ingest_terms(const std::filesystem::path& path, const IngestOptions& options = {});
Corpus parse_terms(const std::string& content, const IngestOptions& options = {});

// Normalizes `raw` and attaches it. Row count must equal corpus size.
Corpus attach_embeddings(const Corpus& corpus, EmbeddingMatrix raw);
Corpus attach_embeddings(const Corpus& corpus, const std::filesystem::path& path);

// Canonical term file: term_id <TAB> concept_id|- <TAB> text, dense ids.
void write_terms(const std::filesystem::path& path, const Corpus& corpus);

}  // namespace synclust
