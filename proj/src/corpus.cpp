#include "synclust/corpus.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "synclust/error.hpp"

namespace synclust {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'Y', 'N', 'F', 'E', 'M', 'B', '1'};

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string ascii_lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

EmbeddingMatrix read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open embedding file " + path.string());
  std::vector<unsigned char> header(8 + 4 + 8);
  in.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(header.size()));
  if (in.gcount() != static_cast<std::streamsize>(header.size()) ||
      !std::equal(kMagic.begin(), kMagic.end(), header.begin())) {
    fail(ErrorCode::parse, path.string() + ": not a SYNFEMB1 embedding file");
  }
  const auto dim = get_le<std::uint32_t>(header.data() + 8);
  const auto count = get_le<std::uint64_t>(header.data() + 12);
  if (dim == 0) fail(ErrorCode::shape, path.string() + ": dim must be positive");
  std::vector<unsigned char> payload(count * dim * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size())) {
    fail(ErrorCode::shape, path.string() + ": truncated payload, expected " +
                               std::to_string(count) + " rows of dim " + std::to_string(dim));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::shape, path.string() + ": trailing bytes after payload");
  }
  std::vector<float> values(count * dim);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_le<float>(payload.data() + 4 * i);
  return EmbeddingMatrix(count, dim, std::move(values));
}

EmbeddingMatrix read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open embedding file " + path.string());
  std::vector<std::vector<float>> rows;
  std::vector<bool> seen;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("term_id") || !j.contains("vec") || !j["term_id"].is_number_unsigned() ||
        !j["vec"].is_array()) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) +
                                 ": expected {\"term_id\": n, \"vec\": [...]}");
    }
    const auto id = j["term_id"].get<std::size_t>();
    auto vec = j["vec"].get<std::vector<float>>();
    if (dim == 0) dim = vec.size();
    if (vec.empty() || vec.size() != dim) {
      fail(ErrorCode::shape, path.string() + ":" + std::to_string(line_no) + ": vector of dim " +
                                 std::to_string(vec.size()) + ", expected " + std::to_string(dim));
    }
    if (id >= rows.size()) {
      rows.resize(id + 1);
      seen.resize(id + 1, false);
    }
    if (seen[id]) {
      fail(ErrorCode::integrity, path.string() + ":" + std::to_string(line_no) +
                                     ": duplicate term_id " + std::to_string(id));
    }
    seen[id] = true;
    rows[id] = std::move(vec);
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) fail(ErrorCode::shape, path.string() + ": missing vector for term_id " + std::to_string(i));
  }
  std::vector<float> values;
  values.reserve(rows.size() * dim);
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  return EmbeddingMatrix(rows.size(), dim, std::move(values));
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

bool normalize_row(std::span<float> row) {
  const double norm = std::sqrt(dot(row, row));
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  if (std::abs(norm - 1.0) <= 4.0 * FLT_EPSILON) return true;
  for (auto& v : row) v = static_cast<float>(v / norm);
  return true;
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (values_.size() != rows_ * dim_) {
    fail(ErrorCode::shape, "embedding buffer holds " + std::to_string(values_.size()) +
                               " values, expected " + std::to_string(rows_ * dim_));
  }
}

EmbeddingMatrix EmbeddingMatrix::normalized(std::size_t rows, std::size_t dim,
                                            std::vector<float> values) {
  EmbeddingMatrix m(rows, dim, std::move(values));
  if (rows > 0 && dim == 0) fail(ErrorCode::shape, "embedding dim must be positive");
  for (std::size_t i = 0; i < rows; ++i) {
    if (!normalize_row(m.mutable_row(i))) {
      fail(ErrorCode::degenerate_vector,
           "embedding row " + std::to_string(i) + " has zero or non-finite norm");
    }
  }
  return m;
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<float> out;
  out.reserve(rows.size() * dim_);
  for (auto r : rows) {
    if (r >= rows_) fail(ErrorCode::index, "row " + std::to_string(r) + " out of range");
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(rows.size(), dim_, std::move(out));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return read_jsonl(path);
  return read_binary(path);
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  for (float v : m.values()) put_le<float>(out, v);
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

Corpus::Corpus(std::vector<TermRecord> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    auto& t = terms_[i];
    if (t.term_id != i) {
      fail(ErrorCode::integrity, "term_id " + std::to_string(t.term_id) + " at position " +
                                     std::to_string(i) + " breaks dense numbering");
    }
    if (trim(t.text).empty()) fail(ErrorCode::integrity, "term " + std::to_string(i) + " has empty text");
    if (t.concept_id) concept_index_[*t.concept_id].push_back(t.term_id);
  }
}

const TermRecord& Corpus::term(TermId id) const {
  check_id(id);
  return terms_[id];
}

const EmbeddingMatrix& Corpus::embeddings() const {
  if (!embeddings_) fail(ErrorCode::state, "corpus has no embeddings attached");
  return *embeddings_;
}

std::span<const float> Corpus::embedding(TermId id) const {
  check_id(id);
  return embeddings().row(id);
}

std::vector<TermId> Corpus::synonyms_of(TermId id) const {
  const auto& t = term(id);
  std::vector<TermId> out;
  if (!t.concept_id) return out;
  for (auto other : concept_index_.at(*t.concept_id)) {
    if (other != id) out.push_back(other);
  }
  return out;
}

bool Corpus::same_concept(TermId a, TermId b) const {
  const auto& ta = term(a);
  const auto& tb = term(b);
  return ta.concept_id && tb.concept_id && *ta.concept_id == *tb.concept_id;
}

bool Corpus::fully_labeled() const noexcept {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const TermRecord& t) { return t.concept_id.has_value(); });
}

double Corpus::cosine(TermId a, TermId b) const {
  check_id(a);
  check_id(b);
  const auto& m = embeddings();
  return dot(m.row(a), m.row(b));
}

Corpus Corpus::with_embeddings(EmbeddingMatrix m) const {
  if (m.rows() != terms_.size()) {
    fail(ErrorCode::shape, "embedding matrix has " + std::to_string(m.rows()) +
                               " rows for a corpus of " + std::to_string(terms_.size()) + " terms");
  }
  Corpus out = *this;
  out.embeddings_ = std::move(m);
  return out;
}

void Corpus::check_id(TermId id) const {
  if (id >= terms_.size()) {
    fail(ErrorCode::index, "term_id " + std::to_string(id) + " out of range [0, " +
                               std::to_string(terms_.size()) + ")");
  }
}

Corpus parse_terms(const std::string& content, const IngestOptions& options) {
  std::vector<TermRecord> records;
  std::unordered_set<std::uint64_t> seen_ids;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos || line.find('\t', tab2 + 1) != std::string::npos) {
      fail(ErrorCode::parse, "line " + std::to_string(line_no) +
                                 ": expected 3 tab-separated columns (term_id, concept_id, text)");
    }
    const auto id_field = trim(std::string_view(line).substr(0, tab1));
    const auto concept_field = trim(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1));
    auto text = ascii_lower(trim(std::string_view(line).substr(tab2 + 1)));

    std::uint64_t source_id = 0;
    if (id_field.empty() ||
        !std::all_of(id_field.begin(), id_field.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": term_id '" + id_field +
                                 "' is not a non-negative integer");
    }
    try {
      source_id = std::stoull(id_field);
    } catch (const std::exception&) {
      fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": term_id out of range");
    }
    if (concept_field.empty()) {
      fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": empty concept_id (use '-' for unlabeled)");
    }
    if (text.empty()) fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": empty term text");
    if (!seen_ids.insert(source_id).second) {
      fail(ErrorCode::integrity, "line " + std::to_string(line_no) + ": duplicate term_id " + id_field);
    }

    const auto row = data_row++;
    if (options.filter_long_terms && word_count(text) > options.max_words) continue;

    TermRecord r;
    r.term_id = static_cast<TermId>(records.size());
    r.text = std::move(text);
    if (concept_field != "-") r.concept_id = concept_field;
    r.source_id = source_id;
    r.source_row = row;
    records.push_back(std::move(r));
  }
  return Corpus(std::move(records));
}

Corpus ingest_terms(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open term file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_terms(ss.str(), options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Corpus attach_embeddings(const Corpus& corpus, EmbeddingMatrix raw) {
  if (raw.rows() != corpus.size()) {
    fail(ErrorCode::shape, "embedding file has " + std::to_string(raw.rows()) +
                               " rows for a corpus of " + std::to_string(corpus.size()) + " terms");
  }
  if (raw.rows() > 0 && raw.dim() == 0) fail(ErrorCode::shape, "embedding dim must be positive");
  const auto rows = raw.rows();
  const auto dim = raw.dim();
  auto values = raw.values();
  return corpus.with_embeddings(EmbeddingMatrix::normalized(rows, dim, std::move(values)));
}

Corpus attach_embeddings(const Corpus& corpus, const std::filesystem::path& path) {
  return attach_embeddings(corpus, read_embeddings(path));
}

void write_terms(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  for (const auto& t : corpus.terms()) {
    out << t.term_id << '\t' << (t.concept_id ? *t.concept_id : std::string("-")) << '\t' << t.text
        << '\n';
  }
}

}  // namespace synclust
