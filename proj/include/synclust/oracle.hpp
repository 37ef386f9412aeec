#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>

namespace synclust {

enum class VerdictSource { mock, heuristic, remote, cache };

const char* to_string(VerdictSource source) noexcept;

struct OracleVerdict {
  bool same = false;
  VerdictSource source = VerdictSource::mock;
  std::chrono::nanoseconds latency{0};
};

// What an oracle sees of a term. Only the mock reads concept_id.
struct OracleTerm {
  std::string_view text;
  std::optional<std::string_view> concept_id;
};

class OracleBackend {
 public:
  virtual ~OracleBackend() = default;
  virtual bool same_concept(const OracleTerm& a, const OracleTerm& b) = 0;
  virtual VerdictSource source() const noexcept = 0;
};

struct MockOracleConfig {
  double agreement_rate = 1.0;
  std::uint64_t rng_seed = 0;
};

// Gold concept equality, flipped independently per unordered text pair with
// probability 1 - agreement_rate. The flip is a pure function of
// (seed, pair), so verdicts do not depend on call order.
class MockOracle final : public OracleBackend {
 public:
  explicit MockOracle(MockOracleConfig config);
  bool same_concept(const OracleTerm& a, const OracleTerm& b) override;
  VerdictSource source() const noexcept override { return VerdictSource::mock; }

 private:
  MockOracleConfig config_;
};

// Equality of normalized strings: lowercase, punctuation dropped, tokens
// sorted. For offline smoke runs; it knows nothing about synonymy.
class HeuristicOracle final : public OracleBackend {
 public:
  bool same_concept(const OracleTerm& a, const OracleTerm& b) override;
  VerdictSource source() const noexcept override { return VerdictSource::heuristic; }

  static std::string normalize(std::string_view text);
};

// Unordered text-pair cache, optionally persisted as JSON lines
// {"a": text, "b": text, "same": bool} with a <= b.
class VerdictCache {
 public:
  VerdictCache() = default;
  explicit VerdictCache(std::filesystem::path path);

  std::optional<bool> lookup(std::string_view a, std::string_view b) const;
  void store(std::string_view a, std::string_view b, bool same);
  std::size_t size() const;
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

  static std::pair<std::string, std::string> key(std::string_view a, std::string_view b);

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, bool> entries_;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
};

struct OracleBudget {
  std::uint64_t queries_issued = 0;
  std::uint64_t cache_hits = 0;
  std::optional<std::uint64_t> limit;
};

// Front door for equivalence queries: cache first, then the backend under
// the budget. Safe for concurrent judge() calls; concurrent calls on the same
// pair resolve once.
class Oracle {
 public:
  Oracle(std::unique_ptr<OracleBackend> backend, std::optional<std::uint64_t> limit = std::nullopt,
         std::optional<std::filesystem::path> cache_path = std::nullopt);

  OracleVerdict judge(const OracleTerm& a, const OracleTerm& b);
  OracleVerdict judge(std::string_view a, std::string_view b) { return judge(OracleTerm{a, {}}, OracleTerm{b, {}}); }

  OracleBudget budget() const;
  VerdictSource backend_source() const noexcept { return backend_->source(); }
  const VerdictCache& cache() const noexcept { return *cache_; }

 private:
  std::unique_ptr<OracleBackend> backend_;
  std::unique_ptr<VerdictCache> cache_;
  std::optional<std::uint64_t> limit_;
  std::atomic<std::uint64_t> issued_{0};
  std::atomic<std::uint64_t> hits_{0};

  std::mutex pending_mutex_;
  std::condition_variable pending_cv_;
  std::set<std::pair<std::string, std::string>> pending_;
};

}  // namespace synclust
