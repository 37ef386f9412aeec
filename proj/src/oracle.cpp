#include "synclust/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "synclust/error.hpp"
#include "synclust/random.hpp"

namespace synclust {

const char* to_string(VerdictSource source) noexcept {
  switch (source) {
    case VerdictSource::mock: return "mock";
    case VerdictSource::heuristic: return "heuristic";
    case VerdictSource::remote: return "remote";
    case VerdictSource::cache: return "cache";
  }
  return "unknown";
}

MockOracle::MockOracle(MockOracleConfig config) : config_(config) {
  if (!(config_.agreement_rate >= 0.0 && config_.agreement_rate <= 1.0)) {
    fail(ErrorCode::config, "mock agreement_rate must lie in [0, 1]");
  }
}

bool MockOracle::same_concept(const OracleTerm& a, const OracleTerm& b) {
  if (!a.concept_id || !b.concept_id) {
    fail(ErrorCode::label, "mock oracle needs gold concept ids for '" + std::string(a.text) + "' and '" +
                               std::string(b.text) + "'");
  }
  const bool gold = *a.concept_id == *b.concept_id;
  const auto [lo, hi] = VerdictCache::key(a.text, b.text);
  std::uint64_t h = fnv1a64(lo);
  h = fnv1a64(std::string_view("\x1f", 1), h);
  h = fnv1a64(hi, h);
  const double u = uniform_unit(mix_seed(config_.rng_seed, h));
  return u < config_.agreement_rate ? gold : !gold;
}

std::string HeuristicOracle::normalize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  std::sort(tokens.begin(), tokens.end());
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool HeuristicOracle::same_concept(const OracleTerm& a, const OracleTerm& b) {
  return normalize(a.text) == normalize(b.text);
}

VerdictCache::VerdictCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) {
    std::ifstream in(*path_);
    if (!in) fail(ErrorCode::io, "cannot open oracle cache " + path_->string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        entries_[key(j.at("a").get<std::string>(), j.at("b").get<std::string>())] = j.at("same").get<bool>();
      } catch (const nlohmann::json::exception&) {
        // A run killed mid-write leaves at most one torn trailing line.
        if (in.peek() != std::char_traits<char>::eof()) {
          fail(ErrorCode::parse, path_->string() + ":" + std::to_string(line_no) + ": malformed cache entry");
        }
      }
    }
  } else if (path_->has_parent_path()) {
    std::filesystem::create_directories(path_->parent_path());
  }
  out_.open(*path_, std::ios::app);
  if (!out_) fail(ErrorCode::io, "cannot open oracle cache " + path_->string() + " for append");
}

std::pair<std::string, std::string> VerdictCache::key(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  return {std::string(a), std::string(b)};
}

std::optional<bool> VerdictCache::lookup(std::string_view a, std::string_view b) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key(a, b));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::store(std::string_view a, std::string_view b, bool same) {
  auto k = key(a, b);
  std::lock_guard lock(mutex_);
  const auto [it, inserted] = entries_.emplace(k, same);
  if (!inserted) return;
  if (out_.is_open()) {
    out_ << nlohmann::json{{"a", k.first}, {"b", k.second}, {"same", same}}.dump() << '\n';
    out_.flush();
  }
}

std::size_t VerdictCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

Oracle::Oracle(std::unique_ptr<OracleBackend> backend, std::optional<std::uint64_t> limit,
               std::optional<std::filesystem::path> cache_path)
    : backend_(std::move(backend)), limit_(limit) {
  if (!backend_) fail(ErrorCode::config, "oracle needs a backend");
  cache_ = cache_path ? std::make_unique<VerdictCache>(*cache_path) : std::make_unique<VerdictCache>();
}

OracleBudget Oracle::budget() const {
  return {issued_.load(), hits_.load(), limit_};
}

OracleVerdict Oracle::judge(const OracleTerm& a, const OracleTerm& b) {
  if (a.text.empty() || b.text.empty()) fail(ErrorCode::contract, "oracle terms must be non-empty");
  auto k = VerdictCache::key(a.text, b.text);

  // Claim the pair, or wait for whoever is resolving it.
  {
    std::unique_lock lock(pending_mutex_);
    pending_cv_.wait(lock, [&] { return !pending_.contains(k); });
    if (auto hit = cache_->lookup(a.text, b.text)) {
      ++hits_;
      return {*hit, VerdictSource::cache, std::chrono::nanoseconds{0}};
    }
    if (limit_ && issued_.load() >= *limit_) {
      fail(ErrorCode::budget, "oracle budget of " + std::to_string(*limit_) + " queries exhausted");
    }
    ++issued_;
    pending_.insert(k);
  }
  const auto release = [&] {
    std::lock_guard lock(pending_mutex_);
    pending_.erase(k);
    pending_cv_.notify_all();
  };

  const auto start = std::chrono::steady_clock::now();
  bool same = false;
  try {
    same = backend_->same_concept(a, b);
  } catch (...) {
    --issued_;
    release();
    throw;
  }
  const auto source = backend_->source();
  const auto latency = source == VerdictSource::remote ? std::chrono::steady_clock::now() - start
                                                       : std::chrono::steady_clock::duration{0};
  cache_->store(a.text, b.text, same);
  release();
  return {same, source, std::chrono::duration_cast<std::chrono::nanoseconds>(latency)};
}

}  // namespace synclust
