#include "synclust/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "synclust/error.hpp"
#include "synclust/random.hpp"

namespace synclust {

namespace {

enum class Kind { string, path, real, count, boolean, choice };

struct KeySpec {
  const char* key;
  const char* fallback;
  Kind kind;
  double lo = -HUGE_VAL;
  double hi = HUGE_VAL;
  const char* choices = "";  // '|' separated, for Kind::choice
  bool open_lo = false;      // lo itself is excluded
};

// Defaults: 15 positive and 15 negative candidates per anchor, 100
// neighbors per term, a 0.5 edge threshold, refresh every tenth of the run.
const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"paths.terms", "", Kind::path},
      {"paths.embeddings", "", Kind::path},
      {"paths.output_dir", "out", Kind::path},
      {"ingest.filter_long_terms", "false", Kind::boolean},
      {"ingest.max_words", "5", Kind::count, 1},
      {"loss.alpha", "2", Kind::real, 0, HUGE_VAL, "", true},
      {"loss.beta", "50", Kind::real, 0, HUGE_VAL, "", true},
      {"loss.mu", "0.5", Kind::real},
      {"loss.epsilon", "0.1", Kind::real, 0},
      {"sampler.n_pos", "15", Kind::count},
      {"sampler.n_neg", "15", Kind::count},
      {"optimizer.steps", "10000", Kind::count},
      {"optimizer.refresh_every", "1000", Kind::count},
      {"optimizer.lr", "0.05", Kind::real, 0, HUGE_VAL, "", true},
      {"optimizer.seed", "0", Kind::count},
      {"optimizer.batch_size", "2", Kind::count, 1},
      {"pipeline.embeddings", "ingest", Kind::choice, 0, 0, "ingest|optimized"},
      {"partitioner.k", "100", Kind::count, 1},
      {"partitioner.threshold", "0.5", Kind::real, -1, 1},
      {"birch.branching_factor", "16", Kind::count, 2},
      {"birch.seed", "0", Kind::count},
      {"birch.split_oversized_leaves", "false", Kind::boolean},
      {"oracle.kind", "mock", Kind::choice, 0, 0, "mock|heuristic|remote"},
      {"oracle.agreement_rate", "1", Kind::real, 0, 1},
      {"oracle.seed", "0", Kind::count},
      {"oracle.endpoint", "", Kind::string},
      {"oracle.model", "gpt-3.5-turbo", Kind::string},
      {"oracle.api_key_env", "SYNCLUST_API_KEY", Kind::string},
      {"oracle.max_in_flight", "4", Kind::count, 1},
      {"oracle.requests_per_second", "0", Kind::real, 0},
      {"oracle.timeout_seconds", "60", Kind::count, 1},
      {"oracle.budget_limit", "0", Kind::count},
      {"oracle.cache_path", "", Kind::path},
      {"oracle.replay_fixture", "", Kind::path},
      {"eval.pairs", "", Kind::path},
      {"eval.threshold", "", Kind::string},
      {"eval.build_hard_negatives", "false", Kind::boolean},
      {"eval.hard_negative_neighbors", "30", Kind::count, 1},
      {"eval.anchor_seed", "0", Kind::count},
      {"run.workers", "1", Kind::count, 1},
  };
  return specs;
}

const KeySpec* find_spec(std::string_view key) {
  for (const auto& s : key_specs()) {
    if (key == s.key) return &s;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
}

double parse_real(std::string_view key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(d)) fail(ErrorCode::config, std::string(key) + ": '" + v + "' is not a finite number");
  return d;
}

std::uint64_t parse_count(std::string_view key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    fail(ErrorCode::config, std::string(key) + ": '" + v + "' is not a non-negative integer");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    fail(ErrorCode::config, std::string(key) + ": '" + v + "' is out of range");
  }
}

void check_value(const KeySpec& spec, const std::string& v) {
  const std::string key = spec.key;
  switch (spec.kind) {
    case Kind::string:
    case Kind::path:
      return;
    case Kind::boolean:
      if (v != "true" && v != "false") fail(ErrorCode::config, key + ": expected true or false, got '" + v + "'");
      return;
    case Kind::choice: {
      std::string choices = spec.choices;
      std::istringstream ss(choices);
      for (std::string c; std::getline(ss, c, '|');) {
        if (c == v) return;
      }
      fail(ErrorCode::config, key + ": '" + v + "' is not one of " + choices);
    }
    case Kind::real: {
      const double d = parse_real(key, v);
      const bool above = spec.open_lo ? d > spec.lo : d >= spec.lo;
      if (!above || !(d <= spec.hi)) {
        fail(ErrorCode::config, key + ": " + v + " is outside its allowed range");
      }
      return;
    }
    case Kind::count: {
      const auto n = parse_count(key, v);
      if (static_cast<double>(n) < spec.lo) fail(ErrorCode::config, key + ": must be at least " + std::to_string(static_cast<long long>(spec.lo)));
      return;
    }
  }
}

}  // namespace

PipelineConfig::PipelineConfig() {
  for (const auto& s : key_specs()) values_.emplace(s.key, s.fallback);
}

bool PipelineConfig::is_known_key(std::string_view key) { return find_spec(key) != nullptr; }

void PipelineConfig::set(std::string_view key, std::string_view value) { set_resolved(key, value, {}); }

void PipelineConfig::set_resolved(std::string_view key, std::string_view value, const std::filesystem::path& base_dir) {
  const auto* spec = find_spec(key);
  if (!spec) fail(ErrorCode::config, "unknown config key '" + std::string(key) + "'");
  auto v = trim(value);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  check_value(*spec, v);
  if (spec->kind == Kind::path && !v.empty() && !base_dir.empty() && std::filesystem::path(v).is_relative()) {
    v = (base_dir / v).lexically_normal().string();
  }
  values_.find(key)->second = v;
}

PipelineConfig PipelineConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::config, "config line " + std::to_string(line_no) + ": expected key = value");
    try {
      cfg.set_resolved(trim(line.substr(0, eq)), line.substr(eq + 1), base_dir);
    } catch (const Error& e) {
      throw Error(e.code(), "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  try {
    return parse(ss.str(), base);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

const std::string& PipelineConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::config, "unknown config key '" + std::string(key) + "'");
  return it->second;
}

double PipelineConfig::get_double(std::string_view key) const { return parse_real(key, get(key)); }
std::uint64_t PipelineConfig::get_uint(std::string_view key) const { return parse_count(key, get(key)); }
bool PipelineConfig::get_bool(std::string_view key) const { return get(key) == "true"; }

std::string PipelineConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string PipelineConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

std::filesystem::path PipelineConfig::output_dir() const { return get("paths.output_dir"); }

IngestOptions PipelineConfig::ingest_options() const {
  return {get_bool("ingest.filter_long_terms"), static_cast<std::size_t>(get_uint("ingest.max_words"))};
}

LossConfig PipelineConfig::loss() const {
  return {get_double("loss.alpha"), get_double("loss.beta"), get_double("loss.mu"), get_double("loss.epsilon")};
}

OptimizerConfig PipelineConfig::optimizer() const {
  OptimizerConfig c;
  c.loss = loss();
  c.steps = get_uint("optimizer.steps");
  c.refresh_every = get_uint("optimizer.refresh_every");
  c.batch_size = get_uint("optimizer.batch_size");
  c.n_pos = get_uint("sampler.n_pos");
  c.n_neg = get_uint("sampler.n_neg");
  c.lr = get_double("optimizer.lr");
  c.seed = get_uint("optimizer.seed");
  return c;
}

BirchConfig PipelineConfig::birch() const {
  return {get_uint("birch.branching_factor"), get_uint("birch.seed"), get_bool("birch.split_oversized_leaves")};
}

unsigned PipelineConfig::workers() const { return static_cast<unsigned>(get_uint("run.workers")); }

}  // namespace synclust
