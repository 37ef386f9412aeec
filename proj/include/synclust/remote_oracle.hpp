#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "synclust/oracle.hpp"

namespace synclust {

inline constexpr std::string_view kJudgeSystemPrompt = "You are a helpful assistant for term clustering.";
inline constexpr std::string_view kExplainSystemPrompt =
    "You are a helpful assistant for providing explanations of biomedical terms. "
    "You should be regardless of capitalization.";

std::string judge_user_prompt(std::string_view a, std::string_view b);
std::string explain_user_prompt(std::string_view term);

// "Yes." -> true, "no" -> false; anything else throws unparseable_reply.
bool parse_remote_reply(std::string_view raw);

// Sends one request body and returns the response body. Failures throw
// Error(oracle_unavailable).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string post(const std::string& body) = 0;
};

// POST to an http(s) chat-completion endpoint with a bearer credential.
class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string endpoint, std::optional<std::string> api_key,
                std::chrono::seconds timeout = std::chrono::seconds(60));
  std::string post(const std::string& body) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::optional<std::string> api_key_;
  std::chrono::seconds timeout_;
};

// Replays stored transcripts: JSON lines {"request": {...}, "response": "..."}
// matched on the canonical dump of the request.
class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& fixture);
  std::string post(const std::string& body) override;

 private:
  std::map<std::string, std::string> responses_;
};

// Forwards to another transport and appends each exchange to a fixture file
// readable by ReplayTransport.
class RecordingTransport final : public Transport {
 public:
  RecordingTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& fixture);
  std::string post(const std::string& body) override;

 private:
  std::unique_ptr<Transport> inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

struct RemoteConfig {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_in_flight = 4;
  double requests_per_second = 0.0;  // 0 = unlimited
  std::size_t max_attempts = 2;      // one retry
};

class RemoteClient {
 public:
  RemoteClient(std::unique_ptr<Transport> transport, RemoteConfig config = {});

  nlohmann::json chat_request(std::string_view system, std::string_view user) const;

  // Assistant content of one completion, with a retry on transport failure.
  std::string complete(std::string_view system, std::string_view user);

  bool same_meaning(std::string_view a, std::string_view b);
  std::string explain_term(std::string_view term);

  std::size_t requests_sent() const;

 private:
  std::string send_once(const std::string& body);

  std::unique_ptr<Transport> transport_;
  RemoteConfig config_;

  mutable std::mutex mutex_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
  std::size_t sent_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

class RemoteOracle final : public OracleBackend {
 public:
  explicit RemoteOracle(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
  bool same_concept(const OracleTerm& a, const OracleTerm& b) override {
    return client_->same_meaning(a.text, b.text);
  }
  VerdictSource source() const noexcept override { return VerdictSource::remote; }

 private:
  std::shared_ptr<RemoteClient> client_;
};

}  // namespace synclust
