#include "synclust/remote_oracle.hpp"

#include <cctype>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "synclust/error.hpp"

namespace synclust {

std::string judge_user_prompt(std::string_view a, std::string_view b) {
  std::string s = "Do the terms ";
  s += a;
  s += " and ";
  s += b;
  s += " have roughly the same meaning? Please answer with yes or no only.";
  return s;
}

std::string explain_user_prompt(std::string_view term) {
  std::string s = "What is the term '";
  s += term;
  s += "'? Please explain in 50 words as if in a dictionary.";
  return s;
}

bool parse_remote_reply(std::string_view raw) {
  std::size_t b = 0;
  while (b < raw.size() && (std::isspace(static_cast<unsigned char>(raw[b])) ||
                            std::ispunct(static_cast<unsigned char>(raw[b])))) {
    ++b;
  }
  std::string word;
  for (std::size_t i = b; i < raw.size() && std::isalpha(static_cast<unsigned char>(raw[i])); ++i) {
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
  }
  if (word == "yes") return true;
  if (word == "no") return false;
  fail(ErrorCode::unparseable_reply, "reply is neither yes nor no: '" + std::string(raw.substr(0, 80)) + "'");
}

HttpTransport::HttpTransport(std::string endpoint, std::optional<std::string> api_key,
                             std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::config, "oracle endpoint must be an http(s) URL");
  const auto scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") fail(ErrorCode::config, "unsupported oracle endpoint scheme '" + scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") fail(ErrorCode::config, "this build has no TLS support; use an http endpoint");
#endif
  const auto path_start = endpoint.find('/', scheme_end + 3);
  origin_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
}

std::string HttpTransport::post(const std::string& body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    fail(ErrorCode::oracle_unavailable, "request to " + origin_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    fail(ErrorCode::oracle_unavailable, "endpoint " + origin_ + " answered HTTP " + std::to_string(res->status));
  }
  return res->body;
}

ReplayTransport::ReplayTransport(const std::filesystem::path& fixture) {
  std::ifstream in(fixture);
  if (!in) fail(ErrorCode::io, "cannot open transcript fixture " + fixture.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      responses_[j.at("request").dump()] = j.at("response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, fixture.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string ReplayTransport::post(const std::string& body) {
  std::string key;
  try {
    key = nlohmann::json::parse(body).dump();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::oracle_unavailable, "replay transport got a non-JSON request");
  }
  const auto it = responses_.find(key);
  if (it == responses_.end()) fail(ErrorCode::oracle_unavailable, "no recorded response for request");
  return it->second;
}

RecordingTransport::RecordingTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& fixture)
    : inner_(std::move(inner)), out_(fixture, std::ios::app) {
  if (!out_) fail(ErrorCode::io, "cannot open " + fixture.string() + " for recording");
}

std::string RecordingTransport::post(const std::string& body) {
  auto response = inner_->post(body);
  std::lock_guard lock(mutex_);
  out_ << nlohmann::json{{"request", nlohmann::json::parse(body)}, {"response", response}}.dump() << '\n';
  out_.flush();
  return response;
}

RemoteClient::RemoteClient(std::unique_ptr<Transport> transport, RemoteConfig config)
    : transport_(std::move(transport)), config_(std::move(config)) {
  if (!transport_) fail(ErrorCode::config, "remote client needs a transport");
  if (config_.max_in_flight == 0) fail(ErrorCode::config, "oracle max_in_flight must be at least 1");
  if (config_.max_attempts == 0) fail(ErrorCode::config, "oracle max_attempts must be at least 1");
  if (!(config_.requests_per_second >= 0.0)) fail(ErrorCode::config, "oracle requests_per_second must be >= 0");
}

nlohmann::json RemoteClient::chat_request(std::string_view system, std::string_view user) const {
  return {
      {"model", config_.model},
      {"temperature", config_.temperature},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}})},
  };
}

std::size_t RemoteClient::requests_sent() const {
  std::lock_guard lock(mutex_);
  return sent_;
}

std::string RemoteClient::send_once(const std::string& body) {
  {
    std::unique_lock lock(mutex_);
    slot_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
    auto start = std::chrono::steady_clock::now();
    if (config_.requests_per_second > 0.0) {
      start = std::max(start, next_start_);
      next_start_ = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(1.0 / config_.requests_per_second));
    }
    ++sent_;
    lock.unlock();
    std::this_thread::sleep_until(start);
  }
  const auto done = [&] {
    std::lock_guard lock(mutex_);
    --in_flight_;
    slot_cv_.notify_one();
  };
  std::string response;
  try {
    response = transport_->post(body);
  } catch (...) {
    done();
    throw;
  }
  done();

  try {
    const auto j = nlohmann::json::parse(response);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::oracle_unavailable, "malformed chat-completion response");
  }
}

std::string RemoteClient::complete(std::string_view system, std::string_view user) {
  const auto body = chat_request(system, user).dump();
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      return send_once(body);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::oracle_unavailable || attempt >= config_.max_attempts) throw;
    }
  }
}

bool RemoteClient::same_meaning(std::string_view a, std::string_view b) {
  const auto user = judge_user_prompt(a, b);
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      return parse_remote_reply(send_once(chat_request(kJudgeSystemPrompt, user).dump()));
    } catch (const Error& e) {
      const bool retryable = e.code() == ErrorCode::oracle_unavailable || e.code() == ErrorCode::unparseable_reply;
      if (!retryable || attempt >= config_.max_attempts) throw;
    }
  }
}

std::string RemoteClient::explain_term(std::string_view term) {
  if (term.empty()) fail(ErrorCode::contract, "explain_term needs a non-empty term");
  return complete(kExplainSystemPrompt, explain_user_prompt(term));
}

}  // namespace synclust
