#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace testing {

inline std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

// Chat-completion endpoint on a loopback port, answered by `reply`.
class FakeEndpoint {
 public:
  using Reply = std::function<void(const nlohmann::json& request, httplib::Response&)>;

  explicit FakeEndpoint(Reply reply) : reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++active_;
      int seen = max_active_.load();
      while (now > seen && !max_active_.compare_exchange_weak(seen, now)) {
      }
      {
        std::lock_guard lock(mutex_);
        auth_.push_back(req.get_header_value("Authorization"));
        bodies_.push_back(nlohmann::json::parse(req.body));
      }
      reply_(bodies_.back(), res);
      --active_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::vector<nlohmann::json> bodies() {
    std::lock_guard lock(mutex_);
    return bodies_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mutex_);
    return auth_;
  }
  int max_active() const { return max_active_; }

 private:
  Reply reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  std::vector<nlohmann::json> bodies_;
  std::vector<std::string> auth_;
  std::atomic<int> active_{0};
  std::atomic<int> max_active_{0};
};

}  // namespace testing
