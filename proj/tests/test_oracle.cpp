#include <doctest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "support/fake_endpoint.hpp"
#include "support/fixtures.hpp"
#include "synclust/oracle.hpp"
#include "synclust/remote_oracle.hpp"

using namespace synclust;
using testing::completion;
using testing::FakeEndpoint;

namespace {

OracleTerm term(const std::string& text, const std::string& concept_id) { return {text, concept_id}; }

std::unique_ptr<Oracle> mock_oracle(double rate, std::uint64_t seed, std::optional<std::uint64_t> limit = {},
                                    std::optional<std::filesystem::path> cache = {}) {
  return std::make_unique<Oracle>(std::make_unique<MockOracle>(MockOracleConfig{rate, seed}), limit, cache);
}

}  // namespace

TEST_CASE("perfect mock equals gold concept equality") {
  auto o = mock_oracle(1.0, 4);
  CHECK(o->judge(term("aspirin", "C1"), term("acetylsalicylic acid", "C1")).same);
  CHECK_FALSE(o->judge(term("aspirin", "C1"), term("fever", "C2")).same);
  CHECK(o->judge(term("aspirin", "C1"), term("fever", "C2")).source == VerdictSource::cache);
}

TEST_CASE("second ask of a pair is a cache hit in either order") {
  auto o = mock_oracle(1.0, 0);
  const auto first = o->judge(term("a", "C1"), term("b", "C1"));
  CHECK(first.source == VerdictSource::mock);
  CHECK(first.latency.count() == 0);
  const auto second = o->judge(term("b", "C1"), term("a", "C1"));
  CHECK(second.source == VerdictSource::cache);
  CHECK(second.same == first.same);
  const auto b = o->budget();
  CHECK(b.queries_issued == 1);
  CHECK(b.cache_hits == 1);
}

TEST_CASE("mock agreement rate 0.8 over 10,000 pairs") {
  auto o = mock_oracle(0.8, 2024);
  int agree = 0;
  for (int i = 0; i < 10000; ++i) {
    const bool gold = i % 3 == 0;
    const auto v = o->judge(term("x" + std::to_string(i), "C" + std::to_string(i)),
                            term("y" + std::to_string(i), gold ? "C" + std::to_string(i) : "D"));
    agree += v.same == gold;
  }
  CHECK(agree / 10000.0 == doctest::Approx(0.8).epsilon(0.025));
}

TEST_CASE("mock verdicts depend on seed and pair only") {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 200; ++i) pairs.emplace_back("p" + std::to_string(i), "q" + std::to_string(i % 17));
  auto run = [&](bool reversed) {
    MockOracle m({0.5, 99});
    std::vector<bool> out(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const std::size_t i = reversed ? pairs.size() - 1 - k : k;
      out[i] = m.same_concept(term(pairs[i].first, "A"), term(pairs[i].second, "A"));
    }
    return out;
  };
  CHECK(run(false) == run(true));
  MockOracle m({0.5, 99});
  CHECK(m.same_concept(term("a", "A"), term("b", "B")) == m.same_concept(term("b", "B"), term("a", "A")));
}

TEST_CASE("mock needs concept ids and a valid rate") {
  MockOracle m({1.0, 0});
  CHECK_ERROR_CODE(m.same_concept({"a", {}}, {"b", {}}), ErrorCode::label);
  CHECK_ERROR_CODE(MockOracle({1.5, 0}), ErrorCode::config);
}

TEST_CASE("heuristic oracle normalizes case, punctuation and token order") {
  CHECK(HeuristicOracle::normalize("Acid, Acetylsalicylic") == "acetylsalicylic acid");
  Oracle o(std::make_unique<HeuristicOracle>());
  CHECK(o.judge("Acetylsalicylic acid", "acid, acetylsalicylic").same);
  CHECK_FALSE(o.judge("aspirin", "acetylsalicylic acid").same);
  CHECK(o.judge("x", "y").source == VerdictSource::heuristic);
}

TEST_CASE("empty texts are rejected") {
  auto o = mock_oracle(1.0, 0);
  CHECK_ERROR_CODE(o->judge(term("", "A"), term("b", "A")), ErrorCode::contract);
}

TEST_CASE("budget limit raises a budget error and cache hits stay free") {
  auto o = mock_oracle(1.0, 0, 2);
  o->judge(term("a", "A"), term("b", "A"));
  o->judge(term("a", "A"), term("c", "A"));
  CHECK_ERROR_CODE(o->judge(term("a", "A"), term("d", "A")), ErrorCode::budget);
  CHECK(o->judge(term("b", "A"), term("a", "A")).source == VerdictSource::cache);
  const auto b = o->budget();
  CHECK(b.queries_issued == 2);
  CHECK(b.limit == 2u);
}

TEST_CASE("budget law: issued + hits = resolved calls") {
  auto o = mock_oracle(0.9, 1);
  Rng rng(3);
  std::size_t calls = 0;
  for (int i = 0; i < 500; ++i) {
    o->judge(term("t" + std::to_string(uniform_index(rng, 30)), "A"), term("u" + std::to_string(uniform_index(rng, 30)), "A"));
    ++calls;
  }
  const auto b = o->budget();
  CHECK(b.queries_issued + b.cache_hits == calls);
  CHECK(b.queries_issued == o->cache().size());
}

TEST_CASE("cache persists across oracle instances") {
  testing::TempDir dir("cache");
  const auto path = dir / "cache.jsonl";
  bool first = false;
  {
    auto o = mock_oracle(0.5, 7, {}, path);
    first = o->judge(term("beta", "A"), term("alpha", "A")).same;
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("a") == "alpha");
  CHECK(j.at("b") == "beta");
  CHECK(j.at("same") == first);

  auto o = mock_oracle(0.5, 7, 0, path);
  const auto v = o->judge(term("alpha", "A"), term("beta", "A"));
  CHECK(v.source == VerdictSource::cache);
  CHECK(v.same == first);
  CHECK(o->budget().queries_issued == 0);
}

TEST_CASE("a torn last cache line is tolerated") {
  testing::TempDir dir("torn");
  std::ofstream(dir / "c.jsonl") << R"({"a":"x","b":"y","same":true})" << "\n" << R"({"a":"x","b)";
  VerdictCache cache(dir / "c.jsonl");
  CHECK(cache.lookup("y", "x") == true);
  CHECK(cache.size() == 1);
}

TEST_CASE("concurrent judges of one pair resolve once") {
  auto o = mock_oracle(1.0, 0);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 50; ++k) o->judge(term("p" + std::to_string(k), "A"), term("q", "A"));
    });
  }
  for (auto& t : threads) t.join();
  const auto b = o->budget();
  CHECK(b.queries_issued == 50);
  CHECK(b.cache_hits == 8 * 50 - 50);
}

TEST_CASE("reply parsing") {
  CHECK(parse_remote_reply("Yes."));
  CHECK_FALSE(parse_remote_reply("no"));
  CHECK(parse_remote_reply("  \"YES\", they are synonyms"));
  CHECK_FALSE(parse_remote_reply("No, not the same."));
  CHECK_ERROR_CODE(parse_remote_reply("They are similar"), ErrorCode::unparseable_reply);
  CHECK_ERROR_CODE(parse_remote_reply("yesterday"), ErrorCode::unparseable_reply);
  CHECK_ERROR_CODE(parse_remote_reply(""), ErrorCode::unparseable_reply);
}

TEST_CASE("prompt strings") {
  CHECK(kJudgeSystemPrompt == "You are a helpful assistant for term clustering.");
  CHECK(judge_user_prompt("aspirin", "acetylsalicylic acid") ==
        "Do the terms aspirin and acetylsalicylic acid have roughly the same meaning? Please answer with yes or no only.");
  CHECK(kExplainSystemPrompt ==
        "You are a helpful assistant for providing explanations of biomedical terms. "
        "You should be regardless of capitalization.");
  CHECK(explain_user_prompt("aziridine") == "What is the term 'aziridine'? Please explain in 50 words as if in a dictionary.");
}

TEST_CASE("remote judge: wire format and bearer credential") {
  FakeEndpoint ep([](const nlohmann::json&, httplib::Response& res) { res.set_content(completion("Yes."), "application/json"); });
  auto client = std::make_shared<RemoteClient>(std::make_unique<HttpTransport>(ep.url(), "sk-test"));
  Oracle o(std::make_unique<RemoteOracle>(client));
  const auto v = o.judge("aspirin", "acetylsalicylic acid");
  CHECK(v.same);
  CHECK(v.source == VerdictSource::remote);
  const auto bodies = ep.bodies();
  REQUIRE(bodies.size() == 1);
  CHECK(bodies[0].at("model") == "gpt-3.5-turbo");
  CHECK(bodies[0].at("temperature") == 0.0);
  CHECK(bodies[0].at("messages").at(0).at("role") == "system");
  CHECK(bodies[0].at("messages").at(0).at("content") == "You are a helpful assistant for term clustering.");
  CHECK(bodies[0].at("messages").at(1).at("role") == "user");
  CHECK(bodies[0].at("messages").at(1).at("content") == judge_user_prompt("aspirin", "acetylsalicylic acid"));
  CHECK(ep.auth().at(0) == "Bearer sk-test");
}

TEST_CASE("remote: one retry on an unparseable reply, then failure") {
  std::atomic<int> calls{0};
  FakeEndpoint ep([&](const nlohmann::json&, httplib::Response& res) {
    res.set_content(completion(++calls == 1 ? "Perhaps" : "No"), "application/json");
  });
  RemoteClient client(std::make_unique<HttpTransport>(ep.url(), std::nullopt));
  CHECK_FALSE(client.same_meaning("a", "b"));
  CHECK(client.requests_sent() == 2);

  FakeEndpoint vague([](const nlohmann::json&, httplib::Response& res) {
    res.set_content(completion("They are similar"), "application/json");
  });
  RemoteClient stubborn(std::make_unique<HttpTransport>(vague.url(), std::nullopt));
  CHECK_ERROR_CODE(stubborn.same_meaning("a", "b"), ErrorCode::unparseable_reply);
  CHECK(stubborn.requests_sent() == 2);
}

TEST_CASE("remote: transport failures surface as oracle-unavailable without the credential") {
  FakeEndpoint ep([](const nlohmann::json&, httplib::Response& res) { res.status = 500; });
  auto client = std::make_shared<RemoteClient>(std::make_unique<HttpTransport>(ep.url(), "sk-secret-123"));
  Oracle o(std::make_unique<RemoteOracle>(client), 10);
  try {
    o.judge("a", "b");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::oracle_unavailable);
    CHECK(std::string(e.what()).find("sk-secret-123") == std::string::npos);
  }
  CHECK(client->requests_sent() == 2);
  CHECK(o.budget().queries_issued == 0);
  CHECK(o.cache().size() == 0);

  RemoteClient dead(std::make_unique<HttpTransport>("http://127.0.0.1:9/v1", std::nullopt, std::chrono::seconds(1)));
  CHECK_ERROR_CODE(dead.same_meaning("a", "b"), ErrorCode::oracle_unavailable);
  CHECK_ERROR_CODE(HttpTransport("ftp://x", std::nullopt), ErrorCode::config);
}

TEST_CASE("remote: in-flight cap and request rate") {
  FakeEndpoint ep([](const nlohmann::json&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    res.set_content(completion("yes"), "application/json");
  });
  RemoteConfig cfg;
  cfg.max_in_flight = 2;
  auto client = std::make_shared<RemoteClient>(std::make_unique<HttpTransport>(ep.url(), std::nullopt), cfg);
  Oracle o(std::make_unique<RemoteOracle>(client));
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&, i] { o.judge("a" + std::to_string(i), "b"); });
  for (auto& t : threads) t.join();
  CHECK(ep.max_active() <= 2);
  CHECK(o.budget().queries_issued == 6);

  RemoteConfig paced;
  paced.requests_per_second = 20;
  RemoteClient slow(std::make_unique<HttpTransport>(ep.url(), std::nullopt), paced);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) slow.same_meaning("x", std::to_string(i));
  CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(195));
}

TEST_CASE("explain_term: prompts, verbatim reply, guard") {
  const std::string text = "Aziridine is a three-membered heterocycle containing one nitrogen.";
  FakeEndpoint ep([&](const nlohmann::json&, httplib::Response& res) { res.set_content(completion(text), "application/json"); });
  RemoteClient client(std::make_unique<HttpTransport>(ep.url(), std::nullopt));
  CHECK(client.explain_term("aziridine") == text);
  const auto body = ep.bodies().at(0);
  CHECK(body.at("messages").at(0).at("content") == std::string(kExplainSystemPrompt));
  CHECK(body.at("messages").at(1).at("content") == explain_user_prompt("aziridine"));
  CHECK_ERROR_CODE(client.explain_term(""), ErrorCode::contract);
}

TEST_CASE("recorded transcripts replay byte-identically") {
  testing::TempDir dir("replay");
  const auto fixture = dir / "fixture.jsonl";
  const std::string reply = "A \"quoted\"\nmulti-line reply, with unicode: \xce\xb2-lactam.";
  {
    FakeEndpoint ep([&](const nlohmann::json&, httplib::Response& res) { res.set_content(completion(reply), "application/json"); });
    RemoteClient rec(std::make_unique<RecordingTransport>(std::make_unique<HttpTransport>(ep.url(), std::nullopt), fixture));
    CHECK(rec.explain_term("penicillin") == reply);
  }
  RemoteClient replay(std::make_unique<ReplayTransport>(fixture));
  CHECK(replay.explain_term("penicillin") == reply);
  CHECK_ERROR_CODE(replay.explain_term("unrecorded"), ErrorCode::oracle_unavailable);
}
