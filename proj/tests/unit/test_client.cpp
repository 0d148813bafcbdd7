#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include "damsa/cache.hpp"
#include "damsa/client.hpp"
#include "damsa/mock_provider.hpp"
#include "helpers.hpp"

using namespace damsa;
using namespace damsa::client;
using test_helpers::TempDir;
using test_helpers::read_file;
using test_helpers::write_file;

TEST_SUITE_BEGIN("client");

namespace {

GenerationParams params(const std::string& model = "test-model") {
  GenerationParams p;
  p.model_id = model;
  return p;
}

RetryPolicy no_sleep_retry(int max_retries = 3) {
  RetryPolicy policy;
  policy.max_retries = max_retries;
  policy.sleeper = [](double) {};
  return policy;
}

}  // namespace

TEST_CASE("generation params defaults and validation") {
  GenerationParams p;
  CHECK(p.max_tokens == 512);
  CHECK(p.temperature == doctest::Approx(0.3));
  CHECK(p.top_p == doctest::Approx(0.9));
  p.validate();

  p.max_tokens = 0;
  CHECK_THROWS_AS(p.validate(), ClientError);
  p = GenerationParams{};
  p.temperature = -0.1;
  CHECK_THROWS_AS(p.validate(), ClientError);
  p = GenerationParams{};
  p.top_p = 0.0;
  CHECK_THROWS_AS(p.validate(), ClientError);
}

TEST_CASE("mock catch-all answers every prompt") {
  auto mock = register_mock("m", "model", {{"*", {MockStep::respond("ok")}}});
  CHECK(mock->complete("anything", params()).text == "ok");
  CHECK(mock->complete("something else", params()).text == "ok");
  CHECK(mock->call_count() == 2);
}

TEST_CASE("mock first-match ordering with prefix patterns") {
  auto mock = register_mock(
      "m", "model",
      {{"Translate*", {MockStep::respond("translation")}},
       {"*", {MockStep::respond("fallback")}}});
  CHECK(mock->complete("Translate this", params()).text == "translation");
  CHECK(mock->complete("Evaluate this", params()).text == "fallback");
}

TEST_CASE("unmatched prompt raises an unmocked error naming the prompt") {
  auto mock = register_mock("m", "model",
                            {{"exact", {MockStep::respond("hit")}}});
  try {
    mock->complete("some very long prompt that nobody mocked", params());
    FAIL("expected ClientError");
  } catch (const ClientError& e) {
    CHECK(e.kind() == ClientError::Kind::Unmocked);
    CHECK(std::string(e.what()).find("some very long prompt") !=
          std::string::npos);
  }
}

TEST_CASE("rules behind a catch-all are rejected at registration") {
  CHECK_THROWS_AS(register_mock("m", "model",
                                {{"*", {MockStep::respond("a")}},
                                 {"shadowed", {MockStep::respond("b")}}}),
                  ClientError);
  CHECK_THROWS_AS(register_mock("m", "model", {{"p", {}}}), ClientError);
}

TEST_CASE("scripted fail-fail-ok succeeds under the retry policy") {
  auto mock = register_mock(
      "m", "model",
      {{"*",
        {MockStep::fail(429), MockStep::fail(500), MockStep::respond("ok")}}});
  RetryingProvider retrying(mock, no_sleep_retry(2));
  auto result = retrying.complete("p", params());
  CHECK(result.text == "ok");
  CHECK(result.retries == 2);
  CHECK(mock->call_count() == 3);
}

TEST_CASE("transient failures exhaust the retry budget") {
  auto mock =
      register_mock("m", "model", {{"*", {MockStep::fail(503)}}});
  RetryingProvider retrying(mock, no_sleep_retry(3));
  CHECK_THROWS_AS(retrying.complete("p", params()), ClientError);
  CHECK(mock->call_count() == 4);  // initial try + 3 retries
}

TEST_CASE("non-transient provider errors are not retried") {
  auto mock = register_mock("m", "model", {{"*", {MockStep::fail(400)}}});
  RetryingProvider retrying(mock, no_sleep_retry(3));
  try {
    retrying.complete("p", params());
    FAIL("expected ClientError");
  } catch (const ClientError& e) {
    CHECK(e.kind() == ClientError::Kind::Provider);
  }
  CHECK(mock->call_count() == 1);
}

TEST_CASE("mock token accounting uses script overrides or estimates") {
  auto mock = register_mock(
      "m", "model",
      {{"a", {MockStep::respond("text", 11, 7, 0.5)}},
       {"b", {MockStep::respond("xyz")}}});
  auto scripted = mock->complete("a", params());
  CHECK(scripted.prompt_tokens == 11);
  CHECK(scripted.completion_tokens == 7);
  CHECK(scripted.latency_seconds == doctest::Approx(0.5));
  CHECK_FALSE(scripted.tokens_estimated);

  auto estimated = mock->complete("b", params());
  CHECK(estimated.prompt_tokens == estimate_tokens("b"));
  CHECK(estimated.completion_tokens == estimate_tokens("xyz"));
  CHECK(estimated.tokens_estimated);
}

TEST_CASE("cache returns identical text with cached flag and zero latency") {
  TempDir tmp;
  auto cache = std::make_shared<ResponseCache>(tmp.dir());
  auto mock = register_mock(
      "m", "model", {{"*", {MockStep::respond("T", 5, 3, 0.25)}}});
  CachedClient cached(mock, cache);

  auto first = cached.complete("p", params());
  CHECK_FALSE(first.cached);
  CHECK(first.latency_seconds == doctest::Approx(0.25));

  auto second = cached.complete("p", params());
  CHECK(second.cached);
  CHECK(second.text == first.text);
  CHECK(second.latency_seconds == 0.0);
  CHECK(second.prompt_tokens == first.prompt_tokens);
  CHECK(mock->call_count() == 1);
}

TEST_CASE("cache keys include generation parameters") {
  TempDir tmp;
  auto cache = std::make_shared<ResponseCache>(tmp.dir());
  auto mock = register_mock("m", "model", {{"*", {MockStep::respond("T")}}});
  CachedClient cached(mock, cache);

  auto p1 = params();
  auto p2 = params();
  p2.temperature = 0.7;
  cached.complete("same prompt", p1);
  cached.complete("same prompt", p2);
  CHECK(mock->call_count() == 2);
  CHECK(cache->size() == 2);
}

TEST_CASE("corrupt cache entries degrade to misses with a warning") {
  TempDir tmp;
  auto cache = std::make_shared<ResponseCache>(tmp.dir());
  const std::string key = ResponseCache::key("m", params(), "p");
  CompletionResult result;
  result.text = "good";
  result.provider_id = "m";
  cache->put(key, result);
  REQUIRE(cache->get(key).has_value());

  // clobber the entry on disk
  const std::string path =
      tmp.dir() + "/" + key.substr(0, 2) + "/" + key + ".json";
  write_file(path, "{not json");
  CHECK_FALSE(cache->get(key).has_value());
  CHECK(cache->corruption_warnings() == 1);
}

TEST_CASE("concurrent identical misses share one provider call") {
  TempDir tmp;
  auto cache = std::make_shared<ResponseCache>(tmp.dir());
  auto mock = register_mock(
      "m", "model", {{"*", {MockStep::respond("shared")}}});
  CachedClient cached(mock, cache);

  constexpr int kThreads = 16;
  std::vector<std::thread> threads;
  std::vector<std::string> texts(kThreads);
  for (int i = 0; i < kThreads; ++i) {
    threads.emplace_back([&, i] {
      texts[i] = cached.complete("hot prompt", params()).text;
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& t : texts) CHECK(t == "shared");
  CHECK(mock->call_count() == 1);
  CHECK(cache->size() == 1);
}

TEST_CASE("bounded provider caps in-flight calls") {
  struct SlowProvider : Provider {
    std::atomic<int> in_flight{0};
    std::atomic<int> max_seen{0};
    std::string id() const override { return "slow"; }
    std::string model_id() const override { return "slow-model"; }
    CompletionResult complete(const std::string&,
                              const GenerationParams&) override {
      int now = ++in_flight;
      int seen = max_seen.load();
      while (now > seen && !max_seen.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(15));
      --in_flight;
      CompletionResult r;
      r.text = "done";
      r.provider_id = "slow";
      return r;
    }
  };
  auto slow = std::make_shared<SlowProvider>();
  BoundedProvider bounded(slow, 3);

  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&] { bounded.complete("p", params()); });
  }
  for (auto& t : threads) t.join();
  CHECK(slow->max_seen.load() <= 3);
  CHECK(slow->max_seen.load() >= 2);  // parallelism actually happened
}

TEST_CASE("http provider requires its credential before any network I/O") {
  ProviderConfig config;
  config.provider_id = "api";
  config.type = "http";
  config.base_url = "https://example.invalid/v1";
  config.model_id = "m";
  config.credential_env = "DAMSA_TEST_MISSING_CREDENTIAL";
  unsetenv("DAMSA_TEST_MISSING_CREDENTIAL");
  try {
    make_http_provider(config, no_sleep_retry());
    FAIL("expected ClientError");
  } catch (const ClientError& e) {
    CHECK(e.kind() == ClientError::Kind::Config);
  }
}

TEST_CASE("provider config file parsing") {
  TempDir tmp;
  write_file(tmp.file("providers.json"), R"([
    {"provider_id": "mock1", "type": "mock", "model_id": "m1",
     "script": "table.json", "max_in_flight": 2},
    {"provider_id": "sim1", "type": "sim", "model_id": "m2", "sim_seed": 9}
  ])");
  auto configs = load_provider_configs(tmp.file("providers.json"));
  REQUIRE(configs.size() == 2);
  CHECK(configs[0].provider_id == "mock1");
  CHECK(configs[0].max_in_flight == 2);
  CHECK(configs[1].type == "sim");
  CHECK(configs[1].sim_seed == 9);
}

TEST_CASE("sim provider is deterministic and phase-aware") {
  auto sim = make_sim_provider("sim", "sim-model", 5);
  auto a = sim->complete("Translate the following text", params());
  auto b = sim->complete("Translate the following text", params());
  CHECK(a.text == b.text);
  CHECK(a.latency_seconds == doctest::Approx(b.latency_seconds));

  auto verdict = sim->complete(
      "reply with the line:\nVERDICT: OK\n...", params());
  CHECK(verdict.text.rfind("VERDICT:", 0) == 0);
}

TEST_CASE("token estimate heuristic") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
}

TEST_SUITE_END();
