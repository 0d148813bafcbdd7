#include "damsa/mock_provider.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace damsa::client {

using nlohmann::json;

MockStep MockStep::respond(std::string text, long prompt_tokens,
                           long completion_tokens, double latency_seconds) {
  MockStep s;
  s.text = std::move(text);
  s.prompt_tokens = prompt_tokens;
  s.completion_tokens = completion_tokens;
  s.latency_seconds = latency_seconds;
  return s;
}

MockStep MockStep::fail(int http_status) {
  MockStep s;
  s.is_failure = true;
  s.http_status = http_status;
  return s;
}

MockProvider::MockProvider(std::string provider_id, std::string model_id)
    : provider_id_(std::move(provider_id)), model_id_(std::move(model_id)) {}

void MockProvider::add_rule(MockRule rule) {
  std::lock_guard lock(mutex_);
  rules_.push_back({std::move(rule), 0});
}

void MockProvider::add_response(const std::string& pattern,
                                const std::string& text) {
  add_rule({pattern, {MockStep::respond(text)}});
}

void MockProvider::interrupt_after(long successful_calls) {
  std::lock_guard lock(mutex_);
  interrupt_after_ = successful_calls;
}

std::string MockProvider::id() const { return provider_id_; }
std::string MockProvider::model_id() const { return model_id_; }

CompletionResult MockProvider::complete(const std::string& prompt,
                                        const GenerationParams& params) {
  params.validate();
  int now = ++in_flight_;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Guard {
    std::atomic<int>& gauge;
    ~Guard() { --gauge; }
  } guard{in_flight_};

  ++calls_;
  MockStep step;
  {
    std::lock_guard lock(mutex_);
    RuleState* match = nullptr;
    for (auto& state : rules_) {
      const std::string& pat = state.rule.pattern;
      bool hit = false;
      if (pat == "*") {
        hit = true;
      } else if (!pat.empty() && pat.back() == '*') {
        hit = prompt.rfind(pat.substr(0, pat.size() - 1), 0) == 0;
      } else {
        hit = prompt == pat;
      }
      if (hit) {
        match = &state;
        break;
      }
    }
    if (match == nullptr) {
      throw ClientError(ClientError::Kind::Unmocked,
                        "unmocked prompt: \"" + prompt.substr(0, 60) +
                            (prompt.size() > 60 ? "..." : "") + "\"");
    }
    const auto& steps = match->rule.steps;
    step = steps[std::min(match->next_step, steps.size() - 1)];
    if (match->next_step + 1 < steps.size()) ++match->next_step;

    if (interrupt_after_ > 0 && successes_.load() >= interrupt_after_) {
      throw ClientError(ClientError::Kind::Transport,
                        "mock interrupted after " +
                            std::to_string(interrupt_after_) + " calls");
    }
  }

  if (step.is_failure) {
    if (step.http_status == 429 || step.http_status >= 500) {
      throw ClientError(ClientError::Kind::Transport,
                        "mock transient failure (status " +
                            std::to_string(step.http_status) + ")");
    }
    throw ClientError(ClientError::Kind::Provider,
                      "mock provider error (status " +
                          std::to_string(step.http_status) + ")");
  }

  CompletionResult result;
  result.text = step.text;
  result.prompt_tokens =
      step.prompt_tokens >= 0 ? step.prompt_tokens : estimate_tokens(prompt);
  result.completion_tokens = step.completion_tokens >= 0
                                 ? step.completion_tokens
                                 : estimate_tokens(step.text);
  result.tokens_estimated =
      step.prompt_tokens < 0 || step.completion_tokens < 0;
  result.latency_seconds = step.latency_seconds;
  result.provider_id = provider_id_;
  ++successes_;
  return result;
}

std::shared_ptr<MockProvider> register_mock(const std::string& provider_id,
                                            const std::string& model_id,
                                            std::vector<MockRule> table) {
  auto provider = std::make_shared<MockProvider>(provider_id, model_id);
  bool saw_catch_all = false;
  for (auto& rule : table) {
    if (saw_catch_all) {
      throw ClientError(ClientError::Kind::Config,
                        "mock rule '" + rule.pattern +
                            "' is unreachable behind a catch-all pattern");
    }
    if (rule.steps.empty()) {
      throw ClientError(ClientError::Kind::Config,
                        "mock rule '" + rule.pattern + "' has no steps");
    }
    if (rule.pattern == "*") saw_catch_all = true;
    provider->add_rule(std::move(rule));
  }
  return provider;
}

std::shared_ptr<MockProvider> load_mock_provider(
    const ProviderConfig& config) {
  if (config.script_path.empty()) {
    throw ClientError(ClientError::Kind::Config,
                      "mock provider '" + config.provider_id +
                          "' needs a script file");
  }
  std::ifstream in(config.script_path, std::ios::binary);
  if (!in) throw ClientError(ClientError::Kind::Config,
                             "cannot open mock script " + config.script_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ClientError(ClientError::Kind::Config,
                      "malformed mock script: " + std::string(e.what()));
  }
  std::vector<MockRule> table;
  for (const auto& entry : j) {
    MockRule rule;
    rule.pattern = entry.at("pattern").get<std::string>();
    for (const auto& sj : entry.at("steps")) {
      if (sj.contains("fail")) {
        rule.steps.push_back(MockStep::fail(sj["fail"].get<int>()));
      } else {
        MockStep s = MockStep::respond(sj.at("text").get<std::string>());
        if (sj.contains("prompt_tokens"))
          s.prompt_tokens = sj["prompt_tokens"].get<long>();
        if (sj.contains("completion_tokens"))
          s.completion_tokens = sj["completion_tokens"].get<long>();
        if (sj.contains("latency"))
          s.latency_seconds = sj["latency"].get<double>();
        rule.steps.push_back(std::move(s));
      }
    }
    table.push_back(std::move(rule));
  }
  return register_mock(config.provider_id, config.model_id, std::move(table));
}

}  // namespace damsa::client
