#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "damsa/client.hpp"

namespace damsa::client {

// One scripted reaction to a matched prompt. A failure step raises the
// given error kind/status; a response step succeeds with fixed text,
// token counts and a simulated (not slept) latency.
struct MockStep {
  static MockStep respond(std::string text, long prompt_tokens = -1,
                          long completion_tokens = -1,
                          double latency_seconds = 0.001);
  static MockStep fail(int http_status);

  bool is_failure = false;
  int http_status = 0;
  std::string text;
  long prompt_tokens = -1;      // -1: estimate from prompt
  long completion_tokens = -1;  // -1: estimate from text
  double latency_seconds = 0.001;
};

// Prompt pattern: exact text, "prefix*" for prefix match, or "*" for
// catch-all. Rules are tried in registration order; first match wins.
struct MockRule {
  std::string pattern;
  std::vector<MockStep> steps;  // consumed in order; last step repeats
};

class MockProvider : public Provider {
 public:
  MockProvider(std::string provider_id, std::string model_id);

  void add_rule(MockRule rule);
  void add_response(const std::string& pattern, const std::string& text);

  std::string id() const override;
  std::string model_id() const override;
  CompletionResult complete(const std::string& prompt,
                            const GenerationParams& params) override;

  long call_count() const { return calls_.load(); }
  int max_observed_in_flight() const { return max_in_flight_.load(); }

  // After this many successful calls every further call fails hard;
  // simulates an interrupted run. 0 disables.
  void interrupt_after(long successful_calls);

 private:
  struct RuleState {
    MockRule rule;
    std::size_t next_step = 0;
  };

  std::string provider_id_;
  std::string model_id_;
  mutable std::mutex mutex_;
  std::vector<RuleState> rules_;
  std::atomic<long> calls_{0};
  std::atomic<long> successes_{0};
  long interrupt_after_ = 0;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

// Builds a mock provider from a registration table, validating that every
// pattern is reachable (no rule shadowed by an earlier catch-all).
std::shared_ptr<MockProvider> register_mock(const std::string& provider_id,
                                            const std::string& model_id,
                                            std::vector<MockRule> table);

// Mock table file: JSON array of {pattern, steps:[{text,...}|{fail:429}]}.
std::shared_ptr<MockProvider> load_mock_provider(const ProviderConfig& config);

}  // namespace damsa::client
