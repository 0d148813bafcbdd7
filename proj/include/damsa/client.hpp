#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "damsa/errors.hpp"

namespace damsa::client {

struct GenerationParams {
  std::string model_id;
  int max_tokens = 512;
  double temperature = 0.3;
  double top_p = 0.9;

  void validate() const;
  // Canonical string used in cache keys and run manifests.
  std::string canonical() const;
};

struct CompletionResult {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool tokens_estimated = false;
  double latency_seconds = 0.0;  // 0 for cache hits
  std::string provider_id;
  bool cached = false;
  int retries = 0;
};

class ClientError : public std::runtime_error {
 public:
  enum class Kind { Config, Transport, Provider, Unmocked };

  ClientError(Kind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Single-turn chat completion endpoint. Implementations must be safe for
// concurrent complete() calls.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  virtual std::string model_id() const = 0;
  virtual CompletionResult complete(const std::string& prompt,
                                    const GenerationParams& params) = 0;
};

// Up to max_retries re-attempts on transient failures (timeouts, 429, 5xx)
// with exponential backoff and jitter.
struct RetryPolicy {
  int max_retries = 3;
  double base_delay_seconds = 0.25;
  double max_delay_seconds = 8.0;
  std::uint64_t jitter_seed = 0;
  // Injectable so tests run without real sleeps.
  std::function<void(double)> sleeper;

  double delay_for_attempt(int attempt, std::uint64_t salt) const;
};

// Applies the retry policy around any provider: transient failures
// (ClientError::Kind::Transport) are retried with backoff; the attempts
// used are recorded in CompletionResult::retries.
class RetryingProvider : public Provider {
 public:
  RetryingProvider(std::shared_ptr<Provider> inner, RetryPolicy policy);
  std::string id() const override;
  std::string model_id() const override;
  CompletionResult complete(const std::string& prompt,
                            const GenerationParams& params) override;

 private:
  std::shared_ptr<Provider> inner_;
  RetryPolicy policy_;
};

// Caps in-flight complete() calls on the wrapped provider at K.
class BoundedProvider : public Provider {
 public:
  BoundedProvider(std::shared_ptr<Provider> inner, int max_in_flight);
  std::string id() const override;
  std::string model_id() const override;
  CompletionResult complete(const std::string& prompt,
                            const GenerationParams& params) override;

 private:
  struct Impl;
  std::shared_ptr<Provider> inner_;
  std::shared_ptr<Impl> impl_;
};

struct ProviderConfig {
  std::string provider_id;
  std::string type;  // "http", "mock" or "sim"
  std::string base_url;
  std::string model_id;
  std::string credential_env;
  int max_in_flight = 4;
  std::string script_path;    // mock: response table file
  std::uint64_t sim_seed = 0;  // sim: determinism seed
};

std::vector<ProviderConfig> load_provider_configs(const std::string& path);

// Instantiates a provider from its config entry (wrapped with the in-flight
// bound). HTTP providers resolve their credential from the environment at
// construction time and fail with a Config error if it is missing.
std::shared_ptr<Provider> make_provider(const ProviderConfig& config,
                                        const RetryPolicy& retry = {});

// OpenAI-style chat-completions adapter over HTTP(S).
std::shared_ptr<Provider> make_http_provider(const ProviderConfig& config,
                                             const RetryPolicy& retry);

// Deterministic offline provider: fabricates translations, verdicts and
// refinements as pure functions of (prompt, seed). Useful for dry runs and
// end-to-end determinism checks.
std::shared_ptr<Provider> make_sim_provider(const std::string& provider_id,
                                            const std::string& model_id,
                                            std::uint64_t seed);

// Token estimate used when a provider response carries no usage block.
long estimate_tokens(std::string_view text);

}  // namespace damsa::client
