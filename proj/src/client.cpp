#include "damsa/client.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "damsa/mock_provider.hpp"
#include "damsa/util/hash.hpp"
#include "damsa/util/utf8.hpp"

namespace damsa::client {

using nlohmann::json;

void GenerationParams::validate() const {
  if (max_tokens < 1) throw ClientError(ClientError::Kind::Config,
                                        "max_tokens must be >= 1");
  if (temperature < 0) throw ClientError(ClientError::Kind::Config,
                                         "temperature must be >= 0");
  if (top_p <= 0 || top_p > 1) throw ClientError(ClientError::Kind::Config,
                                                 "top_p must be in (0, 1]");
}

std::string GenerationParams::canonical() const {
  std::ostringstream os;
  os << "model=" << model_id << "|max_tokens=" << max_tokens
     << "|temperature=" << temperature << "|top_p=" << top_p;
  return os.str();
}

double RetryPolicy::delay_for_attempt(int attempt, std::uint64_t salt) const {
  double delay = base_delay_seconds * std::pow(2.0, attempt);
  delay = std::min(delay, max_delay_seconds);
  // Deterministic jitter in [0, 0.5*delay): splitmix-style mix of seed+salt.
  std::uint64_t z = jitter_seed + salt * 0x9E3779B97F4A7C15ULL +
                    std::uint64_t(attempt) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  double unit = double(z >> 11) / double(1ULL << 53);
  return delay * (1.0 + 0.5 * unit) / 1.5;
}

long estimate_tokens(std::string_view text) {
  // Rough budget heuristic: one token per 4 bytes, at least 1 for
  // non-empty text.
  if (text.empty()) return 0;
  return std::max<long>(1, long((text.size() + 3) / 4));
}

RetryingProvider::RetryingProvider(std::shared_ptr<Provider> inner,
                                   RetryPolicy policy)
    : inner_(std::move(inner)), policy_(std::move(policy)) {}

std::string RetryingProvider::id() const { return inner_->id(); }
std::string RetryingProvider::model_id() const { return inner_->model_id(); }

CompletionResult RetryingProvider::complete(const std::string& prompt,
                                            const GenerationParams& params) {
  const std::uint64_t salt =
      std::hash<std::string>{}(prompt) ^ std::hash<std::string>{}(id());
  for (int attempt = 0;; ++attempt) {
    try {
      CompletionResult result = inner_->complete(prompt, params);
      result.retries = attempt;
      return result;
    } catch (const ClientError& e) {
      if (e.kind() != ClientError::Kind::Transport ||
          attempt >= policy_.max_retries) {
        throw;
      }
      double delay = policy_.delay_for_attempt(attempt, salt);
      if (policy_.sleeper) {
        policy_.sleeper(delay);
      } else {
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
    }
  }
}

struct BoundedProvider::Impl {
  explicit Impl(int k) : semaphore(k) {}
  std::counting_semaphore<> semaphore;
};

BoundedProvider::BoundedProvider(std::shared_ptr<Provider> inner,
                                 int max_in_flight)
    : inner_(std::move(inner)),
      impl_(std::make_shared<Impl>(std::max(1, max_in_flight))) {}

std::string BoundedProvider::id() const { return inner_->id(); }
std::string BoundedProvider::model_id() const { return inner_->model_id(); }

CompletionResult BoundedProvider::complete(const std::string& prompt,
                                           const GenerationParams& params) {
  impl_->semaphore.acquire();
  try {
    CompletionResult result = inner_->complete(prompt, params);
    impl_->semaphore.release();
    return result;
  } catch (...) {
    impl_->semaphore.release();
    throw;
  }
}

std::vector<ProviderConfig> load_provider_configs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ClientError(ClientError::Kind::Config,
                             "cannot open provider config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ClientError(ClientError::Kind::Config,
                      "malformed provider config " + path + ": " + e.what());
  }
  if (!j.is_array())
    throw ClientError(ClientError::Kind::Config,
                      "provider config must be a JSON array");
  std::vector<ProviderConfig> configs;
  for (const auto& entry : j) {
    ProviderConfig c;
    c.provider_id = entry.at("provider_id").get<std::string>();
    c.type = entry.value("type", std::string("http"));
    c.base_url = entry.value("base_url", std::string());
    c.model_id = entry.at("model_id").get<std::string>();
    c.credential_env = entry.value("credential_env", std::string());
    c.max_in_flight = entry.value("max_in_flight", 4);
    c.script_path = entry.value("script", std::string());
    c.sim_seed = entry.value("sim_seed", std::uint64_t(0));
    configs.push_back(std::move(c));
  }
  return configs;
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& config,
                                        const RetryPolicy& retry) {
  std::shared_ptr<Provider> provider;
  if (config.type == "http") {
    provider = make_http_provider(config, retry);
  } else if (config.type == "mock") {
    provider = std::make_shared<RetryingProvider>(load_mock_provider(config),
                                                  retry);
  } else if (config.type == "sim") {
    provider = make_sim_provider(config.provider_id, config.model_id,
                                 config.sim_seed);
  } else {
    throw ClientError(ClientError::Kind::Config,
                      "unknown provider type '" + config.type + "'");
  }
  return std::make_shared<BoundedProvider>(provider, config.max_in_flight);
}

namespace {

// Deterministic simulation provider. Translate prompts yield a stable
// shuffle of the source line, evaluate prompts yield a verdict keyed on the
// prompt hash, refine prompts yield a marked rewrite.
class SimProvider : public Provider {
 public:
  SimProvider(std::string provider_id, std::string model_id,
              std::uint64_t seed)
      : provider_id_(std::move(provider_id)),
        model_id_(std::move(model_id)),
        seed_(seed) {}

  std::string id() const override { return provider_id_; }
  std::string model_id() const override { return model_id_; }

  CompletionResult complete(const std::string& prompt,
                            const GenerationParams& params) override {
    params.validate();
    const std::string digest =
        util::sha256_hex(std::to_string(seed_) + "|" + prompt);
    CompletionResult result;
    result.provider_id = provider_id_;
    if (prompt.find("VERDICT:") != std::string::npos) {
      // Evaluate phase: half the verdicts are clean.
      bool clean = (digest[0] % 2) == 0;
      result.text = clean ? "VERDICT: OK"
                          : "VERDICT: ERRORS\nmeaning drift near \"" +
                                digest.substr(0, 8) + "\"";
    } else if (prompt.find("Reviewer feedback:") != std::string::npos) {
      result.text = "رجع " + digest.substr(0, 6);
    } else {
      result.text = "ترجمة " + digest.substr(0, 10);
    }
    result.prompt_tokens = estimate_tokens(prompt);
    result.completion_tokens = estimate_tokens(result.text);
    result.tokens_estimated = true;
    // Simulated latency in [0.05, 0.3), a pure function of the digest.
    result.latency_seconds =
        0.05 + double(std::stoul(digest.substr(8, 4), nullptr, 16)) / 65536.0 *
                   0.25;
    return result;
  }

 private:
  std::string provider_id_;
  std::string model_id_;
  std::uint64_t seed_;
};

}  // namespace

std::shared_ptr<Provider> make_sim_provider(const std::string& provider_id,
                                            const std::string& model_id,
                                            std::uint64_t seed) {
  return std::make_shared<SimProvider>(provider_id, model_id, seed);
}

}  // namespace damsa::client
