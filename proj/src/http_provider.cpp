#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "damsa/client.hpp"

namespace damsa::client {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string scheme_host_port;  // e.g. "https://api.example.com"
  std::string path_prefix;       // e.g. "/v1"
};

ParsedUrl parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ClientError(ClientError::Kind::Config,
                      "base_url must include a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = base_url;
  } else {
    out.scheme_host_port = base_url.substr(0, path_start);
    out.path_prefix = base_url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
      out.path_prefix.pop_back();
  }
  return out;
}

// One attempt per complete() call; transient failures surface as Transport
// errors so RetryingProvider can re-issue them.
class HttpProvider : public Provider {
 public:
  HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.credential_env.empty()) {
      throw ClientError(ClientError::Kind::Config,
                        "provider '" + config_.provider_id +
                            "' has no credential_env configured");
    }
    const char* cred = std::getenv(config_.credential_env.c_str());
    if (cred == nullptr || *cred == '\0') {
      throw ClientError(ClientError::Kind::Config,
                        "credential environment variable " +
                            config_.credential_env + " is not set");
    }
    credential_ = cred;
    url_ = parse_base_url(config_.base_url);
  }

  std::string id() const override { return config_.provider_id; }
  std::string model_id() const override { return config_.model_id; }

  CompletionResult complete(const std::string& prompt,
                            const GenerationParams& params) override {
    params.validate();
    json body;
    body["model"] = params.model_id.empty() ? config_.model_id
                                            : params.model_id;
    body["messages"] = json::array({json{{"role", "user"},
                                         {"content", prompt}}});
    body["max_tokens"] = params.max_tokens;
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;

    httplib::Client cli(url_.scheme_host_port);
    cli.set_connection_timeout(15, 0);
    cli.set_read_timeout(120, 0);
    cli.set_bearer_token_auth(credential_);

    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(url_.path_prefix + "/chat/completions",
                        body.dump(), "application/json");
    const auto end = std::chrono::steady_clock::now();
    const double latency = std::chrono::duration<double>(end - start).count();

    if (!res) {
      throw ClientError(ClientError::Kind::Transport,
                        "transport failure talking to " + config_.provider_id +
                            ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
      throw ClientError(ClientError::Kind::Transport,
                        config_.provider_id + " returned status " +
                            std::to_string(res->status));
    }
    if (res->status != 200) {
      throw ClientError(ClientError::Kind::Provider,
                        config_.provider_id + " returned status " +
                            std::to_string(res->status) + ": " +
                            res->body.substr(0, 200));
    }

    json payload;
    try {
      payload = json::parse(res->body);
    } catch (const json::exception& e) {
      throw ClientError(ClientError::Kind::Provider,
                        "unparseable response from " + config_.provider_id +
                            ": " + e.what());
    }

    CompletionResult result;
    result.provider_id = config_.provider_id;
    result.latency_seconds = latency;
    try {
      result.text =
          payload.at("choices").at(0).at("message").at("content")
              .get<std::string>();
    } catch (const json::exception&) {
      throw ClientError(ClientError::Kind::Provider,
                        "response from " + config_.provider_id +
                            " carries no message content");
    }
    if (payload.contains("usage") && payload["usage"].is_object()) {
      const auto& usage = payload["usage"];
      result.prompt_tokens = usage.value("prompt_tokens", 0L);
      result.completion_tokens = usage.value("completion_tokens", 0L);
    }
    if (result.prompt_tokens <= 0 && result.completion_tokens <= 0) {
      result.prompt_tokens = estimate_tokens(prompt);
      result.completion_tokens = estimate_tokens(result.text);
      result.tokens_estimated = true;
    }
    return result;
  }

 private:
  ProviderConfig config_;
  std::string credential_;
  ParsedUrl url_;
};

}  // namespace

std::shared_ptr<Provider> make_http_provider(const ProviderConfig& config,
                                             const RetryPolicy& retry) {
  return std::make_shared<RetryingProvider>(
      std::make_shared<HttpProvider>(config), retry);
}

}  // namespace damsa::client
