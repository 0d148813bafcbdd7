#include "damsa/cache.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "damsa/util/hash.hpp"

namespace damsa::client {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json result_to_json(const CompletionResult& r) {
  json j;
  j["text"] = r.text;
  j["prompt_tokens"] = r.prompt_tokens;
  j["completion_tokens"] = r.completion_tokens;
  j["tokens_estimated"] = r.tokens_estimated;
  j["latency_seconds"] = r.latency_seconds;
  j["provider_id"] = r.provider_id;
  j["retries"] = r.retries;
  return j;
}

CompletionResult result_from_json(const json& j) {
  CompletionResult r;
  r.text = j.at("text").get<std::string>();
  r.prompt_tokens = j.at("prompt_tokens").get<long>();
  r.completion_tokens = j.at("completion_tokens").get<long>();
  r.tokens_estimated = j.value("tokens_estimated", false);
  r.latency_seconds = j.at("latency_seconds").get<double>();
  r.provider_id = j.at("provider_id").get<std::string>();
  r.retries = j.value("retries", 0);
  return r;
}

}  // namespace

ResponseCache::ResponseCache(std::string directory)
    : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw ClientError(ClientError::Kind::Config,
                      "cannot create cache directory " + dir_ + ": " +
                          ec.message());
  }
}

std::string ResponseCache::key(const std::string& provider_id,
                               const GenerationParams& params,
                               const std::string& prompt) {
  return util::sha256_hex(provider_id + "\x1f" + params.canonical() + "\x1f" +
                          prompt);
}

std::string ResponseCache::path_for(const std::string& key) const {
  // Two-level fanout keeps directories small on large runs.
  return dir_ + "/" + key.substr(0, 2) + "/" + key + ".json";
}

std::optional<CompletionResult> ResponseCache::get(
    const std::string& key) const {
  const std::string path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    json j;
    in >> j;
    CompletionResult r = result_from_json(j);
    r.cached = true;
    r.latency_seconds = 0.0;
    return r;
  } catch (const std::exception&) {
    // Corrupt entry: treat as a miss so the caller re-fetches.
    ++warnings_;
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key,
                        const CompletionResult& result) {
  const std::string path = path_for(key);
  std::error_code ec;
  fs::create_directories(fs::path(path).parent_path(), ec);
  const std::string tmp =
      path + ".tmp." + std::to_string(
                           std::hash<std::thread::id>{}(
                               std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ClientError(ClientError::Kind::Config,
                        "cache directory not writable: " + dir_);
    }
    out << result_to_json(result).dump() << "\n";
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ClientError(ClientError::Kind::Config,
                      "cannot persist cache entry: " + ec.message());
  }
}

std::size_t ResponseCache::size() const {
  std::size_t n = 0;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(dir_, ec);
       !ec && it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file() && it->path().extension() == ".json") ++n;
  }
  return n;
}

void ResponseCache::evict_all() {
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    fs::remove_all(entry.path(), ec);
  }
}

CachedClient::CachedClient(std::shared_ptr<Provider> provider,
                           std::shared_ptr<ResponseCache> cache)
    : provider_(std::move(provider)), cache_(std::move(cache)) {}

CompletionResult CachedClient::complete(const std::string& prompt,
                                        const GenerationParams& params) {
  const std::string key =
      ResponseCache::key(provider_->id(), params, prompt);
  if (auto hit = cache_->get(key)) return *hit;

  // Identical concurrent misses share a single provider call.
  std::shared_future<CompletionResult> future;
  bool leader = false;
  std::promise<CompletionResult> promise;
  {
    std::lock_guard lock(mutex_);
    auto it = in_flight_.find(key);
    if (it == in_flight_.end()) {
      future = promise.get_future().share();
      in_flight_.emplace(key, future);
      leader = true;
    } else {
      future = it->second;
    }
  }
  if (!leader) return future.get();

  try {
    CompletionResult result = provider_->complete(prompt, params);
    cache_->put(key, result);
    promise.set_value(result);
    {
      std::lock_guard lock(mutex_);
      in_flight_.erase(key);
    }
    return result;
  } catch (...) {
    promise.set_exception(std::current_exception());
    {
      std::lock_guard lock(mutex_);
      in_flight_.erase(key);
    }
    throw;
  }
}

}  // namespace damsa::client
