#pragma once

#include <atomic>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "damsa/client.hpp"

namespace damsa::client {

// On-disk completion cache, one JSON file per key in a content-addressed
// directory. Writes are atomic (temp file + rename); corrupt entries count
// as misses and are reported through the warning counter, never thrown.
class ResponseCache {
 public:
  explicit ResponseCache(std::string directory);

  static std::string key(const std::string& provider_id,
                         const GenerationParams& params,
                         const std::string& prompt);

  std::optional<CompletionResult> get(const std::string& key) const;
  void put(const std::string& key, const CompletionResult& result);

  std::size_t size() const;     // entries on disk
  void evict_all();
  long corruption_warnings() const { return warnings_; }

  const std::string& directory() const { return dir_; }

 private:
  std::string path_for(const std::string& key) const;

  std::string dir_;
  mutable std::atomic<long> warnings_{0};
};

// Cache-through completion. Hits return the stored result with cached=true
// and latency 0; misses delegate to the provider and persist the result.
// Concurrent identical misses share one in-flight provider call.
class CachedClient {
 public:
  CachedClient(std::shared_ptr<Provider> provider,
               std::shared_ptr<ResponseCache> cache);

  CompletionResult complete(const std::string& prompt,
                            const GenerationParams& params);

  Provider& provider() { return *provider_; }

 private:
  std::shared_ptr<Provider> provider_;
  std::shared_ptr<ResponseCache> cache_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<CompletionResult>> in_flight_;
};

}  // namespace damsa::client
