#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "damsa/cache.hpp"
#include "damsa/client.hpp"
#include "damsa/corpus.hpp"
#include "damsa/prompt.hpp"

namespace damsa::pipeline {

class ExtractionError : public DataError {
 public:
  explicit ExtractionError(const std::string& msg) : DataError(msg) {}
};

// Cleans a raw completion into the bare translation: trims whitespace,
// unwraps a surrounding code fence, and drops a leading label line such as
// "MSA translation:". Throws ExtractionError when nothing but boilerplate
// remains.
std::string extract_translation(const std::string& raw);

struct Verdict {
  bool clean = false;
  std::string feedback;
  // No parseable VERDICT line was found; the full text became feedback and
  // the verdict defaulted to not-clean.
  bool used_fallback = false;
};

// Total function: any text yields a verdict, via the fallback if needed.
Verdict parse_verdict(const std::string& raw);

enum class PhaseName { Single, Translate, Evaluate, Refine };
std::string to_string(PhaseName p);

struct PhaseTrace {
  PhaseName name = PhaseName::Single;
  std::string prompt;
  std::string raw_response;
  double latency_seconds = 0.0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool cached = false;
  // Evaluate phase after a clean verdict: charged in cost accounting but
  // not part of the hypothesis lineage.
  bool advisory = false;
};

enum class RecordStatus { OK, Failed };

struct TranslationRecord {
  std::string segment_id;
  prompt::PromptStrategy strategy;
  std::string model_id;
  std::string provider_id;
  std::string hypothesis;
  std::vector<PhaseTrace> phases;
  RecordStatus status = RecordStatus::OK;
  std::optional<bool> verdict_clean;  // AraTEaR only
  bool verdict_fallback = false;
  std::string error;

  double total_latency() const;
  long total_prompt_tokens() const;
  long total_completion_tokens() const;
};

struct RunConfig {
  client::GenerationParams params;
  prompt::Labeling labeling = prompt::Labeling::ExplicitDialect;
  int concurrency = 4;
  // Default: a clean self-evaluation skips the refine call (2 calls total).
  bool skip_refine_on_clean = true;
  double failure_rate_threshold = 0.10;
  std::uint64_t seed = 0;
  const prompt::ExemplarStore* exemplars = nullptr;
  prompt::TemplateSet templates = prompt::default_templates();
};

// One completion path: through the cache when one is attached.
class Completer {
 public:
  Completer(std::shared_ptr<client::Provider> provider,
            std::shared_ptr<client::ResponseCache> cache);

  client::CompletionResult complete(const std::string& prompt,
                                    const client::GenerationParams& params);
  client::Provider& provider() { return *provider_; }

 private:
  std::shared_ptr<client::Provider> provider_;
  std::unique_ptr<client::CachedClient> cached_;
};

TranslationRecord run_segment(const corpus::ParallelSegment& segment,
                              const prompt::PromptStrategy& strategy,
                              Completer& completer, const RunConfig& config);

struct RunManifest {
  std::string split_name;
  std::string split_hash;
  std::vector<std::string> strategies;
  std::vector<std::string> providers;
  std::vector<std::string> models;
  std::string params;
  std::uint64_t seed = 0;
  std::string code_version;
  std::string chrf_signature;  // filled by the scoring step
  std::string bleu_signature;

  std::string hash() const;
};

struct ExperimentResult {
  std::vector<TranslationRecord> records;  // canonical order
  std::size_t failed_count = 0;
  std::vector<std::string> failed_ids;  // "segment|strategy|provider"
  bool aborted = false;
  long ara_clean_count = 0;
  long ara_refined_count = 0;
  long verdict_fallback_count = 0;
  RunManifest manifest;
};

// Attempts every (segment x strategy x provider) cell once, with at most
// config.concurrency cells in flight. Records come back in canonical
// (segment_id, strategy, provider) order regardless of scheduling. Aborts
// early (partial records kept, aborted=true) once failures exceed the
// configured rate.
ExperimentResult run_experiment(
    const corpus::DatasetSplit& split,
    const std::vector<prompt::PromptStrategy>& strategies,
    const std::vector<std::shared_ptr<client::Provider>>& providers,
    const RunConfig& config,
    std::shared_ptr<client::ResponseCache> cache = nullptr);

// Persistence: <dir>/records.jsonl + <dir>/manifest.json.
void save_experiment(const ExperimentResult& result, const std::string& dir);
ExperimentResult load_experiment(const std::string& dir);

}  // namespace damsa::pipeline
