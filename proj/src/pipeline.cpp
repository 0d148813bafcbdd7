#include "damsa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <unordered_map>
#include <unordered_set>
#include <thread>

#include <nlohmann/json.hpp>

#include "damsa/util/hash.hpp"
#include "damsa/util/utf8.hpp"
#include "damsa/version.hpp"

namespace damsa::pipeline {

using nlohmann::json;

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string first_line(const std::string& text, std::string* rest) {
  auto nl = text.find('\n');
  if (nl == std::string::npos) {
    rest->clear();
    return text;
  }
  *rest = text.substr(nl + 1);
  return text.substr(0, nl);
}

// Label prefixes worth stripping, longest first. Matching is ASCII
// case-insensitive; the prefix must be followed by a colon.
const char* kLabelPrefixes[] = {
    "modern standard arabic translation",
    "modern standard arabic",
    "final translation",
    "msa translation",
    "translation",
    "output",
    "msa",
    "الترجمة",
};

std::string strip_label_line(const std::string& text) {
  std::string rest;
  std::string line = first_line(text, &rest);
  std::string lowered = lower_ascii(util::trim(line));
  for (const char* prefix : kLabelPrefixes) {
    if (lowered.rfind(prefix, 0) != 0) continue;
    std::size_t pos = std::string(prefix).size();
    while (pos < lowered.size() && lowered[pos] == ' ') ++pos;
    if (pos >= lowered.size() || lowered[pos] != ':') continue;
    // Recover the remainder from the original (non-lowered) line; ASCII
    // lowering preserves byte offsets, so the colon sits at `pos` there too.
    std::string trimmed_line = util::trim(line);
    std::string remainder = util::trim(trimmed_line.substr(pos + 1));
    if (!remainder.empty() && !rest.empty()) remainder += "\n";
    remainder += rest;
    return remainder;
  }
  return text;
}

std::string strip_code_fence(const std::string& text) {
  if (text.rfind("```", 0) != 0) return text;
  auto open_end = text.find('\n');
  if (open_end == std::string::npos) return text;
  auto close = text.rfind("```");
  if (close <= open_end) return text;
  return text.substr(open_end + 1, close - open_end - 1);
}

}  // namespace

std::string extract_translation(const std::string& raw) {
  std::string text = util::trim(raw);
  if (text.empty()) throw ExtractionError("empty completion");
  text = util::trim(strip_code_fence(text));
  text = util::trim(strip_label_line(text));
  if (text.empty())
    throw ExtractionError("completion contains only boilerplate");
  return text;
}

Verdict parse_verdict(const std::string& raw) {
  Verdict verdict;
  std::string remaining = raw;
  std::size_t offset = 0;
  while (offset <= raw.size()) {
    auto nl = raw.find('\n', offset);
    std::string line = raw.substr(
        offset, nl == std::string::npos ? std::string::npos : nl - offset);
    std::string lowered = lower_ascii(util::trim(line));
    if (lowered.rfind("verdict:", 0) == 0) {
      std::string value = lowered.substr(8);
      while (!value.empty() && (value.back() == '.' || value.back() == '!' ||
                                value.back() == ' '))
        value.pop_back();
      while (!value.empty() && value.front() == ' ') value.erase(0, 1);
      if (value == "ok") {
        verdict.clean = true;
        verdict.feedback = nl == std::string::npos
                               ? ""
                               : util::trim(raw.substr(nl + 1));
        return verdict;
      }
      if (value == "errors" || value == "error") {
        verdict.clean = false;
        verdict.feedback = nl == std::string::npos
                               ? ""
                               : util::trim(raw.substr(nl + 1));
        return verdict;
      }
      // Unrecognized verdict value: fall through to the fallback.
      break;
    }
    if (nl == std::string::npos) break;
    offset = nl + 1;
  }
  verdict.clean = false;
  verdict.feedback = util::trim(raw);
  verdict.used_fallback = true;
  return verdict;
}

std::string to_string(PhaseName p) {
  switch (p) {
    case PhaseName::Single: return "single";
    case PhaseName::Translate: return "translate";
    case PhaseName::Evaluate: return "evaluate";
    case PhaseName::Refine: return "refine";
  }
  return "single";
}

double TranslationRecord::total_latency() const {
  double sum = 0;
  for (const auto& p : phases) sum += p.latency_seconds;
  return sum;
}

long TranslationRecord::total_prompt_tokens() const {
  long sum = 0;
  for (const auto& p : phases) sum += p.prompt_tokens;
  return sum;
}

long TranslationRecord::total_completion_tokens() const {
  long sum = 0;
  for (const auto& p : phases) sum += p.completion_tokens;
  return sum;
}

Completer::Completer(std::shared_ptr<client::Provider> provider,
                     std::shared_ptr<client::ResponseCache> cache)
    : provider_(std::move(provider)) {
  if (cache) {
    cached_ = std::make_unique<client::CachedClient>(provider_, cache);
  }
}

client::CompletionResult Completer::complete(
    const std::string& prompt, const client::GenerationParams& params) {
  if (cached_) return cached_->complete(prompt, params);
  return provider_->complete(prompt, params);
}

namespace {

PhaseTrace make_trace(PhaseName name, const std::string& prompt,
                      const client::CompletionResult& res) {
  PhaseTrace t;
  t.name = name;
  t.prompt = prompt;
  t.raw_response = res.text;
  t.latency_seconds = res.latency_seconds;
  t.prompt_tokens = res.prompt_tokens;
  t.completion_tokens = res.completion_tokens;
  t.cached = res.cached;
  return t;
}

TranslationRecord run_ara_tear(const corpus::ParallelSegment& segment,
                               const prompt::PromptStrategy& strategy,
                               Completer& completer, const RunConfig& config,
                               TranslationRecord record) {
  prompt::AraTearContext ctx;
  ctx.segment = &segment;
  ctx.labeling = strategy.labeling;

  const std::string p1 = prompt::render_ara_tear_phase(
      prompt::Phase::Translate, ctx, config.templates);
  client::CompletionResult r1;
  try {
    r1 = completer.complete(p1, config.params);
  } catch (const client::ClientError& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("translate phase: ") + e.what();
    return record;
  }
  record.phases.push_back(make_trace(PhaseName::Translate, p1, r1));
  std::string initial;
  try {
    initial = extract_translation(r1.text);
  } catch (const ExtractionError& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("translate phase: ") + e.what();
    return record;
  }

  ctx.initial_translation = initial;
  const std::string p2 = prompt::render_ara_tear_phase(
      prompt::Phase::Evaluate, ctx, config.templates);
  client::CompletionResult r2;
  try {
    r2 = completer.complete(p2, config.params);
  } catch (const client::ClientError& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("evaluate phase: ") + e.what();
    return record;
  }
  record.phases.push_back(make_trace(PhaseName::Evaluate, p2, r2));

  Verdict verdict = parse_verdict(r2.text);
  record.verdict_clean = verdict.clean;
  record.verdict_fallback = verdict.used_fallback;

  if (verdict.clean && config.skip_refine_on_clean) {
    record.phases.back().advisory = true;
    record.hypothesis = initial;
    return record;
  }

  ctx.evaluation_feedback = verdict.feedback;
  const std::string p3 = prompt::render_ara_tear_phase(
      prompt::Phase::Refine, ctx, config.templates);
  client::CompletionResult r3;
  try {
    r3 = completer.complete(p3, config.params);
  } catch (const client::ClientError& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("refine phase: ") + e.what();
    return record;
  }
  record.phases.push_back(make_trace(PhaseName::Refine, p3, r3));
  try {
    record.hypothesis = extract_translation(r3.text);
  } catch (const ExtractionError& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("refine phase: ") + e.what();
  }
  return record;
}

}  // namespace

TranslationRecord run_segment(const corpus::ParallelSegment& segment,
                              const prompt::PromptStrategy& strategy,
                              Completer& completer, const RunConfig& config) {
  TranslationRecord record;
  record.segment_id = segment.id;
  record.strategy = strategy;
  record.strategy.labeling = config.labeling;
  record.model_id = completer.provider().model_id();
  record.provider_id = completer.provider().id();

  prompt::PromptStrategy effective = record.strategy;
  if (effective.variant == prompt::Variant::AraTEaR) {
    return run_ara_tear(segment, effective, completer, config,
                        std::move(record));
  }

  std::string text;
  try {
    text = prompt::render(effective, segment, config.exemplars,
                          config.templates);
  } catch (const DataError& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("render: ") + e.what();
    return record;
  }
  client::CompletionResult res;
  try {
    res = completer.complete(text, config.params);
  } catch (const client::ClientError& e) {
    record.status = RecordStatus::Failed;
    record.error = e.what();
    return record;
  }
  record.phases.push_back(make_trace(PhaseName::Single, text, res));
  try {
    record.hypothesis = extract_translation(res.text);
  } catch (const ExtractionError& e) {
    record.status = RecordStatus::Failed;
    record.error = e.what();
  }
  return record;
}

std::string RunManifest::hash() const {
  json j;
  j["split_name"] = split_name;
  j["split_hash"] = split_hash;
  j["strategies"] = strategies;
  j["providers"] = providers;
  j["models"] = models;
  j["params"] = params;
  j["seed"] = seed;
  j["code_version"] = code_version;
  j["chrf_signature"] = chrf_signature;
  j["bleu_signature"] = bleu_signature;
  return util::sha256_hex(j.dump());
}

ExperimentResult run_experiment(
    const corpus::DatasetSplit& split,
    const std::vector<prompt::PromptStrategy>& strategies,
    const std::vector<std::shared_ptr<client::Provider>>& providers,
    const RunConfig& config,
    std::shared_ptr<client::ResponseCache> cache) {
  if (split.segments.empty()) throw DataError("empty split");
  if (strategies.empty()) throw DataError("no strategies selected");
  if (providers.empty()) throw DataError("no providers selected");

  // Pre-flight renderability: explicit labeling needs a display name for
  // every dialect in the split; few-shot needs a matching exemplar set.
  bool uses_few_shot = false;
  for (const auto& s : strategies)
    uses_few_shot |= s.variant == prompt::Variant::FewShot;
  for (const auto& [dialect, n] : split.composition) {
    if (config.labeling == prompt::Labeling::ExplicitDialect)
      prompt::dialect_display_name(dialect, config.labeling);
    if (uses_few_shot) {
      if (config.exemplars == nullptr ||
          config.exemplars->find(dialect) == config.exemplars->end()) {
        throw DataError("few-shot strategy selected but no exemplar set "
                        "loaded for dialect " + corpus::to_string(dialect));
      }
    }
  }

  struct Cell {
    std::size_t segment_index;
    std::size_t strategy_index;
    std::size_t provider_index;
  };
  std::vector<Cell> cells;
  cells.reserve(split.segments.size() * strategies.size() * providers.size());
  for (std::size_t g = 0; g < split.segments.size(); ++g)
    for (std::size_t s = 0; s < strategies.size(); ++s)
      for (std::size_t p = 0; p < providers.size(); ++p)
        cells.push_back({g, s, p});
  std::sort(cells.begin(), cells.end(), [&](const Cell& a, const Cell& b) {
    const auto ka = std::tie(split.segments[a.segment_index].id,
                             a.strategy_index, a.provider_index);
    const auto kb = std::tie(split.segments[b.segment_index].id,
                             b.strategy_index, b.provider_index);
    return ka < kb;
  });

  std::vector<std::unique_ptr<Completer>> completers;
  for (const auto& provider : providers)
    completers.push_back(std::make_unique<Completer>(provider, cache));

  const std::size_t total = cells.size();
  const long failure_budget =
      static_cast<long>(config.failure_rate_threshold * double(total));
  std::vector<std::optional<TranslationRecord>> slots(total);
  std::atomic<std::size_t> next{0};
  std::atomic<long> failures{0};
  std::atomic<bool> abort{false};

  auto worker = [&]() {
    while (true) {
      if (abort.load()) return;
      std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      const Cell& cell = cells[i];
      prompt::PromptStrategy strategy = strategies[cell.strategy_index];
      strategy.labeling = config.labeling;
      TranslationRecord record =
          run_segment(split.segments[cell.segment_index], strategy,
                      *completers[cell.provider_index], config);
      if (record.status == RecordStatus::Failed) {
        long f = failures.fetch_add(1) + 1;
        if (f > failure_budget) abort.store(true);
      }
      slots[i] = std::move(record);
    }
  };

  const int k = std::max(1, config.concurrency);
  std::vector<std::thread> threads;
  threads.reserve(k);
  for (int t = 0; t < k; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  ExperimentResult result;
  result.aborted = abort.load();

  // With a cache attached, byte-identical prompts (ara-tear's translate
  // phase reuses the zero-shot render) may be served fresh or from cache
  // depending on scheduling. Re-attribute deterministically: in canonical
  // record order the first phase holding a key keeps the fresh call, every
  // later one reads as a cache hit.
  if (cache) {
    struct FreshCall {
      double latency = 0.0;
      int retries = 0;
    };
    std::unordered_map<std::string, FreshCall> fresh;
    for (const auto& slot : slots) {
      if (!slot) continue;
      for (const auto& phase : slot->phases) {
        if (phase.cached) continue;
        const std::string key = client::ResponseCache::key(
            slot->provider_id, config.params, phase.prompt);
        fresh.emplace(key, FreshCall{phase.latency_seconds, 0});
      }
    }
    std::unordered_set<std::string> claimed;
    for (auto& slot : slots) {
      if (!slot) continue;
      for (auto& phase : slot->phases) {
        const std::string key = client::ResponseCache::key(
            slot->provider_id, config.params, phase.prompt);
        auto it = fresh.find(key);
        if (it != fresh.end() && claimed.insert(key).second) {
          phase.cached = false;
          phase.latency_seconds = it->second.latency;
        } else {
          phase.cached = true;
          phase.latency_seconds = 0.0;
        }
      }
    }
  }

  for (auto& slot : slots) {
    if (!slot) continue;
    TranslationRecord& rec = *slot;
    if (rec.status == RecordStatus::Failed) {
      ++result.failed_count;
      result.failed_ids.push_back(rec.segment_id + "|" + rec.strategy.key() +
                                  "|" + rec.provider_id);
    }
    if (rec.strategy.variant == prompt::Variant::AraTEaR &&
        rec.status == RecordStatus::OK) {
      if (rec.verdict_clean.value_or(false)) {
        ++result.ara_clean_count;
      } else {
        ++result.ara_refined_count;
      }
      if (rec.verdict_fallback) ++result.verdict_fallback_count;
    }
    result.records.push_back(std::move(rec));
  }

  result.manifest.split_name = split.name;
  result.manifest.split_hash = corpus::split_hash(split);
  for (const auto& s : strategies) {
    prompt::PromptStrategy labeled = s;
    labeled.labeling = config.labeling;
    result.manifest.strategies.push_back(labeled.key());
  }
  for (const auto& p : providers) {
    result.manifest.providers.push_back(p->id());
    result.manifest.models.push_back(p->model_id());
  }
  result.manifest.params = config.params.canonical();
  result.manifest.seed = config.seed;
  result.manifest.code_version = kVersion;
  return result;
}

namespace {

json strategy_to_json(const prompt::PromptStrategy& s) {
  json j;
  j["variant"] = prompt::to_string(s.variant);
  j["labeling"] = prompt::to_string(s.labeling);
  if (s.exemplar_set_id) j["exemplar_set_id"] = *s.exemplar_set_id;
  return j;
}

prompt::PromptStrategy strategy_from_json(const json& j) {
  prompt::PromptStrategy s;
  s.variant = prompt::variant_from_string(j.at("variant").get<std::string>());
  s.labeling = j.at("labeling").get<std::string>() == "generic"
                   ? prompt::Labeling::GenericDialectal
                   : prompt::Labeling::ExplicitDialect;
  if (j.contains("exemplar_set_id"))
    s.exemplar_set_id = j["exemplar_set_id"].get<std::string>();
  return s;
}

json record_to_json(const TranslationRecord& r) {
  json j;
  j["segment_id"] = r.segment_id;
  j["strategy"] = strategy_to_json(r.strategy);
  j["model_id"] = r.model_id;
  j["provider_id"] = r.provider_id;
  j["hypothesis"] = r.hypothesis;
  j["status"] = r.status == RecordStatus::OK ? "ok" : "failed";
  if (r.verdict_clean) j["verdict_clean"] = *r.verdict_clean;
  if (r.verdict_fallback) j["verdict_fallback"] = true;
  if (!r.error.empty()) j["error"] = r.error;
  json phases = json::array();
  for (const auto& p : r.phases) {
    json pj;
    pj["name"] = to_string(p.name);
    pj["prompt"] = p.prompt;
    pj["raw_response"] = p.raw_response;
    pj["latency_seconds"] = p.latency_seconds;
    pj["prompt_tokens"] = p.prompt_tokens;
    pj["completion_tokens"] = p.completion_tokens;
    if (p.cached) pj["cached"] = true;
    if (p.advisory) pj["advisory"] = true;
    phases.push_back(std::move(pj));
  }
  j["phases"] = phases;
  return j;
}

TranslationRecord record_from_json(const json& j) {
  TranslationRecord r;
  r.segment_id = j.at("segment_id").get<std::string>();
  r.strategy = strategy_from_json(j.at("strategy"));
  r.model_id = j.at("model_id").get<std::string>();
  r.provider_id = j.at("provider_id").get<std::string>();
  r.hypothesis = j.at("hypothesis").get<std::string>();
  r.status = j.at("status").get<std::string>() == "ok" ? RecordStatus::OK
                                                       : RecordStatus::Failed;
  if (j.contains("verdict_clean"))
    r.verdict_clean = j["verdict_clean"].get<bool>();
  r.verdict_fallback = j.value("verdict_fallback", false);
  r.error = j.value("error", std::string());
  for (const auto& pj : j.at("phases")) {
    PhaseTrace p;
    const std::string name = pj.at("name").get<std::string>();
    if (name == "translate") p.name = PhaseName::Translate;
    else if (name == "evaluate") p.name = PhaseName::Evaluate;
    else if (name == "refine") p.name = PhaseName::Refine;
    else p.name = PhaseName::Single;
    p.prompt = pj.at("prompt").get<std::string>();
    p.raw_response = pj.at("raw_response").get<std::string>();
    p.latency_seconds = pj.at("latency_seconds").get<double>();
    p.prompt_tokens = pj.at("prompt_tokens").get<long>();
    p.completion_tokens = pj.at("completion_tokens").get<long>();
    p.cached = pj.value("cached", false);
    p.advisory = pj.value("advisory", false);
    r.phases.push_back(std::move(p));
  }
  return r;
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["split_name"] = m.split_name;
  j["split_hash"] = m.split_hash;
  j["strategies"] = m.strategies;
  j["providers"] = m.providers;
  j["models"] = m.models;
  j["params"] = m.params;
  j["seed"] = m.seed;
  j["code_version"] = m.code_version;
  j["chrf_signature"] = m.chrf_signature;
  j["bleu_signature"] = m.bleu_signature;
  j["manifest_hash"] = m.hash();
  return j;
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.split_name = j.at("split_name").get<std::string>();
  m.split_hash = j.at("split_hash").get<std::string>();
  m.strategies = j.at("strategies").get<std::vector<std::string>>();
  m.providers = j.at("providers").get<std::vector<std::string>>();
  m.models = j.at("models").get<std::vector<std::string>>();
  m.params = j.at("params").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.code_version = j.at("code_version").get<std::string>();
  m.chrf_signature = j.value("chrf_signature", std::string());
  m.bleu_signature = j.value("bleu_signature", std::string());
  return m;
}

}  // namespace

void save_experiment(const ExperimentResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/records.jsonl", std::ios::binary);
    if (!out) throw DataError("cannot write " + dir + "/records.jsonl");
    for (const auto& rec : result.records)
      out << record_to_json(rec).dump() << "\n";
  }
  json j;
  j["manifest"] = manifest_to_json(result.manifest);
  j["failed_count"] = result.failed_count;
  j["failed_ids"] = result.failed_ids;
  j["aborted"] = result.aborted;
  j["ara_clean_count"] = result.ara_clean_count;
  j["ara_refined_count"] = result.ara_refined_count;
  j["verdict_fallback_count"] = result.verdict_fallback_count;
  std::ofstream out(dir + "/manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + dir + "/manifest.json");
  out << j.dump(2) << "\n";
}

ExperimentResult load_experiment(const std::string& dir) {
  ExperimentResult result;
  std::ifstream manifest_in(dir + "/manifest.json", std::ios::binary);
  if (!manifest_in) throw DataError("cannot open " + dir + "/manifest.json");
  json j;
  try {
    manifest_in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest: " + std::string(e.what()));
  }
  result.manifest = manifest_from_json(j.at("manifest"));
  result.failed_count = j.value("failed_count", std::size_t(0));
  result.failed_ids = j.value("failed_ids", std::vector<std::string>());
  result.aborted = j.value("aborted", false);
  result.ara_clean_count = j.value("ara_clean_count", 0L);
  result.ara_refined_count = j.value("ara_refined_count", 0L);
  result.verdict_fallback_count = j.value("verdict_fallback_count", 0L);

  std::ifstream in(dir + "/records.jsonl", std::ios::binary);
  if (!in) throw DataError("cannot open " + dir + "/records.jsonl");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      result.records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(dir + "/records.jsonl:" + std::to_string(lineno) +
                      ": " + e.what());
    }
  }
  return result;
}

}  // namespace damsa::pipeline
