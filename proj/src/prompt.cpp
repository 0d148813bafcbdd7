#include "damsa/prompt.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "damsa/util/text.hpp"
#include "damsa/util/utf8.hpp"

namespace damsa::prompt {

using corpus::Dialect;
using nlohmann::json;

namespace {

constexpr const char* kZeroShotTemplate =
    "Translate the following text from {dialect} to Modern Standard Arabic: "
    "{dialect_text}\n"
    "\n"
    "Only output the final translation in Modern Standard Arabic; do not "
    "include any additional text.";

constexpr const char* kZeroShotCotTemplate =
    "Translate the following text from {dialect} to Modern Standard Arabic: "
    "{dialect_text}\n"
    "\n"
    "Think step by step.\n"
    "\n"
    "Only output the final translation in Modern Standard Arabic; do not "
    "include any additional text.";

constexpr const char* kFewShotIntroTemplate =
    "Here are example translations from {dialect} to Modern Standard "
    "Arabic:";

constexpr const char* kEvaluateTemplate =
    "You are reviewing a translation from {dialect} to Modern Standard "
    "Arabic.\n"
    "\n"
    "Source text: {dialect_text}\n"
    "Candidate translation: {initial_translation}\n"
    "\n"
    "Assess the candidate against exactly two criteria:\n"
    "1. Meaning Transfer: the intended meaning of the source is not "
    "adequately preserved.\n"
    "2. Adaptation: the style fails to shift appropriately from dialectal "
    "Arabic to formal Modern Standard Arabic.\n"
    "\n"
    "If the candidate passes both criteria, reply with a single line:\n"
    "VERDICT: OK\n"
    "Otherwise reply with the line:\n"
    "VERDICT: ERRORS\n"
    "followed by concise feedback describing each error found.";

constexpr const char* kRefineTemplate =
    "A translation from {dialect} to Modern Standard Arabic was reviewed "
    "and needs correction.\n"
    "\n"
    "Source text: {dialect_text}\n"
    "Initial translation: {initial_translation}\n"
    "Reviewer feedback: {feedback}\n"
    "\n"
    "Rewrite the translation so it fully preserves the meaning of the "
    "source and reads as formal Modern Standard Arabic.\n"
    "\n"
    "Only output the final translation in Modern Standard Arabic; do not "
    "include any additional text.";

std::string substitute(std::string text, std::string_view slot,
                       std::string_view value) {
  const std::string needle = "{" + std::string(slot) + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

std::string exemplar_block(const ExemplarSet& set) {
  std::string block;
  for (const auto& ex : set.exemplars) {
    block += "Input: " + ex.source + "\n";
    block += "Output: " + ex.reference + "\n";
    block += "\n";
  }
  return block;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::ZeroShot: return "zero_shot";
    case Variant::ZeroShotCoT: return "zero_shot_cot";
    case Variant::FewShot: return "few_shot";
    case Variant::AraTEaR: return "ara_tear";
  }
  return "zero_shot";
}

std::string to_string(Labeling l) {
  return l == Labeling::ExplicitDialect ? "explicit" : "generic";
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Translate: return "translate";
    case Phase::Evaluate: return "evaluate";
    case Phase::Refine: return "refine";
  }
  return "translate";
}

std::string to_string(ExemplarCategory c) {
  switch (c) {
    case ExemplarCategory::Conversational: return "conversational";
    case ExemplarCategory::Descriptive: return "descriptive";
    case ExemplarCategory::Idiomatic: return "idiomatic";
  }
  return "conversational";
}

Variant variant_from_string(std::string_view s) {
  std::string v(s);
  for (char& c : v) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c == '-') c = '_';
  }
  if (v == "zero_shot" || v == "0_shot") return Variant::ZeroShot;
  if (v == "zero_shot_cot" || v == "0_shot_cot" || v == "cot")
    return Variant::ZeroShotCoT;
  if (v == "few_shot") return Variant::FewShot;
  if (v == "ara_tear" || v == "aratear") return Variant::AraTEaR;
  throw DataError("unknown prompting strategy '" + std::string(s) + "'");
}

ExemplarCategory category_from_string(std::string_view s) {
  std::string v(s);
  for (char& c : v)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  if (v == "conversational") return ExemplarCategory::Conversational;
  if (v == "descriptive") return ExemplarCategory::Descriptive;
  if (v == "idiomatic") return ExemplarCategory::Idiomatic;
  throw DataError("unknown exemplar category '" + std::string(s) + "'");
}

std::string PromptStrategy::key() const {
  std::string k = to_string(variant) + "|" + to_string(labeling);
  if (exemplar_set_id) k += "|" + *exemplar_set_id;
  return k;
}

std::string PromptStrategy::display_name() const {
  switch (variant) {
    case Variant::ZeroShot: return "0-Shot";
    case Variant::ZeroShotCoT: return "0-Shot CoT";
    case Variant::FewShot: return "Few-Shot";
    case Variant::AraTEaR: return "Ara-TEaR";
  }
  return "0-Shot";
}

ExemplarStore load_exemplars(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);

  std::map<Dialect, std::map<ExemplarCategory, Exemplar>> staged;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (util::trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed exemplar record (" + e.what() + ")");
    }
    auto field = [&](const char* key) -> std::string {
      if (!rec.contains(key) || !rec[key].is_string())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": missing or non-string field '" + key + "'");
      return rec[key].get<std::string>();
    };
    Dialect dialect = corpus::dialect_from_string(field("dialect"));
    ExemplarCategory category = category_from_string(field("category"));
    Exemplar ex;
    ex.category = category;
    ex.source = util::canonical_text(field("source"));
    ex.reference = util::canonical_text(field("reference"));
    if (ex.source.empty() || ex.reference.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": empty exemplar text for (" +
                      corpus::to_string(dialect) + ", " +
                      to_string(category) + ")");
    }
    auto [it, inserted] = staged[dialect].emplace(category, std::move(ex));
    if (!inserted) {
      throw DataError(path + ": duplicate exemplar for (" +
                      corpus::to_string(dialect) + ", " +
                      to_string(category) + ")");
    }
  }

  ExemplarStore store;
  for (auto& [dialect, by_category] : staged) {
    ExemplarSet set;
    set.dialect = dialect;
    static constexpr ExemplarCategory order[3] = {
        ExemplarCategory::Conversational, ExemplarCategory::Descriptive,
        ExemplarCategory::Idiomatic};
    for (int i = 0; i < 3; ++i) {
      auto it = by_category.find(order[i]);
      if (it == by_category.end()) {
        throw DataError(path + ": missing exemplar for (" +
                        corpus::to_string(dialect) + ", " +
                        to_string(order[i]) + ")");
      }
      set.exemplars[i] = it->second;
    }
    store.emplace(dialect, std::move(set));
  }
  return store;
}

TemplateSet default_templates() {
  TemplateSet t;
  t.zero_shot = kZeroShotTemplate;
  t.zero_shot_cot = kZeroShotCotTemplate;
  t.few_shot_intro = kFewShotIntroTemplate;
  t.evaluate = kEvaluateTemplate;
  t.refine = kRefineTemplate;
  return t;
}

TemplateSet load_templates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);

  std::map<std::string, std::string> blocks;
  std::string current_key;
  std::string current;
  auto flush = [&]() {
    if (current_key.empty()) return;
    while (!current.empty() &&
           (current.back() == '\n' || current.back() == '\r'))
      current.pop_back();
    blocks[current_key] = current;
    current.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      flush();
      current_key = line.substr(1, line.size() - 2);
      continue;
    }
    if (current_key.empty()) continue;  // preamble outside any block
    current += line;
    current += '\n';
  }
  flush();

  TemplateSet t = default_templates();
  auto take = [&](const char* key, std::string& slot) {
    auto it = blocks.find(key);
    if (it != blocks.end()) slot = it->second;
  };
  take("zero_shot", t.zero_shot);
  take("zero_shot_cot", t.zero_shot_cot);
  take("few_shot_intro", t.few_shot_intro);
  take("evaluate", t.evaluate);
  take("refine", t.refine);
  return t;
}

std::string dialect_display_name(Dialect d, Labeling labeling) {
  if (labeling == Labeling::GenericDialectal) return "Dialectal Arabic";
  switch (d) {
    case Dialect::LEV: return "the Levantine Dialect";
    case Dialect::GLF: return "the Gulf Dialect";
    case Dialect::EGY: return "the Egyptian Dialect";
    default:
      throw DataError("no explicit dialect name for " + corpus::to_string(d));
  }
}

std::string render(const PromptStrategy& strategy,
                   const corpus::ParallelSegment& segment,
                   const ExemplarStore* exemplars,
                   const TemplateSet& templates) {
  const std::string dialect_name =
      dialect_display_name(segment.dialect, strategy.labeling);
  auto fill = [&](const std::string& tpl) {
    return substitute(substitute(tpl, "dialect", dialect_name), "dialect_text",
                      segment.source_text);
  };
  switch (strategy.variant) {
    case Variant::ZeroShot:
      return fill(templates.zero_shot);
    case Variant::ZeroShotCoT:
      return fill(templates.zero_shot_cot);
    case Variant::FewShot: {
      if (exemplars == nullptr)
        throw DataError("few-shot prompting requires a loaded exemplar set");
      auto it = exemplars->find(segment.dialect);
      if (it == exemplars->end()) {
        throw DataError("no exemplar set for dialect " +
                        corpus::to_string(segment.dialect));
      }
      std::string text =
          substitute(templates.few_shot_intro, "dialect", dialect_name);
      text += "\n\n";
      text += exemplar_block(it->second);
      text += fill(templates.zero_shot);
      return text;
    }
    case Variant::AraTEaR: {
      AraTearContext ctx;
      ctx.segment = &segment;
      ctx.labeling = strategy.labeling;
      return render_ara_tear_phase(Phase::Translate, ctx, templates);
    }
  }
  throw DataError("unreachable strategy variant");
}

std::string render_ara_tear_phase(Phase phase, const AraTearContext& ctx,
                                  const TemplateSet& templates) {
  if (ctx.segment == nullptr)
    throw DataError("ara-tear render requires a segment");
  const std::string dialect_name =
      dialect_display_name(ctx.segment->dialect, ctx.labeling);
  auto fill_common = [&](const std::string& tpl) {
    return substitute(substitute(tpl, "dialect", dialect_name), "dialect_text",
                      ctx.segment->source_text);
  };
  switch (phase) {
    case Phase::Translate:
      return fill_common(templates.zero_shot);
    case Phase::Evaluate: {
      if (!ctx.initial_translation)
        throw DataError("evaluate phase requires the initial translation");
      return substitute(fill_common(templates.evaluate), "initial_translation",
                        *ctx.initial_translation);
    }
    case Phase::Refine: {
      if (!ctx.initial_translation)
        throw DataError("refine phase requires the initial translation");
      if (!ctx.evaluation_feedback)
        throw DataError("refine phase requires the evaluation feedback");
      std::string text = fill_common(templates.refine);
      text = substitute(text, "initial_translation", *ctx.initial_translation);
      text = substitute(text, "feedback", *ctx.evaluation_feedback);
      return text;
    }
  }
  throw DataError("unreachable ara-tear phase");
}

}  // namespace damsa::prompt
