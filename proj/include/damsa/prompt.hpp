#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "damsa/corpus.hpp"
#include "damsa/errors.hpp"

namespace damsa::prompt {

enum class Variant { ZeroShot, ZeroShotCoT, FewShot, AraTEaR };
enum class Labeling { ExplicitDialect, GenericDialectal };
enum class Phase { Translate, Evaluate, Refine };
enum class ExemplarCategory { Conversational, Descriptive, Idiomatic };

std::string to_string(Variant v);
std::string to_string(Labeling l);
std::string to_string(Phase p);
std::string to_string(ExemplarCategory c);
Variant variant_from_string(std::string_view s);
ExemplarCategory category_from_string(std::string_view s);

struct PromptStrategy {
  Variant variant = Variant::ZeroShot;
  Labeling labeling = Labeling::ExplicitDialect;
  std::optional<std::string> exemplar_set_id;  // FewShot only

  // Canonical key used for record ordering and table axes,
  // e.g. "zero_shot|explicit".
  std::string key() const;
  // Table-facing name, e.g. "0-Shot CoT".
  std::string display_name() const;
};

struct Exemplar {
  std::string source;
  std::string reference;
  ExemplarCategory category = ExemplarCategory::Conversational;
};

struct ExemplarSet {
  corpus::Dialect dialect = corpus::Dialect::OTHER;
  // Exactly one exemplar per category, stored in category order
  // (conversational, descriptive, idiomatic).
  std::array<Exemplar, 3> exemplars;
};

using ExemplarStore = std::map<corpus::Dialect, ExemplarSet>;

// JSONL with fields (dialect, category, source, reference); every dialect
// present must carry all three categories exactly once.
ExemplarStore load_exemplars(const std::string& path);

// Prompt templates with {dialect}, {dialect_text}, {initial_translation}
// and {feedback} slots. Defaults are compiled in; a config file of keyed
// blocks ("[zero_shot]" ... ) can override any of them.
struct TemplateSet {
  std::string zero_shot;
  std::string zero_shot_cot;
  std::string few_shot_intro;
  std::string evaluate;
  std::string refine;
};

TemplateSet default_templates();
TemplateSet load_templates(const std::string& path);

// Dialect wording used in prompts: explicit mode names the dialect
// ("the Levantine Dialect"), generic mode says "Dialectal Arabic".
std::string dialect_display_name(corpus::Dialect d, Labeling labeling);

std::string render(const PromptStrategy& strategy,
                   const corpus::ParallelSegment& segment,
                   const ExemplarStore* exemplars = nullptr,
                   const TemplateSet& templates = default_templates());

struct AraTearContext {
  const corpus::ParallelSegment* segment = nullptr;
  Labeling labeling = Labeling::ExplicitDialect;
  std::optional<std::string> initial_translation;
  std::optional<std::string> evaluation_feedback;
};

std::string render_ara_tear_phase(Phase phase, const AraTearContext& ctx,
                                  const TemplateSet& templates =
                                      default_templates());

}  // namespace damsa::prompt
