#include <doctest.h>

#include <set>

#include "damsa/mock_provider.hpp"
#include "damsa/pipeline.hpp"
#include "helpers.hpp"

using namespace damsa;
using namespace damsa::pipeline;
using corpus::Dialect;
using test_helpers::TempDir;
using test_helpers::read_file;

TEST_SUITE_BEGIN("pipeline");

namespace {

corpus::ParallelSegment segment(const std::string& id, Dialect d,
                                const std::string& src) {
  corpus::ParallelSegment s;
  s.id = id;
  s.dialect = d;
  s.source_text = src;
  s.reference_text = "مرجع " + id;
  return s;
}

corpus::DatasetSplit two_segment_split() {
  corpus::DatasetSplit split;
  split.name = "mini";
  split.segments = {segment("a", Dialect::LEV, "نص اول"),
                    segment("b", Dialect::EGY, "نص ثاني")};
  split.recount();
  return split;
}

RunConfig config_for(const std::string& model) {
  RunConfig cfg;
  cfg.params.model_id = model;
  return cfg;
}

// Rules for a full ara-tear exchange driven by template prefixes.
std::vector<client::MockRule> ara_tear_rules(const std::string& verdict,
                                             const std::string& refined) {
  return {
      {"You are reviewing*", {client::MockStep::respond(verdict)}},
      {"A translation from*", {client::MockStep::respond(refined)}},
      {"Translate*", {client::MockStep::respond("ترجمة اولى")}},
  };
}

}  // namespace

TEST_CASE("extract_translation passes plain text through") {
  CHECK(extract_translation("النص") == "النص");
  CHECK(extract_translation("  النص \n") == "النص");
}

TEST_CASE("extract_translation strips label prefixes") {
  CHECK(extract_translation("MSA translation: النص") == "النص");
  CHECK(extract_translation("Modern Standard Arabic: النص") == "النص");
  CHECK(extract_translation("Translation:\nالنص") == "النص");
  CHECK(extract_translation("الترجمة: النص") == "النص");
  // a colon-less line is not a label
  CHECK(extract_translation("Translation note") == "Translation note");
}

TEST_CASE("extract_translation unwraps code fences") {
  CHECK(extract_translation("```\nالنص\n```") == "النص");
  CHECK(extract_translation("```text\nالنص المترجم\n```") == "النص المترجم");
}

TEST_CASE("extract_translation rejects boilerplate-only completions") {
  CHECK_THROWS_AS(extract_translation(""), ExtractionError);
  CHECK_THROWS_AS(extract_translation("   \n  "), ExtractionError);
  CHECK_THROWS_AS(extract_translation("MSA translation:"), ExtractionError);
  CHECK_THROWS_AS(extract_translation("```\n\n```"), ExtractionError);
}

TEST_CASE("parse_verdict handles the contract and the fallback") {
  auto ok = parse_verdict("VERDICT: OK");
  CHECK(ok.clean);
  CHECK_FALSE(ok.used_fallback);

  auto errors = parse_verdict("VERDICT: ERRORS\nmistranslated idiom");
  CHECK_FALSE(errors.clean);
  CHECK(errors.feedback == "mistranslated idiom");
  CHECK_FALSE(errors.used_fallback);

  auto fallback = parse_verdict("The translation looks mostly fine to me.");
  CHECK_FALSE(fallback.clean);
  CHECK(fallback.used_fallback);
  CHECK(fallback.feedback == "The translation looks mostly fine to me.");
}

TEST_CASE("parse_verdict tolerates casing and trailing punctuation") {
  CHECK(parse_verdict("verdict: ok.").clean);
  CHECK(parse_verdict("  VERDICT: OK  ").clean);
  auto v = parse_verdict("preamble\nVERDICT: ERRORS\nbad register");
  CHECK_FALSE(v.clean);
  CHECK(v.feedback == "bad register");
}

TEST_CASE("run_segment zero-shot produces one phase") {
  auto seg = segment("s1", Dialect::LEV, "مرحبا");
  prompt::PromptStrategy strategy;
  auto expected_prompt = prompt::render(strategy, seg);
  auto mock = client::register_mock(
      "m", "model-x", {{expected_prompt, {client::MockStep::respond("T")}}});
  Completer completer(mock, nullptr);
  auto record = run_segment(seg, strategy, completer, config_for("model-x"));
  CHECK(record.status == RecordStatus::OK);
  CHECK(record.hypothesis == "T");
  REQUIRE(record.phases.size() == 1);
  CHECK(record.phases[0].name == PhaseName::Single);
  CHECK(record.phases[0].prompt == expected_prompt);
  CHECK(record.model_id == "model-x");
  CHECK(mock->call_count() == 1);
}

TEST_CASE("ara-tear clean verdict keeps the initial translation") {
  auto seg = segment("s1", Dialect::LEV, "كيفك");
  prompt::PromptStrategy strategy;
  strategy.variant = prompt::Variant::AraTEaR;
  auto mock = client::register_mock("m", "model",
                                    ara_tear_rules("VERDICT: OK", "مُحَسَّن"));
  Completer completer(mock, nullptr);
  auto record = run_segment(seg, strategy, completer, config_for("model"));

  CHECK(record.status == RecordStatus::OK);
  CHECK(record.hypothesis == "ترجمة اولى");
  REQUIRE(record.phases.size() == 2);
  CHECK(record.phases[0].name == PhaseName::Translate);
  CHECK(record.phases[1].name == PhaseName::Evaluate);
  CHECK(record.phases[1].advisory);
  CHECK(record.verdict_clean == true);
  CHECK(mock->call_count() == 2);
}

TEST_CASE("ara-tear errorful verdict refines with the feedback") {
  auto seg = segment("s1", Dialect::GLF, "شلونك");
  prompt::PromptStrategy strategy;
  strategy.variant = prompt::Variant::AraTEaR;
  auto mock = client::register_mock(
      "m", "model",
      ara_tear_rules("VERDICT: ERRORS\nidiom mistranslated", "ترجمة محسنة"));
  Completer completer(mock, nullptr);
  auto record = run_segment(seg, strategy, completer, config_for("model"));

  CHECK(record.status == RecordStatus::OK);
  CHECK(record.hypothesis == "ترجمة محسنة");
  REQUIRE(record.phases.size() == 3);
  CHECK(record.phases[2].name == PhaseName::Refine);
  CHECK_FALSE(record.phases[1].advisory);
  CHECK(record.verdict_clean == false);
  // the refine prompt carries the feedback verbatim
  CHECK(record.phases[2].prompt.find("idiom mistranslated") !=
        std::string::npos);
  CHECK(mock->call_count() == 3);
}

TEST_CASE("ara-tear refines on clean verdict when skipping is disabled") {
  auto seg = segment("s1", Dialect::EGY, "ازيك");
  prompt::PromptStrategy strategy;
  strategy.variant = prompt::Variant::AraTEaR;
  auto mock = client::register_mock("m", "model",
                                    ara_tear_rules("VERDICT: OK", "نهائية"));
  Completer completer(mock, nullptr);
  auto cfg = config_for("model");
  cfg.skip_refine_on_clean = false;
  auto record = run_segment(seg, strategy, completer, cfg);
  CHECK(record.phases.size() == 3);
  CHECK(record.hypothesis == "نهائية");
}

TEST_CASE("ara-tear fallback verdict routes whole text into refinement") {
  auto seg = segment("s1", Dialect::LEV, "مرحبا");
  prompt::PromptStrategy strategy;
  strategy.variant = prompt::Variant::AraTEaR;
  auto mock = client::register_mock(
      "m", "model", ara_tear_rules("free-prose critique", "نهائية"));
  Completer completer(mock, nullptr);
  auto record = run_segment(seg, strategy, completer, config_for("model"));
  CHECK(record.verdict_fallback);
  CHECK(record.phases.size() == 3);
  CHECK(record.phases[2].prompt.find("free-prose critique") !=
        std::string::npos);
}

TEST_CASE("phase failure marks the record Failed and keeps partial trace") {
  auto seg = segment("s1", Dialect::LEV, "مرحبا");
  prompt::PromptStrategy strategy;
  strategy.variant = prompt::Variant::AraTEaR;
  auto mock = client::register_mock(
      "m", "model",
      {{"You are reviewing*", {client::MockStep::fail(400)}},
       {"Translate*", {client::MockStep::respond("ترجمة")}}});
  Completer completer(mock, nullptr);
  auto record = run_segment(seg, strategy, completer, config_for("model"));
  CHECK(record.status == RecordStatus::Failed);
  REQUIRE(record.phases.size() == 1);  // translate completed, evaluate lost
  CHECK(record.error.find("evaluate") != std::string::npos);
}

TEST_CASE("empty completion fails extraction and the record") {
  auto seg = segment("s1", Dialect::LEV, "مرحبا");
  prompt::PromptStrategy strategy;
  auto mock = client::register_mock("m", "model",
                                    {{"*", {client::MockStep::respond("  ")}}});
  Completer completer(mock, nullptr);
  auto record = run_segment(seg, strategy, completer, config_for("model"));
  CHECK(record.status == RecordStatus::Failed);
}

TEST_CASE("run_experiment covers the grid in deterministic order") {
  auto split = two_segment_split();
  std::vector<prompt::PromptStrategy> strategies(2);
  strategies[1].variant = prompt::Variant::ZeroShotCoT;
  auto mock = client::register_mock(
      "m", "model", {{"*", {client::MockStep::respond("T")}}});
  auto cfg = config_for("model");

  auto result = run_experiment(split, strategies, {mock}, cfg);
  REQUIRE(result.records.size() == 4);
  CHECK(result.failed_count == 0);
  // canonical (segment_id, strategy, provider) order
  CHECK(result.records[0].segment_id == "a");
  CHECK(result.records[0].strategy.variant == prompt::Variant::ZeroShot);
  CHECK(result.records[1].segment_id == "a");
  CHECK(result.records[1].strategy.variant == prompt::Variant::ZeroShotCoT);
  CHECK(result.records[2].segment_id == "b");
  CHECK(result.records[3].segment_id == "b");
  CHECK(mock->call_count() == 4);
}

TEST_CASE("run_experiment result is invariant to concurrency level") {
  auto split = two_segment_split();
  std::vector<prompt::PromptStrategy> strategies(2);
  strategies[1].variant = prompt::Variant::AraTEaR;

  auto make_mock = [] {
    return client::register_mock(
        "m", "model",
        {{"You are reviewing*",
          {client::MockStep::respond("VERDICT: ERRORS\nfix it")}},
         {"A translation from*", {client::MockStep::respond("R")}},
         {"*", {client::MockStep::respond("T")}}});
  };

  TempDir tmp1, tmp2;
  auto cfg1 = config_for("model");
  cfg1.concurrency = 1;
  auto r1 = run_experiment(split, strategies, {make_mock()}, cfg1);
  save_experiment(r1, tmp1.dir());

  auto cfg8 = config_for("model");
  cfg8.concurrency = 8;
  auto r8 = run_experiment(split, strategies, {make_mock()}, cfg8);
  save_experiment(r8, tmp2.dir());

  CHECK(read_file(tmp1.dir() + "/records.jsonl") ==
        read_file(tmp2.dir() + "/records.jsonl"));
}

TEST_CASE("warm cache rerun issues zero provider calls") {
  auto split = two_segment_split();
  std::vector<prompt::PromptStrategy> strategies(1);
  TempDir tmp;
  auto cache = std::make_shared<client::ResponseCache>(tmp.dir());
  auto cfg = config_for("model");

  auto mock1 = client::register_mock(
      "m", "model", {{"*", {client::MockStep::respond("T")}}});
  auto first = run_experiment(split, strategies, {mock1}, cfg, cache);
  CHECK(mock1->call_count() == 2);

  auto mock2 = client::register_mock(
      "m", "model", {{"*", {client::MockStep::respond("T")}}});
  auto second = run_experiment(split, strategies, {mock2}, cfg, cache);
  CHECK(mock2->call_count() == 0);
  REQUIRE(second.records.size() == first.records.size());
  for (std::size_t i = 0; i < first.records.size(); ++i) {
    CHECK(second.records[i].hypothesis == first.records[i].hypothesis);
    CHECK(second.records[i].phases[0].cached);
  }
}

TEST_CASE("failure isolation: one bad cell leaves others intact") {
  auto split = two_segment_split();
  std::vector<prompt::PromptStrategy> strategies(1);
  auto seg_a_prompt = prompt::render(strategies[0], split.segments[0]);
  auto mock = client::register_mock(
      "m", "model",
      {{seg_a_prompt, {client::MockStep::fail(400)}},
       {"*", {client::MockStep::respond("T")}}});
  auto cfg = config_for("model");
  cfg.failure_rate_threshold = 1.0;
  auto result = run_experiment(split, strategies, {mock}, cfg);
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].status == RecordStatus::Failed);
  CHECK(result.records[1].status == RecordStatus::OK);
  CHECK(result.records[1].hypothesis == "T");
  CHECK(result.failed_count == 1);
  REQUIRE(result.failed_ids.size() == 1);
  CHECK(result.failed_ids[0].find("a|") == 0);
}

TEST_CASE("failure rate above the threshold aborts the run") {
  corpus::DatasetSplit split;
  split.name = "many";
  for (int i = 0; i < 40; ++i)
    split.segments.push_back(
        segment("s" + std::to_string(i), Dialect::LEV, "نص"));
  split.recount();
  std::vector<prompt::PromptStrategy> strategies(1);
  auto mock = client::register_mock(
      "m", "model", {{"*", {client::MockStep::fail(400)}}});
  auto cfg = config_for("model");
  cfg.concurrency = 2;
  cfg.failure_rate_threshold = 0.10;
  auto result = run_experiment(split, strategies, {mock}, cfg);
  CHECK(result.aborted);
  CHECK(result.failed_count > 4);  // beyond the 10% budget
  CHECK(result.records.size() < 40);
}

TEST_CASE("experiment save/load round trip") {
  auto split = two_segment_split();
  std::vector<prompt::PromptStrategy> strategies(1);
  strategies[0].variant = prompt::Variant::AraTEaR;
  auto mock = client::register_mock("m", "model",
                                    ara_tear_rules("VERDICT: OK", "r"));
  auto result =
      run_experiment(split, strategies, {mock}, config_for("model"));
  CHECK(result.ara_clean_count == 2);

  TempDir tmp1, tmp2;
  save_experiment(result, tmp1.dir());
  auto loaded = load_experiment(tmp1.dir());
  save_experiment(loaded, tmp2.dir());
  CHECK(read_file(tmp1.dir() + "/records.jsonl") ==
        read_file(tmp2.dir() + "/records.jsonl"));
  CHECK(read_file(tmp1.dir() + "/manifest.json") ==
        read_file(tmp2.dir() + "/manifest.json"));
  CHECK(loaded.manifest.split_hash == corpus::split_hash(split));
}

TEST_CASE("token accounting sums per-call counts") {
  auto split = two_segment_split();
  std::vector<prompt::PromptStrategy> strategies(1);
  auto mock = client::register_mock(
      "m", "model", {{"*", {client::MockStep::respond("T", 10, 4, 0.1)}}});
  auto result =
      run_experiment(split, strategies, {mock}, config_for("model"));
  long prompt_total = 0, completion_total = 0;
  for (const auto& rec : result.records) {
    prompt_total += rec.total_prompt_tokens();
    completion_total += rec.total_completion_tokens();
  }
  CHECK(prompt_total == 20);
  CHECK(completion_total == 8);
}

TEST_SUITE_END();
