#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

#include "damsa/cache.hpp"
#include "damsa/client.hpp"
#include "damsa/corpus.hpp"
#include "damsa/errors.hpp"
#include "damsa/metrics.hpp"
#include "damsa/mock_provider.hpp"
#include "damsa/pipeline.hpp"
#include "damsa/prompt.hpp"
#include "damsa/report.hpp"
#include "damsa/stats.hpp"
#include "damsa/version.hpp"

namespace {

using namespace damsa;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitProvider = 3;

std::map<corpus::Dialect, std::size_t> parse_counts(const std::string& spec) {
  std::map<corpus::Dialect, std::size_t> counts;
  std::size_t start = 0;
  while (start < spec.size()) {
    auto comma = spec.find(',', start);
    std::string item = spec.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw DataError("bad count entry '" + item + "' (want DIALECT=N)");
    counts[corpus::dialect_from_string(item.substr(0, eq))] =
        std::stoul(item.substr(eq + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (counts.empty()) throw DataError("empty count spec");
  return counts;
}

std::map<corpus::Provenance, double> parse_mix(const std::string& spec) {
  std::map<corpus::Provenance, double> mix;
  std::size_t start = 0;
  while (start < spec.size()) {
    auto comma = spec.find(',', start);
    std::string item = spec.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw DataError("bad mix entry '" + item + "' (want PROVENANCE=RATIO)");
    mix[corpus::provenance_from_string(item.substr(0, eq))] =
        std::stod(item.substr(eq + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return mix;
}

std::vector<prompt::PromptStrategy> parse_strategies(
    const std::string& list, prompt::Labeling labeling) {
  std::vector<prompt::PromptStrategy> strategies;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    std::string item = list.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      prompt::PromptStrategy s;
      s.variant = prompt::variant_from_string(item);
      s.labeling = labeling;
      if (s.variant == prompt::Variant::FewShot)
        s.exemplar_set_id = "default";
      strategies.push_back(std::move(s));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (strategies.empty()) throw DataError("no strategies given");
  return strategies;
}

struct IngestArgs {
  std::string input;
  std::string format = "jsonl";
  std::string output;
  std::string dialect = "OTHER";
  std::size_t source_col = 0;
  std::size_t reference_col = 1;
  bool skip_header = false;
  std::string map_spec;
};

int cmd_ingest(const IngestArgs& args) {
  std::vector<corpus::ParallelSegment> segments;
  if (args.format == "jsonl") {
    corpus::FieldMap fields;
    if (!args.map_spec.empty()) {
      std::size_t start = 0;
      while (start < args.map_spec.size()) {
        auto comma = args.map_spec.find(',', start);
        std::string item = args.map_spec.substr(
            start,
            comma == std::string::npos ? std::string::npos : comma - start);
        auto eq = item.find('=');
        if (eq == std::string::npos)
          throw DataError("bad field mapping '" + item + "'");
        const std::string canonical = item.substr(0, eq);
        const std::string actual = item.substr(eq + 1);
        if (canonical == "id") fields.id = actual;
        else if (canonical == "dialect") fields.dialect = actual;
        else if (canonical == "source") fields.source = actual;
        else if (canonical == "reference") fields.reference = actual;
        else if (canonical == "provenance") fields.provenance = actual;
        else if (canonical == "domain") fields.domain = actual;
        else throw DataError("unknown canonical field '" + canonical + "'");
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    segments = corpus::ingest_jsonl(args.input, fields);
  } else if (args.format == "tsv") {
    segments = corpus::ingest_tsv(
        args.input, {args.source_col, args.reference_col},
        corpus::dialect_from_string(args.dialect), args.skip_header);
  } else {
    throw DataError("unknown ingest format '" + args.format + "'");
  }
  corpus::write_segments_jsonl(segments, args.output);
  std::cout << "ingested " << segments.size() << " segments -> "
            << args.output << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DA->MSA translation benchmark harness"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for all randomized steps");

  // ingest
  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Convert a corpus file to "
                                              "canonical JSONL");
  ingest->add_option("--input", ingest_args.input)->required();
  ingest->add_option("--format", ingest_args.format)
      ->check(CLI::IsMember({"jsonl", "tsv"}));
  ingest->add_option("--output", ingest_args.output)->required();
  ingest->add_option("--dialect", ingest_args.dialect,
                     "Dialect tag for TSV rows");
  ingest->add_option("--source-col", ingest_args.source_col);
  ingest->add_option("--reference-col", ingest_args.reference_col);
  ingest->add_flag("--skip-header", ingest_args.skip_header);
  ingest->add_option("--map", ingest_args.map_spec,
                     "JSONL field mapping, e.g. source=src,reference=tgt");

  // split
  std::string split_pool, split_name = "test", split_counts, split_mix,
              split_output;
  auto* split_cmd = app.add_subcommand("split", "Build a seeded test split");
  split_cmd->add_option("--pool", split_pool)->required();
  split_cmd->add_option("--name", split_name);
  split_cmd->add_option("--counts", split_counts, "e.g. LEV=200,GLF=200")
      ->required();
  split_cmd->add_option("--mix", split_mix,
                        "e.g. curated=0.7,social_media=0.3");
  split_cmd->add_option("--output", split_output)->required();

  // export-ft
  std::string export_split, export_output;
  auto* export_cmd =
      app.add_subcommand("export-ft", "Export instruction-format records");
  export_cmd->add_option("--split", export_split)->required();
  export_cmd->add_option("--output", export_output)->required();

  // run
  std::string run_split, run_strategies = "zero_shot", run_providers,
              run_cache_dir, run_labeling = "explicit", run_exemplars,
              run_templates, run_output;
  int run_concurrency = 4;
  double run_fail_threshold = 0.10;
  bool run_resume = false;
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment");
  run_cmd->add_option("--split", run_split)->required();
  run_cmd->add_option("--strategies", run_strategies,
                      "Comma list: zero_shot,zero_shot_cot,few_shot,ara_tear");
  run_cmd->add_option("--providers", run_providers, "Provider config JSON")
      ->required();
  run_cmd->add_option("--concurrency", run_concurrency);
  run_cmd->add_option("--cache-dir", run_cache_dir);
  run_cmd->add_option("--labeling", run_labeling)
      ->check(CLI::IsMember({"explicit", "generic"}));
  run_cmd->add_option("--exemplars", run_exemplars, "Exemplar JSONL");
  run_cmd->add_option("--templates", run_templates, "Template override file");
  run_cmd->add_option("--output-dir", run_output)->required();
  run_cmd->add_option("--fail-threshold", run_fail_threshold);
  run_cmd->add_flag("--resume", run_resume,
                    "Reuse the cache from an interrupted run (requires "
                    "--cache-dir)");

  // score
  std::string score_run, score_split, score_output;
  bool score_weighted = false;
  auto* score_cmd = app.add_subcommand("score", "Score an experiment");
  score_cmd->add_option("--run", score_run)->required();
  score_cmd->add_option("--split", score_split)->required();
  score_cmd->add_option("--output-dir", score_output)->required();
  score_cmd->add_flag("--weighted", score_weighted,
                      "Weight dialect averages by segment count");

  // stats
  std::string stats_run, stats_split, stats_output;
  double stats_alpha = 0.05;
  bool stats_sphericity_flip = false;
  auto* stats_cmd =
      app.add_subcommand("stats", "Significance analysis per model");
  stats_cmd->add_option("--run", stats_run)->required();
  stats_cmd->add_option("--split", stats_split)->required();
  stats_cmd->add_option("--output-dir", stats_output)->required();
  stats_cmd->add_option("--alpha", stats_alpha);
  stats_cmd->add_flag("--sphericity-met-when-p-low", stats_sphericity_flip,
                      "Treat p <= alpha as sphericity met (non-standard)");

  // report
  std::string report_run, report_split, report_format = "csv", report_output;
  auto* report_cmd = app.add_subcommand("report", "Emit result tables");
  report_cmd->add_option("--run", report_run)->required();
  report_cmd->add_option("--split", report_split)->required();
  report_cmd->add_option("--format", report_format)
      ->check(CLI::IsMember({"csv", "markdown", "json"}));
  report_cmd->add_option("--output-dir", report_output)->required();

  // compare
  std::string compare_a, compare_b, compare_output;
  auto* compare_cmd = app.add_subcommand("compare", "Diff two score grids");
  compare_cmd->add_option("--a", compare_a)->required();
  compare_cmd->add_option("--b", compare_b)->required();
  compare_cmd->add_option("--output", compare_output)->required();

  // cache
  std::string cache_dir;
  bool cache_stats = false, cache_evict = false;
  auto* cache_cmd = app.add_subcommand("cache", "Inspect or evict the cache");
  cache_cmd->add_option("--dir", cache_dir)->required();
  cache_cmd->add_flag("--stats", cache_stats);
  cache_cmd->add_flag("--evict-all", cache_evict);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_args);

    if (*split_cmd) {
      auto pool = corpus::ingest_jsonl(split_pool);
      corpus::SplitSpec spec;
      spec.name = split_name;
      spec.counts = parse_counts(split_counts);
      if (!split_mix.empty()) spec.mix = parse_mix(split_mix);
      spec.seed = seed;
      auto split = corpus::build_test_split(pool, spec);
      corpus::save_split(split, split_output);
      std::cout << "split '" << split.name << "' with "
                << split.segments.size() << " segments -> " << split_output
                << "\n";
      return kExitOk;
    }

    if (*export_cmd) {
      auto split = corpus::load_split(export_split);
      corpus::write_instruction_file(split, export_output);
      std::cout << "exported " << split.segments.size() << " records -> "
                << export_output << "\n";
      return kExitOk;
    }

    if (*run_cmd) {
      auto split = corpus::load_split(run_split);
      pipeline::RunConfig config;
      config.labeling = run_labeling == "generic"
                            ? prompt::Labeling::GenericDialectal
                            : prompt::Labeling::ExplicitDialect;
      config.concurrency = run_concurrency;
      config.failure_rate_threshold = run_fail_threshold;
      config.seed = seed;
      prompt::ExemplarStore exemplars;
      if (!run_exemplars.empty()) {
        exemplars = prompt::load_exemplars(run_exemplars);
        config.exemplars = &exemplars;
      }
      if (!run_templates.empty())
        config.templates = prompt::load_templates(run_templates);

      auto strategies = parse_strategies(run_strategies, config.labeling);
      std::vector<std::shared_ptr<client::Provider>> providers;
      for (const auto& pc : client::load_provider_configs(run_providers))
        providers.push_back(client::make_provider(pc));
      if (run_resume && run_cache_dir.empty())
        throw DataError("--resume requires --cache-dir");
      std::shared_ptr<client::ResponseCache> cache;
      if (!run_cache_dir.empty())
        cache = std::make_shared<client::ResponseCache>(run_cache_dir);

      auto result =
          pipeline::run_experiment(split, strategies, providers, config, cache);
      pipeline::save_experiment(result, run_output);
      std::cout << result.records.size() << " records ("
                << result.failed_count << " failed) -> " << run_output
                << "\n";
      if (result.aborted) {
        std::cerr << "aborted: failure rate exceeded "
                  << run_fail_threshold * 100 << "%\n";
        return kExitProvider;
      }
      return kExitOk;
    }

    if (*score_cmd) {
      auto result = pipeline::load_experiment(score_run);
      auto split = corpus::load_split(score_split);
      auto grid = report::score_experiment(result, split, {}, {},
                                           score_weighted);
      std::filesystem::create_directories(score_output);
      report::save_grid(grid, score_output + "/grid.json");
      report::write_segment_scores(result, split, {}, {}, score_output);
      std::cout << "scored " << grid.cells.size() << " cells -> "
                << score_output << "/grid.json\n";
      return kExitOk;
    }

    if (*stats_cmd) {
      auto result = pipeline::load_experiment(stats_run);
      auto split = corpus::load_split(stats_split);
      auto matrices = report::sentence_score_matrices(result, split);
      stats::SignificanceConfig config;
      config.alpha = stats_alpha;
      config.sphericity_met_when_p_greater = !stats_sphericity_flip;
      std::vector<stats::SignificanceReport> reports;
      std::filesystem::create_directories(stats_output);
      for (const auto& [model, mm] : matrices) {
        auto report = stats::assumption_pipeline(mm.data, config);
        report.model_id = model;
        report.dropped_subjects = mm.dropped_subjects;
        // QQ plot data per condition
        for (std::size_t j = 0; j < mm.data.k(); ++j) {
          auto points = stats::qq_points(mm.data.column(j));
          std::ofstream qq(stats_output + "/qq_" + model + "_" +
                           std::to_string(j) + ".csv");
          qq << "theoretical,sample\n";
          for (const auto& [t, s] : points) qq << t << "," << s << "\n";
        }
        reports.push_back(std::move(report));
      }
      report::save_significance(reports, stats_output + "/significance.json");
      std::cout << reports.size() << " model reports -> " << stats_output
                << "/significance.json\n";
      return kExitOk;
    }

    if (*report_cmd) {
      auto result = pipeline::load_experiment(report_run);
      auto split = corpus::load_split(report_split);
      auto grid = report::score_experiment(result, split);
      auto matrices = report::sentence_score_matrices(result, split);
      std::vector<stats::SignificanceReport> reports;
      for (const auto& [model, mm] : matrices) {
        auto rep = stats::assumption_pipeline(mm.data);
        rep.model_id = model;
        rep.dropped_subjects = mm.dropped_subjects;
        reports.push_back(std::move(rep));
      }
      auto profile = report::profile_cost(result);
      auto files = report::emit_tables(
          grid, reports, profile,
          report::table_format_from_string(report_format), report_output);
      for (const auto& f : files) std::cout << f << "\n";
      return kExitOk;
    }

    if (*compare_cmd) {
      auto a = report::load_grid(compare_a);
      auto b = report::load_grid(compare_b);
      auto delta = report::compare_runs(a, b);
      std::ofstream out(compare_output, std::ios::binary);
      if (!out) throw DataError("cannot write " + compare_output);
      out << "model,strategy,dialect,chrf_delta,bleu_delta\n";
      for (const auto& d : delta.deltas) {
        out << d.model << "," << d.strategy << "," << d.dialect << ","
            << d.chrf_delta << "," << d.bleu_delta << "\n";
      }
      for (const auto& k : delta.only_in_a) out << "# only in a: " << k << "\n";
      for (const auto& k : delta.only_in_b) out << "# only in b: " << k << "\n";
      std::cout << delta.deltas.size() << " cell deltas -> " << compare_output
                << "\n";
      return kExitOk;
    }

    if (*cache_cmd) {
      client::ResponseCache cache(cache_dir);
      if (cache_evict) {
        cache.evict_all();
        std::cout << "cache evicted\n";
      }
      if (cache_stats || !cache_evict) {
        std::cout << "entries: " << cache.size() << "\n";
      }
      return kExitOk;
    }
  } catch (const client::ClientError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
