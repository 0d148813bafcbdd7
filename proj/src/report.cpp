#include "damsa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace damsa::report {

using nlohmann::json;
using pipeline::RecordStatus;

namespace {

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string fmt_p(double v) { return fmt(v, "%.6g"); }

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == ' ' || c == '|' || c == ':') c = '_';
  }
  return s;
}

std::vector<std::string> dialect_order_present(
    const std::set<std::string>& present) {
  std::vector<std::string> ordered;
  for (const char* d : {"LEV", "GLF", "EGY", "MSA", "OTHER"}) {
    if (present.count(d)) ordered.push_back(d);
  }
  return ordered;
}

// Strategy display names in the order the run declared them.
std::vector<std::pair<std::string, std::string>> strategy_axis(
    const pipeline::ExperimentResult& result) {
  std::vector<std::pair<std::string, std::string>> axis;  // key -> display
  std::set<std::string> seen;
  auto add = [&](const std::string& key, const std::string& display) {
    if (seen.insert(key).second) axis.emplace_back(key, display);
  };
  if (!result.manifest.strategies.empty()) {
    for (const auto& key : result.manifest.strategies) add(key, key);
    for (const auto& rec : result.records) {
      for (auto& [key, display] : axis) {
        if (key == rec.strategy.key()) display = rec.strategy.display_name();
      }
    }
  } else {
    for (const auto& rec : result.records)
      add(rec.strategy.key(), rec.strategy.display_name());
  }
  return axis;
}

struct CsvWriter {
  std::ofstream out;
  explicit CsvWriter(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw DataError("cannot write " + path);
  }
  void comment(const std::string& line) { out << "# " << line << "\n"; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ",";
      bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (quote) {
        std::string escaped = cells[i];
        std::size_t pos = 0;
        while ((pos = escaped.find('"', pos)) != std::string::npos) {
          escaped.insert(pos, 1, '"');
          pos += 2;
        }
        out << '"' << escaped << '"';
      } else {
        out << cells[i];
      }
    }
    out << "\n";
  }
};

struct MarkdownTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ofstream& out) const {
    auto line = [&](const std::vector<std::string>& cells) {
      out << "|";
      for (const auto& c : cells) out << " " << c << " |";
      out << "\n";
    };
    line(header);
    std::vector<std::string> sep(header.size(), "---");
    line(sep);
    for (const auto& r : rows) line(r);
  }
};

}  // namespace

std::string ScoreGrid::cell_key(const std::string& model,
                                const std::string& strategy,
                                const std::string& dialect) {
  return model + "|" + strategy + "|" + dialect;
}

const ScoreGrid::Cell* ScoreGrid::find_cell(const std::string& model,
                                            const std::string& strategy,
                                            const std::string& dialect) const {
  auto it = cells.find(cell_key(model, strategy, dialect));
  return it == cells.end() ? nullptr : &it->second;
}

const ScoreGrid::Average* ScoreGrid::find_average(
    const std::string& model, const std::string& strategy) const {
  auto it = averages.find(model + "|" + strategy);
  return it == averages.end() ? nullptr : &it->second;
}

double unweighted_mean(const std::vector<double>& values) {
  if (values.empty()) throw DataError("mean of empty value list");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / double(values.size());
}

ScoreGrid score_experiment(const pipeline::ExperimentResult& result,
                           const corpus::DatasetSplit& split,
                           const metrics::ChrfParams& chrf_params,
                           const metrics::BleuParams& bleu_params,
                           bool weighted_average) {
  chrf_params.validate();
  bleu_params.validate();

  std::map<std::string, const corpus::ParallelSegment*> segment_index;
  for (const auto& seg : split.segments) segment_index[seg.id] = &seg;

  const auto axis = strategy_axis(result);
  std::map<std::string, std::string> display_of;
  for (const auto& [key, display] : axis) display_of[key] = display;

  // Bucket hypotheses/references per (model, strategy, dialect).
  struct Bucket {
    std::vector<std::string> hyps;
    std::vector<std::string> refs;
  };
  std::map<std::string, Bucket> buckets;
  std::set<std::string> models_seen, dialects_seen;
  ScoreGrid grid;
  for (const auto& rec : result.records) {
    if (rec.status == RecordStatus::Failed) {
      ++grid.excluded_failed;
      continue;
    }
    auto seg_it = segment_index.find(rec.segment_id);
    if (seg_it == segment_index.end()) {
      throw DataError("record references unknown segment " + rec.segment_id);
    }
    const auto& seg = *seg_it->second;
    const std::string dialect = corpus::to_string(seg.dialect);
    const std::string strategy = display_of.count(rec.strategy.key())
                                     ? display_of[rec.strategy.key()]
                                     : rec.strategy.display_name();
    auto& bucket =
        buckets[ScoreGrid::cell_key(rec.model_id, strategy, dialect)];
    bucket.hyps.push_back(rec.hypothesis);
    bucket.refs.push_back(seg.reference_text);
    models_seen.insert(rec.model_id);
    dialects_seen.insert(dialect);
  }

  grid.models.assign(models_seen.begin(), models_seen.end());
  for (const auto& [key, display] : axis) grid.strategies.push_back(display);
  grid.dialects = dialect_order_present(dialects_seen);
  grid.weighted = weighted_average;
  grid.chrf_signature = chrf_params.signature();
  grid.bleu_signature = bleu_params.signature();
  {
    pipeline::RunManifest manifest = result.manifest;
    manifest.chrf_signature = grid.chrf_signature;
    manifest.bleu_signature = grid.bleu_signature;
    grid.manifest_hash = manifest.hash();
  }

  for (const auto& [key, bucket] : buckets) {
    ScoreGrid::Cell cell;
    cell.n = bucket.hyps.size();
    cell.chrf =
        metrics::chrf_pp_corpus(bucket.hyps, bucket.refs, chrf_params)
            .corpus_value;
    cell.bleu =
        metrics::bleu_corpus(bucket.hyps, bucket.refs, bleu_params)
            .corpus_value;
    grid.cells[key] = cell;
  }

  recompute_averages(grid);
  return grid;
}

void recompute_averages(ScoreGrid& grid) {
  grid.averages.clear();
  for (const auto& model : grid.models) {
    for (const auto& strategy : grid.strategies) {
      std::vector<double> chrf_cells, bleu_cells, weights;
      for (const auto& dialect : grid.dialects) {
        const auto* cell = grid.find_cell(model, strategy, dialect);
        if (cell == nullptr || cell->n == 0) continue;
        chrf_cells.push_back(cell->chrf);
        bleu_cells.push_back(cell->bleu);
        weights.push_back(double(cell->n));
      }
      if (chrf_cells.empty()) continue;
      ScoreGrid::Average avg;
      avg.dialect_cells = chrf_cells.size();
      if (grid.weighted) {
        double wsum = 0, cw = 0, bw = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
          wsum += weights[i];
          cw += chrf_cells[i] * weights[i];
          bw += bleu_cells[i] * weights[i];
        }
        avg.chrf = cw / wsum;
        avg.bleu = bw / wsum;
      } else {
        avg.chrf = unweighted_mean(chrf_cells);
        avg.bleu = unweighted_mean(bleu_cells);
      }
      grid.averages[model + "|" + strategy] = avg;
    }
  }
}

std::map<std::string, ModelMeasures> sentence_score_matrices(
    const pipeline::ExperimentResult& result,
    const corpus::DatasetSplit& split,
    const metrics::ChrfParams& chrf_params) {
  chrf_params.validate();
  std::map<std::string, const corpus::ParallelSegment*> segment_index;
  for (const auto& seg : split.segments) segment_index[seg.id] = &seg;

  const auto axis = strategy_axis(result);

  // (model, strategy key, segment) -> hypothesis (OK records only)
  std::map<std::string, const pipeline::TranslationRecord*> lookup;
  std::set<std::string> models;
  for (const auto& rec : result.records) {
    models.insert(rec.model_id);
    if (rec.status != RecordStatus::OK) continue;
    lookup[rec.model_id + "\x1f" + rec.strategy.key() + "\x1f" +
           rec.segment_id] = &rec;
  }

  std::map<std::string, ModelMeasures> out;
  for (const auto& model : models) {
    ModelMeasures mm;
    for (const auto& [key, display] : axis) mm.data.conditions.push_back(display);
    for (const auto& seg : split.segments) {
      std::vector<double> row;
      bool complete = true;
      for (const auto& [key, display] : axis) {
        auto it = lookup.find(model + "\x1f" + key + "\x1f" + seg.id);
        if (it == lookup.end()) {
          complete = false;
          break;
        }
        row.push_back(metrics::chrf_pp_sentence(it->second->hypothesis,
                                                seg.reference_text,
                                                chrf_params));
      }
      if (complete) {
        mm.data.subjects.push_back(seg.id);
        mm.data.values.push_back(std::move(row));
      } else {
        ++mm.dropped_subjects;
      }
    }
    out.emplace(model, std::move(mm));
  }
  return out;
}

CostProfile profile_cost(const pipeline::ExperimentResult& result) {
  const auto axis = strategy_axis(result);
  std::map<std::string, StrategyCost> by_strategy;
  std::map<std::string, std::pair<double, std::size_t>> latency_acc;
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>>
      phase_acc;

  for (const auto& rec : result.records) {
    const std::string strategy = rec.strategy.display_name();
    auto& cost = by_strategy[strategy];
    cost.strategy = strategy;
    ++cost.records;
    cost.calls += long(rec.phases.size());
    cost.prompt_tokens += rec.total_prompt_tokens();
    cost.completion_tokens += rec.total_completion_tokens();

    bool any_cached = false;
    for (const auto& phase : rec.phases) any_cached |= phase.cached;
    if (!any_cached && !rec.phases.empty()) {
      auto& [sum, n] = latency_acc[strategy];
      sum += rec.total_latency();
      ++n;
    }
    for (const auto& phase : rec.phases) {
      if (phase.cached) continue;
      auto& [sum, n] = phase_acc[strategy][pipeline::to_string(phase.name)];
      sum += phase.latency_seconds;
      ++n;
    }
  }

  CostProfile profile;
  for (const auto& [key, display] : axis) {
    auto it = by_strategy.find(display);
    if (it == by_strategy.end()) continue;
    StrategyCost cost = it->second;
    auto lat = latency_acc.find(display);
    if (lat != latency_acc.end() && lat->second.second > 0) {
      cost.mean_latency = lat->second.first / double(lat->second.second);
      cost.latency_records = lat->second.second;
    }
    auto pit = phase_acc.find(display);
    if (pit != phase_acc.end()) {
      for (const auto& [phase, acc] : pit->second) {
        if (acc.second == 0) continue;
        cost.phases[phase] = {acc.first / double(acc.second), acc.second};
      }
    }
    profile.strategies.push_back(std::move(cost));
    by_strategy.erase(display);
  }
  // strategies present in records but not in the manifest axis
  for (auto& [display, cost] : by_strategy)
    profile.strategies.push_back(cost);
  return profile;
}

TableFormat table_format_from_string(std::string_view s) {
  if (s == "csv") return TableFormat::Csv;
  if (s == "markdown" || s == "md") return TableFormat::Markdown;
  if (s == "json") return TableFormat::Json;
  throw DataError("unknown table format '" + std::string(s) + "'");
}

namespace {

json grid_to_json(const ScoreGrid& grid) {
  json j;
  j["models"] = grid.models;
  j["strategies"] = grid.strategies;
  j["dialects"] = grid.dialects;
  j["excluded_failed"] = grid.excluded_failed;
  j["weighted"] = grid.weighted;
  j["chrf_signature"] = grid.chrf_signature;
  j["bleu_signature"] = grid.bleu_signature;
  j["manifest_hash"] = grid.manifest_hash;
  json cells = json::object();
  for (const auto& [key, cell] : grid.cells) {
    cells[key] = {{"chrf", cell.chrf}, {"bleu", cell.bleu}, {"n", cell.n}};
  }
  j["cells"] = cells;
  json averages = json::object();
  for (const auto& [key, avg] : grid.averages) {
    averages[key] = {{"chrf", avg.chrf},
                     {"bleu", avg.bleu},
                     {"dialect_cells", avg.dialect_cells}};
  }
  j["averages"] = averages;
  return j;
}

ScoreGrid grid_from_json(const json& j) {
  ScoreGrid grid;
  grid.models = j.at("models").get<std::vector<std::string>>();
  grid.strategies = j.at("strategies").get<std::vector<std::string>>();
  grid.dialects = j.at("dialects").get<std::vector<std::string>>();
  grid.excluded_failed = j.at("excluded_failed").get<std::size_t>();
  grid.weighted = j.at("weighted").get<bool>();
  grid.chrf_signature = j.at("chrf_signature").get<std::string>();
  grid.bleu_signature = j.at("bleu_signature").get<std::string>();
  grid.manifest_hash = j.at("manifest_hash").get<std::string>();
  for (const auto& [key, cj] : j.at("cells").items()) {
    ScoreGrid::Cell cell;
    cell.chrf = cj.at("chrf").get<double>();
    cell.bleu = cj.at("bleu").get<double>();
    cell.n = cj.at("n").get<std::size_t>();
    grid.cells[key] = cell;
  }
  for (const auto& [key, aj] : j.at("averages").items()) {
    ScoreGrid::Average avg;
    avg.chrf = aj.at("chrf").get<double>();
    avg.bleu = aj.at("bleu").get<double>();
    avg.dialect_cells = aj.at("dialect_cells").get<std::size_t>();
    grid.averages[key] = avg;
  }
  return grid;
}

json significance_to_json(const stats::SignificanceReport& r) {
  json j;
  j["model"] = r.model_id;
  json normality = json::array();
  for (const auto& nr : r.normality) {
    normality.push_back({{"condition", nr.condition},
                         {"W", nr.w},
                         {"p", nr.p},
                         {"normal", nr.normal}});
  }
  j["normality"] = normality;
  if (r.sphericity.applicable) {
    j["sphericity"] = {{"applicable", true},
                       {"W", r.sphericity.w},
                       {"chi2", r.sphericity.chi2},
                       {"df", r.sphericity.df},
                       {"p", r.sphericity.p},
                       {"met", r.sphericity.met}};
  } else {
    j["sphericity"] = {{"applicable", false}};
  }
  j["anova"] = {{"ss_subjects", r.anova.ss_subjects},
                {"ss_conditions", r.anova.ss_conditions},
                {"ss_error", r.anova.ss_error},
                {"df_conditions", r.anova.df_conditions},
                {"df_error", r.anova.df_error},
                {"F", r.anova.f},
                {"p", r.anova.p},
                {"gg_epsilon", r.anova.gg_epsilon},
                {"p_gg", r.anova.p_gg}};
  j["omnibus_significant"] = r.omnibus_significant;
  j["used_gg_correction"] = r.used_gg_correction;
  json pairwise = json::array();
  for (const auto& cmp : r.pairwise) {
    pairwise.push_back({{"strategy_a", cmp.cond_a},
                        {"strategy_b", cmp.cond_b},
                        {"mean_a", cmp.mean_a},
                        {"mean_b", cmp.mean_b},
                        {"t", cmp.t},
                        {"df", cmp.df},
                        {"raw_p", cmp.raw_p},
                        {"adjusted_p", cmp.adjusted_p},
                        {"significant", cmp.significant},
                        {"degenerate", cmp.degenerate}});
  }
  j["pairwise"] = pairwise;
  j["dropped_subjects"] = r.dropped_subjects;
  j["annotations"] = r.annotations;
  return j;
}

std::string provenance_comment(const ScoreGrid& grid) {
  return "manifest=" + grid.manifest_hash + " chrf=" + grid.chrf_signature +
         " bleu=" + grid.bleu_signature;
}

}  // namespace

std::vector<std::string> emit_tables(
    const ScoreGrid& grid, const std::vector<stats::SignificanceReport>& reports,
    const CostProfile& profile, TableFormat format,
    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;

  auto score_of = [&](const std::string& model, const std::string& strategy,
                      const std::string& dialect, bool chrf) -> std::string {
    if (dialect.empty()) {
      const auto* avg = grid.find_average(model, strategy);
      if (avg == nullptr) return "";
      return fmt(chrf ? avg->chrf : avg->bleu, "%.2f");
    }
    const auto* cell = grid.find_cell(model, strategy, dialect);
    if (cell == nullptr) return "";
    return fmt(chrf ? cell->chrf : cell->bleu, "%.2f");
  };

  struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
  };
  std::vector<Table> tables;

  for (bool chrf : {true, false}) {
    Table t;
    t.name = std::string("scores_overall_") + (chrf ? "chrf" : "bleu");
    t.header.push_back("Model");
    for (const auto& s : grid.strategies) t.header.push_back(s);
    for (const auto& model : grid.models) {
      std::vector<std::string> row{model};
      for (const auto& s : grid.strategies)
        row.push_back(score_of(model, s, "", chrf));
      t.rows.push_back(std::move(row));
    }
    tables.push_back(std::move(t));
  }
  for (const auto& dialect : grid.dialects) {
    for (bool chrf : {true, false}) {
      Table t;
      t.name = "scores_" + sanitize(dialect) + (chrf ? "_chrf" : "_bleu");
      t.header.push_back("Model");
      for (const auto& s : grid.strategies) t.header.push_back(s);
      for (const auto& model : grid.models) {
        std::vector<std::string> row{model};
        for (const auto& s : grid.strategies)
          row.push_back(score_of(model, s, dialect, chrf));
        t.rows.push_back(std::move(row));
      }
      tables.push_back(std::move(t));
    }
  }
  {
    Table t;
    t.name = "significance";
    t.header = {"model", "strategyA", "strategyB", "raw_p", "adjusted_p",
                "significant"};
    for (const auto& report : reports) {
      for (const auto& cmp : report.pairwise) {
        t.rows.push_back({report.model_id, cmp.cond_a, cmp.cond_b,
                          cmp.degenerate ? "degenerate" : fmt_p(cmp.raw_p),
                          cmp.degenerate ? "degenerate" : fmt_p(cmp.adjusted_p),
                          cmp.significant ? "yes" : "no"});
      }
    }
    tables.push_back(std::move(t));
  }
  {
    Table t;
    t.name = "cost_profile";
    t.header = {"strategy",       "records",        "calls",
                "mean_latency_s", "prompt_tokens",  "completion_tokens",
                "translate_s",    "evaluate_s",     "refine_s"};
    for (const auto& cost : profile.strategies) {
      auto phase_mean = [&](const char* name) -> std::string {
        auto it = cost.phases.find(name);
        if (it == cost.phases.end()) return "";
        return fmt(it->second.mean_latency, "%.4f");
      };
      t.rows.push_back({cost.strategy, std::to_string(cost.records),
                        std::to_string(cost.calls),
                        fmt(cost.mean_latency, "%.4f"),
                        std::to_string(cost.prompt_tokens),
                        std::to_string(cost.completion_tokens),
                        phase_mean("translate"), phase_mean("evaluate"),
                        phase_mean("refine")});
    }
    tables.push_back(std::move(t));
  }

  if (format == TableFormat::Json) {
    json j;
    j["provenance"] = {{"manifest_hash", grid.manifest_hash},
                       {"chrf_signature", grid.chrf_signature},
                       {"bleu_signature", grid.bleu_signature}};
    j["grid"] = grid_to_json(grid);
    json sig = json::array();
    for (const auto& r : reports) sig.push_back(significance_to_json(r));
    j["significance"] = sig;
    json cost = json::array();
    for (const auto& c : profile.strategies) {
      json cj;
      cj["strategy"] = c.strategy;
      cj["records"] = c.records;
      cj["calls"] = c.calls;
      cj["mean_latency_seconds"] = c.mean_latency;
      cj["latency_records"] = c.latency_records;
      cj["prompt_tokens"] = c.prompt_tokens;
      cj["completion_tokens"] = c.completion_tokens;
      json phases = json::object();
      for (const auto& [name, pc] : c.phases) {
        phases[name] = {{"mean_latency_seconds", pc.mean_latency},
                        {"n", pc.n}};
      }
      cj["phases"] = phases;
      cost.push_back(std::move(cj));
    }
    j["cost"] = cost;
    const std::string path = out_dir + "/report.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
    written.push_back(path);
    return written;
  }

  for (const auto& t : tables) {
    if (format == TableFormat::Csv) {
      const std::string path = out_dir + "/" + t.name + ".csv";
      CsvWriter csv(path);
      csv.comment(provenance_comment(grid));
      csv.row(t.header);
      for (const auto& r : t.rows) csv.row(r);
      written.push_back(path);
    } else {
      const std::string path = out_dir + "/" + t.name + ".md";
      std::ofstream out(path, std::ios::binary);
      if (!out) throw DataError("cannot write " + path);
      MarkdownTable md;
      md.header = t.header;
      md.rows = t.rows;
      md.write(out);
      out << "\n" << provenance_comment(grid) << "\n";
      written.push_back(path);
    }
  }
  return written;
}

std::vector<std::string> write_segment_scores(
    const pipeline::ExperimentResult& result,
    const corpus::DatasetSplit& split, const metrics::ChrfParams& chrf_params,
    const metrics::BleuParams& bleu_params, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::map<std::string, const corpus::ParallelSegment*> segment_index;
  for (const auto& seg : split.segments) segment_index[seg.id] = &seg;

  const std::string chrf_sig = chrf_params.signature();
  const std::string bleu_sig = bleu_params.signature();

  std::map<std::string, std::vector<const pipeline::TranslationRecord*>>
      by_cell;
  for (const auto& rec : result.records) {
    if (rec.status != RecordStatus::OK) continue;
    by_cell[rec.model_id + "|" + rec.strategy.key()].push_back(&rec);
  }

  std::vector<std::string> written;
  for (const auto& [cell, records] : by_cell) {
    const std::string path =
        out_dir + "/segment_scores_" + sanitize(cell) + ".csv";
    CsvWriter csv(path);
    csv.row({"segment_id", "metric", "value", "params_signature"});
    for (const auto* rec : records) {
      auto seg_it = segment_index.find(rec->segment_id);
      if (seg_it == segment_index.end()) continue;
      const auto& ref = seg_it->second->reference_text;
      csv.row({rec->segment_id, "chrF++",
               fmt(metrics::chrf_pp_sentence(rec->hypothesis, ref,
                                             chrf_params)),
               chrf_sig});
      csv.row({rec->segment_id, "BLEU",
               fmt(metrics::bleu_sentence(rec->hypothesis, ref, bleu_params)),
               bleu_sig});
    }
    written.push_back(path);
  }
  return written;
}

DeltaReport compare_runs(const ScoreGrid& a, const ScoreGrid& b) {
  DeltaReport report;
  for (const auto& [key, cell_a] : a.cells) {
    auto it = b.cells.find(key);
    if (it == b.cells.end()) {
      report.only_in_a.push_back(key);
      continue;
    }
    DeltaEntry entry;
    auto first = key.find('|');
    auto second = key.find('|', first + 1);
    entry.model = key.substr(0, first);
    entry.strategy = key.substr(first + 1, second - first - 1);
    entry.dialect = key.substr(second + 1);
    entry.chrf_delta = it->second.chrf - cell_a.chrf;
    entry.bleu_delta = it->second.bleu - cell_a.bleu;
    report.deltas.push_back(std::move(entry));
  }
  for (const auto& [key, cell_b] : b.cells) {
    if (!a.cells.count(key)) report.only_in_b.push_back(key);
  }
  if (report.deltas.empty())
    throw DataError("score grids share no (model, strategy, dialect) cells");
  return report;
}

void save_grid(const ScoreGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << grid_to_json(grid).dump(2) << "\n";
}

ScoreGrid load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed grid file " + path + ": " + e.what());
  }
  return grid_from_json(j);
}

void save_significance(const std::vector<stats::SignificanceReport>& reports,
                       const std::string& path) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(significance_to_json(r));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << arr.dump(2) << "\n";
}

}  // namespace damsa::report
