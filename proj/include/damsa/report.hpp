#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "damsa/corpus.hpp"
#include "damsa/metrics.hpp"
#include "damsa/pipeline.hpp"
#include "damsa/stats.hpp"

namespace damsa::report {

// Corpus-level scores per (model, strategy, dialect) cell plus the
// per-(model, strategy) dialect average.
struct ScoreGrid {
  struct Cell {
    double chrf = 0.0;
    double bleu = 0.0;
    std::size_t n = 0;
  };
  struct Average {
    double chrf = 0.0;
    double bleu = 0.0;
    std::size_t dialect_cells = 0;
  };

  std::vector<std::string> models;
  std::vector<std::string> strategies;  // display names, run order
  std::vector<std::string> dialects;
  std::map<std::string, Cell> cells;        // "model|strategy|dialect"
  std::map<std::string, Average> averages;  // "model|strategy"
  std::size_t excluded_failed = 0;
  bool weighted = false;
  std::string chrf_signature;
  std::string bleu_signature;
  std::string manifest_hash;

  static std::string cell_key(const std::string& model,
                              const std::string& strategy,
                              const std::string& dialect);
  const Cell* find_cell(const std::string& model, const std::string& strategy,
                        const std::string& dialect) const;
  const Average* find_average(const std::string& model,
                              const std::string& strategy) const;
};

// Equal-weight mean over dialect cells (the headline aggregation). The
// weighted variant weights each dialect cell by its segment count.
double unweighted_mean(const std::vector<double>& values);

// Rebuilds grid.averages from grid.cells; score_experiment's aggregation
// step, exposed so averaging can be driven with known cell values.
void recompute_averages(ScoreGrid& grid);

ScoreGrid score_experiment(const pipeline::ExperimentResult& result,
                           const corpus::DatasetSplit& split,
                           const metrics::ChrfParams& chrf_params = {},
                           const metrics::BleuParams& bleu_params = {},
                           bool weighted_average = false);

// Sentence-level chrF++ matrices (segments x strategies), one per model;
// feeds the significance analysis. Subjects with any Failed cell are
// dropped; the drop count is returned per model.
struct ModelMeasures {
  stats::RepeatedMeasures data;
  std::size_t dropped_subjects = 0;
};
std::map<std::string, ModelMeasures> sentence_score_matrices(
    const pipeline::ExperimentResult& result,
    const corpus::DatasetSplit& split,
    const metrics::ChrfParams& chrf_params = {});

// Latency/token accounting per strategy. Latency means only cover records
// whose phases were all fresh (cache hits report latency 0); token totals
// cover everything.
struct PhaseCost {
  double mean_latency = 0.0;
  std::size_t n = 0;
};
struct StrategyCost {
  std::string strategy;
  std::size_t records = 0;
  std::size_t latency_records = 0;
  double mean_latency = 0.0;  // mean of per-record phase-latency sums
  long calls = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::map<std::string, PhaseCost> phases;  // translate/evaluate/refine
};
struct CostProfile {
  std::vector<StrategyCost> strategies;
};

CostProfile profile_cost(const pipeline::ExperimentResult& result);

enum class TableFormat { Csv, Markdown, Json };
TableFormat table_format_from_string(std::string_view s);

// Emits the overall strategy-by-model table, per-dialect per-metric tables,
// the significance table, and the cost table into out_dir. Every file
// carries the manifest hash and metric signatures. Returns the paths
// written.
std::vector<std::string> emit_tables(
    const ScoreGrid& grid, const std::vector<stats::SignificanceReport>& reports,
    const CostProfile& profile, TableFormat format, const std::string& out_dir);

// Per-segment score dump, one file per (model, strategy):
// columns (segment_id, metric, value, params_signature).
std::vector<std::string> write_segment_scores(
    const pipeline::ExperimentResult& result,
    const corpus::DatasetSplit& split, const metrics::ChrfParams& chrf_params,
    const metrics::BleuParams& bleu_params, const std::string& out_dir);

struct DeltaEntry {
  std::string model;
  std::string strategy;
  std::string dialect;
  double chrf_delta = 0.0;
  double bleu_delta = 0.0;
};
struct DeltaReport {
  std::vector<DeltaEntry> deltas;      // intersection cells, b relative to a
  std::vector<std::string> only_in_a;  // cell keys
  std::vector<std::string> only_in_b;
};

DeltaReport compare_runs(const ScoreGrid& a, const ScoreGrid& b);

// Grid (de)serialization; the json round trip is lossless.
void save_grid(const ScoreGrid& grid, const std::string& path);
ScoreGrid load_grid(const std::string& path);

// Significance report serialization (JSON mirror of the struct).
void save_significance(const std::vector<stats::SignificanceReport>& reports,
                       const std::string& path);

}  // namespace damsa::report
