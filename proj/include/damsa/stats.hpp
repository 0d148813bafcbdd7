#pragma once

#include <optional>
#include <string>
#include <vector>

#include "damsa/errors.hpp"

namespace damsa::stats {

// Subjects-by-conditions score matrix (one row per segment, one column per
// prompting strategy).
struct RepeatedMeasures {
  std::vector<std::string> conditions;           // k names
  std::vector<std::string> subjects;             // n ids
  std::vector<std::vector<double>> values;       // n rows of k

  std::size_t n() const { return values.size(); }
  std::size_t k() const { return conditions.size(); }
  void validate() const;  // rectangular, n >= 3, k >= 2
  std::vector<double> column(std::size_t j) const;
};

struct ShapiroResult {
  double w = 0.0;
  double p = 0.0;
};

// Shapiro-Wilk W and p via the Royston AS R94 approximation; valid for
// 3 <= n <= 5000 and positive sample variance.
ShapiroResult shapiro_wilk(const std::vector<double>& sample);

struct SphericityResult {
  bool applicable = true;  // false when k == 2 (holds by construction)
  double w = 1.0;
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
  bool met = true;
};

// Mauchly's test of sphericity on the orthonormal-contrast covariance.
SphericityResult mauchly(const RepeatedMeasures& data);

struct AnovaTable {
  double ss_subjects = 0.0;
  double ss_conditions = 0.0;
  double ss_error = 0.0;
  int df_conditions = 0;
  int df_error = 0;
  double ms_conditions = 0.0;
  double ms_error = 0.0;
  double f = 0.0;
  double p = 1.0;
  double gg_epsilon = 1.0;  // Greenhouse-Geisser, advisory
  double p_gg = 1.0;        // F tail with GG-deflated dfs
};

// One-way within-subjects ANOVA.
AnovaTable rm_anova(const RepeatedMeasures& data);

struct PairwiseComparison {
  std::string cond_a;
  std::string cond_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;
  int df = 0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;  // min(1, raw_p * k(k-1)/2)
  bool significant = false;
  bool degenerate = false;  // zero-variance difference vector
};

// Paired t-tests over every unordered condition pair with Bonferroni
// adjustment. Significant pairs are oriented so cond_a has the higher mean.
std::vector<PairwiseComparison> bonferroni_pairwise(
    const RepeatedMeasures& data, double alpha);

struct NormalityResult {
  std::string condition;
  double w = 0.0;
  double p = 0.0;
  bool normal = false;  // p > alpha
};

struct SignificanceConfig {
  double alpha = 0.05;
  double sphericity_alpha = 0.05;
  // Standard convention: sphericity holds when p > alpha. Set false to take
  // p <= alpha as "met" instead.
  bool sphericity_met_when_p_greater = true;
};

struct SignificanceReport {
  std::string model_id;
  std::vector<NormalityResult> normality;
  SphericityResult sphericity;
  AnovaTable anova;
  bool omnibus_significant = false;
  bool used_gg_correction = false;
  std::vector<PairwiseComparison> pairwise;  // empty unless omnibus hit
  std::size_t dropped_subjects = 0;
  std::vector<std::string> annotations;
};

// Normality per condition, sphericity, omnibus ANOVA, then pairwise tests
// gated on a significant omnibus effect. Assumption violations annotate the
// report (and switch the omnibus to the GG-corrected p); they never block.
SignificanceReport assumption_pipeline(const RepeatedMeasures& data,
                                       const SignificanceConfig& config = {});

// (theoretical, sample) quantile pairs for QQ-plot CSV export.
std::vector<std::pair<double, double>> qq_points(std::vector<double> sample);

}  // namespace damsa::stats
