#include "damsa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "damsa/special_functions.hpp"

namespace damsa::stats {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

// k x (k-1) orthonormal Helmert contrasts, orthogonal to the unit vector.
std::vector<std::vector<double>> helmert_contrasts(std::size_t k) {
  std::vector<std::vector<double>> c(k, std::vector<double>(k - 1, 0.0));
  for (std::size_t j = 1; j < k; ++j) {
    const double norm = std::sqrt(double(j) * double(j + 1));
    for (std::size_t i = 0; i < j; ++i) c[i][j - 1] = 1.0 / norm;
    c[j][j - 1] = -double(j) / norm;
  }
  return c;
}

// Covariance (n-1 denominator) of the contrast-transformed data:
// S_c = C' S C computed directly from the transformed rows.
std::vector<std::vector<double>> contrast_covariance(
    const RepeatedMeasures& data) {
  const std::size_t n = data.n();
  const std::size_t k = data.k();
  const std::size_t d = k - 1;
  const auto contrasts = helmert_contrasts(k);

  std::vector<std::vector<double>> transformed(n, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < k; ++c)
        acc += data.values[i][c] * contrasts[c][j];
      transformed[i][j] = acc;
    }
  }
  std::vector<double> means(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) means[j] += transformed[i][j];
    means[j] /= double(n);
  }
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += (transformed[i][a] - means[a]) * (transformed[i][b] - means[b]);
      }
      cov[a][b] = cov[b][a] = acc / double(n - 1);
    }
  }
  return cov;
}

// Determinant by LU with partial pivoting; fine at these sizes (d <= k-1).
double determinant(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    if (std::fabs(m[pivot][col]) < 1e-300) return 0.0;
    if (pivot != col) {
      std::swap(m[pivot], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= factor * m[col][c];
    }
  }
  return det;
}

double trace(const std::vector<std::vector<double>>& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) t += m[i][i];
  return t;
}

double trace_of_square(const std::vector<std::vector<double>>& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) t += m[i][j] * m[j][i];
  return t;
}

}  // namespace

void RepeatedMeasures::validate() const {
  if (conditions.size() < 2)
    throw DataError("repeated measures need at least 2 conditions");
  if (values.size() < 3)
    throw DataError("repeated measures need at least 3 subjects");
  if (!subjects.empty() && subjects.size() != values.size())
    throw DataError("subject id count does not match row count");
  for (const auto& row : values) {
    if (row.size() != conditions.size())
      throw DataError("ragged repeated-measures matrix");
  }
}

std::vector<double> RepeatedMeasures::column(std::size_t j) const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row[j]);
  return out;
}

ShapiroResult shapiro_wilk(const std::vector<double>& sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000)
    throw DataError("shapiro-wilk requires 3 <= n <= 5000, got " +
                    std::to_string(n));

  std::vector<double> x = sample;
  std::sort(x.begin(), x.end());
  const double xbar = mean_of(x);
  double ssq = 0.0;
  for (double v : x) ssq += (v - xbar) * (v - xbar);
  if (ssq <= 0.0 || x.back() - x.front() <= 0.0)
    throw DataError("shapiro-wilk requires positive sample variance");

  // Expected normal order statistics (Blom scores) and their norm.
  std::vector<double> m(n);
  double ssumm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = normal_quantile((double(i + 1) - 0.375) / (double(n) + 0.25));
    ssumm2 += m[i] * m[i];
  }

  // Order-statistic weights with Royston's polynomial end corrections.
  std::vector<double> a(n, 0.0);
  const double rsn = 1.0 / std::sqrt(double(n));
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[2] = std::sqrt(0.5);
  } else {
    const double mn = m[n - 1];
    const double an =
        -2.706056 * std::pow(rsn, 5) + 4.434685 * std::pow(rsn, 4) -
        2.071190 * std::pow(rsn, 3) - 0.147981 * rsn * rsn + 0.221157 * rsn +
        mn / std::sqrt(ssumm2);
    double phi;
    std::size_t tail;  // number of end weights fixed per side
    if (n > 5) {
      const double mn1 = m[n - 2];
      const double an1 =
          -3.582633 * std::pow(rsn, 5) + 5.682633 * std::pow(rsn, 4) -
          1.752461 * std::pow(rsn, 3) - 0.293762 * rsn * rsn +
          0.042981 * rsn + mn1 / std::sqrt(ssumm2);
      phi = (ssumm2 - 2.0 * mn * mn - 2.0 * mn1 * mn1) /
            (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
      a[n - 1] = an;
      a[n - 2] = an1;
      a[0] = -an;
      a[1] = -an1;
      tail = 2;
    } else {
      phi = (ssumm2 - 2.0 * mn * mn) / (1.0 - 2.0 * an * an);
      a[n - 1] = an;
      a[0] = -an;
      tail = 1;
    }
    const double sqrt_phi = std::sqrt(phi);
    for (std::size_t i = tail; i < n - tail; ++i) a[i] = m[i] / sqrt_phi;
  }

  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) num += a[i] * x[i];
  double w = num * num / ssq;
  if (w > 1.0) w = 1.0;

  double p;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;   // 6/pi
    constexpr double stqr = 1.04719755119660;  // asin(sqrt(3/4))
    p = pi6 * (std::asin(std::sqrt(w)) - stqr);
    p = std::clamp(p, 0.0, 1.0);
  } else if (n <= 11) {
    const double nd = double(n);
    const double gamma = -2.273 + 0.459 * nd;
    const double mu = 0.5440 - 0.39978 * nd + 0.025054 * nd * nd -
                      0.0006714 * nd * nd * nd;
    const double sigma = std::exp(1.3822 - 0.77857 * nd + 0.062767 * nd * nd -
                                  0.0020322 * nd * nd * nd);
    const double y = -std::log(gamma - std::log1p(-w));
    p = normal_sf((y - mu) / sigma);
  } else {
    const double ln = std::log(double(n));
    const double mu = -1.5861 - 0.31082 * ln - 0.083751 * ln * ln +
                      0.0038915 * ln * ln * ln;
    const double sigma =
        std::exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln * ln);
    p = normal_sf((std::log1p(-w) - mu) / sigma);
  }
  return {w, p};
}

SphericityResult mauchly(const RepeatedMeasures& data) {
  data.validate();
  const std::size_t n = data.n();
  const std::size_t k = data.k();
  if (n <= k) throw DataError("mauchly requires more subjects than conditions");

  SphericityResult result;
  if (k == 2) {
    result.applicable = false;
    return result;
  }

  const auto cov = contrast_covariance(data);
  const std::size_t d = k - 1;
  const double det = determinant(cov);
  const double tr = trace(cov);
  if (det <= 0.0 || tr <= 0.0)
    throw DataError("singular contrast covariance in mauchly");

  result.w = det / std::pow(tr / double(d), double(d));
  const double dd = double(d);
  const double f =
      double(n - 1) - (2.0 * dd * dd + dd + 2.0) / (6.0 * dd);
  result.chi2 = -f * std::log(result.w);
  if (result.chi2 < 0.0) result.chi2 = 0.0;
  result.df = int(k * (k - 1) / 2 - 1);
  result.p = chi2_sf(result.chi2, double(result.df));
  return result;
}

AnovaTable rm_anova(const RepeatedMeasures& data) {
  data.validate();
  const std::size_t n = data.n();
  const std::size_t k = data.k();

  double grand = 0.0;
  for (const auto& row : data.values)
    for (double v : row) grand += v;
  grand /= double(n * k);

  std::vector<double> subject_means(n, 0.0);
  std::vector<double> condition_means(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      subject_means[i] += data.values[i][j];
      condition_means[j] += data.values[i][j];
    }
    subject_means[i] /= double(k);
  }
  for (std::size_t j = 0; j < k; ++j) condition_means[j] /= double(n);

  double ss_total = 0.0;
  for (const auto& row : data.values)
    for (double v : row) ss_total += (v - grand) * (v - grand);
  double ss_subjects = 0.0;
  for (double s : subject_means)
    ss_subjects += double(k) * (s - grand) * (s - grand);
  double ss_conditions = 0.0;
  for (double c : condition_means)
    ss_conditions += double(n) * (c - grand) * (c - grand);
  double ss_error = ss_total - ss_subjects - ss_conditions;
  if (ss_error < 0.0) ss_error = 0.0;  // guards fp cancellation

  AnovaTable table;
  table.ss_subjects = ss_subjects;
  table.ss_conditions = ss_conditions;
  table.ss_error = ss_error;
  table.df_conditions = int(k - 1);
  table.df_error = int((n - 1) * (k - 1));
  if (table.df_conditions < 1 || table.df_error < 1)
    throw DataError("degenerate degrees of freedom in rm_anova");
  table.ms_conditions = ss_conditions / table.df_conditions;
  table.ms_error = ss_error / table.df_error;

  if (table.ss_conditions <= 0.0) {
    table.f = 0.0;
    table.p = 1.0;
  } else if (table.ms_error <= 0.0) {
    throw DataError("zero error variance in rm_anova");
  } else {
    table.f = table.ms_conditions / table.ms_error;
    table.p = f_sf(table.f, double(table.df_conditions),
                   double(table.df_error));
  }

  // Greenhouse-Geisser epsilon from the contrast covariance traces.
  const auto cov = contrast_covariance(data);
  const double tr = trace(cov);
  const double tr2 = trace_of_square(cov);
  const double d = double(k - 1);
  if (tr2 > 0.0) {
    table.gg_epsilon = std::clamp(tr * tr / (d * tr2), 1.0 / d, 1.0);
  }
  if (table.f > 0.0) {
    table.p_gg = f_sf(table.f, table.gg_epsilon * table.df_conditions,
                      table.gg_epsilon * table.df_error);
  } else {
    table.p_gg = 1.0;
  }
  return table;
}

std::vector<PairwiseComparison> bonferroni_pairwise(
    const RepeatedMeasures& data, double alpha) {
  data.validate();
  const std::size_t n = data.n();
  const std::size_t k = data.k();
  const double m = double(k * (k - 1) / 2);

  std::vector<PairwiseComparison> comparisons;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairwiseComparison cmp;
      cmp.cond_a = data.conditions[a];
      cmp.cond_b = data.conditions[b];
      cmp.df = int(n - 1);

      std::vector<double> diff(n);
      for (std::size_t i = 0; i < n; ++i)
        diff[i] = data.values[i][a] - data.values[i][b];
      const double dbar = mean_of(diff);
      double var = 0.0;
      for (double dv : diff) var += (dv - dbar) * (dv - dbar);
      var /= double(n - 1);
      cmp.mean_a = mean_of(data.column(a));
      cmp.mean_b = mean_of(data.column(b));

      if (var <= 0.0) {
        cmp.degenerate = true;
        cmp.t = 0.0;
        cmp.raw_p = 1.0;
        cmp.adjusted_p = 1.0;
      } else {
        cmp.t = dbar / std::sqrt(var / double(n));
        cmp.raw_p = student_t_sf_two_sided(cmp.t, double(n - 1));
        cmp.adjusted_p = std::min(1.0, cmp.raw_p * m);
        cmp.significant = cmp.adjusted_p <= alpha;
      }
      if (cmp.significant && cmp.mean_b > cmp.mean_a) {
        std::swap(cmp.cond_a, cmp.cond_b);
        std::swap(cmp.mean_a, cmp.mean_b);
        cmp.t = -cmp.t;
      }
      comparisons.push_back(std::move(cmp));
    }
  }
  return comparisons;
}

SignificanceReport assumption_pipeline(const RepeatedMeasures& data,
                                       const SignificanceConfig& config) {
  data.validate();
  SignificanceReport report;

  for (std::size_t j = 0; j < data.k(); ++j) {
    NormalityResult nr;
    nr.condition = data.conditions[j];
    const auto sw = shapiro_wilk(data.column(j));
    nr.w = sw.w;
    nr.p = sw.p;
    nr.normal = sw.p > config.alpha;
    if (!nr.normal) {
      report.annotations.push_back("normality rejected for condition '" +
                                   nr.condition + "' (p <= alpha)");
    }
    report.normality.push_back(std::move(nr));
  }

  report.sphericity = mauchly(data);
  if (report.sphericity.applicable) {
    const bool p_greater = report.sphericity.p > config.sphericity_alpha;
    report.sphericity.met = config.sphericity_met_when_p_greater
                                ? p_greater
                                : !p_greater;
    if (!report.sphericity.met) {
      report.annotations.push_back(
          "sphericity violated; Greenhouse-Geisser corrected p in effect");
    }
  }

  report.anova = rm_anova(data);
  report.used_gg_correction =
      report.sphericity.applicable && !report.sphericity.met;
  const double omnibus_p =
      report.used_gg_correction ? report.anova.p_gg : report.anova.p;
  report.omnibus_significant = omnibus_p <= config.alpha;

  if (report.omnibus_significant) {
    report.pairwise = bonferroni_pairwise(data, config.alpha);
  } else {
    report.annotations.push_back(
        "omnibus effect not significant; pairwise comparisons skipped");
  }
  return report;
}

std::vector<std::pair<double, double>> qq_points(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  std::vector<std::pair<double, double>> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q =
        normal_quantile((double(i + 1) - 0.375) / (double(n) + 0.25));
    points.emplace_back(q, sample[i]);
  }
  return points;
}

}  // namespace damsa::stats
