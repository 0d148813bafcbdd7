#include "damsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "damsa/util/utf8.hpp"

namespace damsa::metrics {

namespace {

constexpr double kEps = 1e-16;

bool is_ascii_punct(char32_t cp) {
  // The 32 characters of C's punctuation set (string.punctuation).
  return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
         (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// mteval-v13a tokenization. The regex passes run on UTF-8 bytes; every
// pattern only ever matches ASCII at split points, so multi-byte sequences
// pass through intact.
std::vector<std::string> tokenize_13a(std::string_view text,
                                      bool isolate_arabic_punct) {
  static const std::regex punct(
      R"(([\{-\~\[-` -\&\(-\+\:-\@/]))", std::regex::optimize);
  static const std::regex period_comma_left(R"(([^0-9])([\.,]))",
                                            std::regex::optimize);
  static const std::regex period_comma_right(R"(([\.,])([^0-9]))",
                                             std::regex::optimize);
  static const std::regex digit_dash(R"(([0-9])(-))", std::regex::optimize);

  std::string line(text);
  replace_all(line, "<skipped>", "");
  replace_all(line, "-\n", "");
  replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    replace_all(line, "&quot;", "\"");
    replace_all(line, "&amp;", "&");
    replace_all(line, "&lt;", "<");
    replace_all(line, "&gt;", ">");
  }
  line = " " + line + " ";
  line = std::regex_replace(line, punct, " $1 ");
  line = std::regex_replace(line, period_comma_left, "$1 $2 ");
  line = std::regex_replace(line, period_comma_right, " $1 $2");
  line = std::regex_replace(line, digit_dash, "$1 $2 ");
  if (isolate_arabic_punct) {
    replace_all(line, "،", " ، ");  // ،
    replace_all(line, "؛", " ؛ ");  // ؛
    replace_all(line, "؟", " ؟ ");  // ؟
  }
  return util::split_ws(line);
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// [hyp_count, ref_count, match_count] per order: char orders first, then
// word orders.
std::vector<long> chrf_statistics(std::string_view hyp, std::string_view ref,
                                  const ChrfParams& params) {
  std::vector<long> stats;
  stats.reserve(3 * (params.char_order + params.word_order));
  NgramOptions opts;
  opts.remove_whitespace = params.remove_whitespace_for_char_ngrams;
  auto accumulate = [&stats](const std::map<std::string, long>& h,
                             const std::map<std::string, long>& r) {
    long hyp_count = 0, ref_count = 0, match = 0;
    for (const auto& [ng, c] : h) hyp_count += c;
    for (const auto& [ng, c] : r) ref_count += c;
    for (const auto& [ng, c] : h) {
      auto it = r.find(ng);
      if (it != r.end()) match += std::min(c, it->second);
    }
    stats.push_back(hyp_count);
    stats.push_back(ref_count);
    stats.push_back(match);
  };
  for (int n = 1; n <= params.char_order; ++n) {
    accumulate(ngram_profile(hyp, n, NgramMode::Char, opts),
               ngram_profile(ref, n, NgramMode::Char, opts));
  }
  for (int n = 1; n <= params.word_order; ++n) {
    accumulate(ngram_profile(hyp, n, NgramMode::Word, opts),
               ngram_profile(ref, n, NgramMode::Word, opts));
  }
  return stats;
}

// F_beta averaged over n-gram orders. Orders where neither side has any
// n-gram are dropped from the average (effective-order rule); if no order
// is effective the score is 0.
double chrf_score_from_stats(const std::vector<long>& stats,
                             const ChrfParams& params) {
  const int order = params.char_order + params.word_order;
  const double factor = params.beta * params.beta;
  double score = 0.0;
  int effective_order = 0;
  for (int i = 0; i < order; ++i) {
    const double n_hyp = double(stats[3 * i]);
    const double n_ref = double(stats[3 * i + 1]);
    const double n_match = double(stats[3 * i + 2]);
    const double prec = n_hyp > 0 ? n_match / n_hyp : kEps;
    const double rec = n_ref > 0 ? n_match / n_ref : kEps;
    const double denom = factor * prec + rec;
    score += denom > 0 ? (1 + factor) * prec * rec / denom : kEps;
    if (n_hyp > 0 || n_ref > 0) ++effective_order;
  }
  if (effective_order == 0) return 0.0;
  // The eps terms can push an exact match a few ulps past 100.
  return std::min(100.0, 100.0 * score / effective_order);
}

struct BleuStats {
  std::vector<long> correct;
  std::vector<long> total;
  long sys_len = 0;
  long ref_len = 0;
};

BleuStats bleu_statistics(const std::vector<std::string>& hyp_tokens,
                          const std::vector<std::string>& ref_tokens,
                          int max_order) {
  BleuStats st;
  st.correct.assign(max_order, 0);
  st.total.assign(max_order, 0);
  st.sys_len = long(hyp_tokens.size());
  st.ref_len = long(ref_tokens.size());
  for (int n = 1; n <= max_order; ++n) {
    std::map<std::string, long> hyp_ngrams, ref_ngrams;
    auto count = [n](const std::vector<std::string>& toks,
                     std::map<std::string, long>& out) {
      if (long(toks.size()) < n) return;
      for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        std::string key = toks[i];
        for (int k = 1; k < n; ++k) {
          key += ' ';
          key += toks[i + k];
        }
        ++out[key];
      }
    };
    count(hyp_tokens, hyp_ngrams);
    count(ref_tokens, ref_ngrams);
    for (const auto& [ng, c] : hyp_ngrams) {
      st.total[n - 1] += c;
      auto it = ref_ngrams.find(ng);
      if (it != ref_ngrams.end())
        st.correct[n - 1] += std::min(c, it->second);
    }
  }
  return st;
}

double safe_log(double v) {
  // Stands in for log(0) so a hard-zero precision drives the score to 0.
  if (v == 0.0) return -9999999999.0;
  return std::log(v);
}

double bleu_from_stats(const BleuStats& st, const BleuParams& params,
                       bool force_smoothing, bool effective_order) {
  std::vector<double> precisions(params.max_order, 0.0);
  std::vector<double> correct(st.correct.begin(), st.correct.end());
  std::vector<double> total(st.total.begin(), st.total.end());

  BleuSmoothing smoothing = params.smoothing;
  if (force_smoothing && smoothing == BleuSmoothing::None)
    smoothing = BleuSmoothing::Exponential;

  double smooth_mteval = 1.0;
  int eff_order = params.max_order;
  for (int n = 1; n <= params.max_order; ++n) {
    if (smoothing == BleuSmoothing::AddK && n > 1) {
      correct[n - 1] += params.smooth_k;
      total[n - 1] += params.smooth_k;
    }
    if (total[n - 1] == 0) break;
    if (effective_order) eff_order = n;
    if (correct[n - 1] == 0) {
      if (smoothing == BleuSmoothing::Exponential) {
        smooth_mteval *= 2.0;
        precisions[n - 1] = 100.0 / (smooth_mteval * total[n - 1]);
      }
    } else {
      precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1];
    }
  }

  double bp = 1.0;
  if (st.sys_len < st.ref_len) {
    bp = st.sys_len > 0
             ? std::exp(1.0 - double(st.ref_len) / double(st.sys_len))
             : 0.0;
  }
  double log_sum = 0.0;
  for (int i = 0; i < eff_order; ++i) log_sum += safe_log(precisions[i]);
  return std::min(100.0, bp * std::exp(log_sum / eff_order));
}

}  // namespace

void ChrfParams::validate() const {
  if (char_order < 1) throw DataError("chrF++ char_order must be >= 1");
  if (word_order < 0) throw DataError("chrF++ word_order must be >= 0");
  if (beta <= 0) throw DataError("chrF++ beta must be > 0");
}

std::string ChrfParams::signature() const {
  return "chrF++|c" + std::to_string(char_order) + "|w" +
         std::to_string(word_order) + "|b" + format_number(beta) + "|ws" +
         (remove_whitespace_for_char_ngrams ? "-" : "+");
}

void BleuParams::validate() const {
  if (max_order < 1) throw DataError("BLEU max_order must be >= 1");
  if (smoothing == BleuSmoothing::AddK && smooth_k <= 0)
    throw DataError("BLEU add-k smoothing requires k > 0");
}

std::string BleuParams::signature() const {
  std::string tok =
      tokenizer == BleuTokenizer::PunctSplit13a ? "13a-style" : "ws";
  std::string smooth;
  switch (smoothing) {
    case BleuSmoothing::Exponential: smooth = "exp"; break;
    case BleuSmoothing::None: smooth = "none"; break;
    case BleuSmoothing::AddK: smooth = "add-k" + format_number(smooth_k); break;
  }
  return "BLEU|o" + std::to_string(max_order) + "|tok:" + tok +
         "|smooth:" + smooth + (lowercase ? "|lc+" : "|lc-");
}

std::string to_string(MetricId id) {
  return id == MetricId::CHRFPP ? "chrF++" : "BLEU";
}

std::map<std::string, long> ngram_profile(std::string_view text, int n,
                                          NgramMode mode,
                                          const NgramOptions& opts) {
  if (n < 1) throw DataError("n-gram order must be >= 1");
  std::map<std::string, long> counts;
  if (mode == NgramMode::Char) {
    std::string prepared =
        opts.remove_whitespace ? util::remove_ws(text) : std::string(text);
    auto cps = util::decode_utf8(prepared);
    if (long(cps.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= cps.size(); ++i) {
      std::string key;
      for (int k = 0; k < n; ++k) util::append_utf8(key, cps[i + k]);
      ++counts[key];
    }
  } else {
    std::vector<std::string> tokens = opts.split_edge_punctuation
                                          ? chrf_word_tokens(text)
                                          : util::split_ws(text);
    if (long(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (int k = 1; k < n; ++k) {
        key += ' ';
        key += tokens[i + k];
      }
      ++counts[key];
    }
  }
  return counts;
}

std::vector<std::string> tokenize(std::string_view text, BleuTokenizer mode) {
  if (mode == BleuTokenizer::Whitespace) return util::split_ws(text);
  return tokenize_13a(text, /*isolate_arabic_punct=*/true);
}

std::vector<std::string> chrf_word_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& token : util::split_ws(text)) {
    auto cps = util::decode_utf8(token);
    if (cps.size() < 2) {
      out.push_back(token);
      continue;
    }
    if (is_ascii_punct(cps.back())) {
      std::vector<char32_t> head(cps.begin(), cps.end() - 1);
      out.push_back(util::encode_utf8(head));
      out.push_back(util::encode_utf8({cps.back()}));
    } else if (is_ascii_punct(cps.front())) {
      out.push_back(util::encode_utf8({cps.front()}));
      std::vector<char32_t> tail(cps.begin() + 1, cps.end());
      out.push_back(util::encode_utf8(tail));
    } else {
      out.push_back(token);
    }
  }
  return out;
}

double chrf_pp_sentence(std::string_view hyp, std::string_view ref,
                        const ChrfParams& params) {
  params.validate();
  if (ref.empty()) throw DataError("chrF++ requires a non-empty reference");
  return chrf_score_from_stats(chrf_statistics(hyp, ref, params), params);
}

MetricScore chrf_pp_corpus(const std::vector<std::string>& hyps,
                           const std::vector<std::string>& refs,
                           const ChrfParams& params) {
  params.validate();
  if (hyps.size() != refs.size())
    throw DataError("chrF++ corpus: hypothesis/reference length mismatch");
  if (hyps.empty()) throw DataError("chrF++ corpus: empty corpus");

  MetricScore score;
  score.metric_id = MetricId::CHRFPP;
  score.params_signature = params.signature();
  std::vector<long> corpus_stats(3 * (params.char_order + params.word_order), 0);
  score.segment_values.reserve(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (refs[i].empty())
      throw DataError("chrF++ corpus: empty reference at index " +
                      std::to_string(i));
    auto stats = chrf_statistics(hyps[i], refs[i], params);
    for (std::size_t k = 0; k < stats.size(); ++k) corpus_stats[k] += stats[k];
    score.segment_values.push_back(chrf_score_from_stats(stats, params));
  }
  score.corpus_value = chrf_score_from_stats(corpus_stats, params);
  return score;
}

double bleu_sentence(std::string_view hyp, std::string_view ref,
                     const BleuParams& params) {
  params.validate();
  std::string h(hyp), r(ref);
  if (params.lowercase) {
    h = lower_ascii(h);
    r = lower_ascii(r);
  }
  auto st = bleu_statistics(tokenize(h, params.tokenizer),
                            tokenize(r, params.tokenizer), params.max_order);
  return bleu_from_stats(st, params, /*force_smoothing=*/true,
                         /*effective_order=*/true);
}

MetricScore bleu_corpus(const std::vector<std::string>& hyps,
                        const std::vector<std::string>& refs,
                        const BleuParams& params) {
  params.validate();
  if (hyps.size() != refs.size())
    throw DataError("BLEU corpus: hypothesis/reference length mismatch");
  if (hyps.empty()) throw DataError("BLEU corpus: empty corpus");

  MetricScore score;
  score.metric_id = MetricId::BLEU;
  score.params_signature = params.signature();
  BleuStats corpus_stats;
  corpus_stats.correct.assign(params.max_order, 0);
  corpus_stats.total.assign(params.max_order, 0);
  score.segment_values.reserve(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    std::string h = hyps[i], r = refs[i];
    if (params.lowercase) {
      h = lower_ascii(h);
      r = lower_ascii(r);
    }
    auto st = bleu_statistics(tokenize(h, params.tokenizer),
                              tokenize(r, params.tokenizer), params.max_order);
    for (int k = 0; k < params.max_order; ++k) {
      corpus_stats.correct[k] += st.correct[k];
      corpus_stats.total[k] += st.total[k];
    }
    corpus_stats.sys_len += st.sys_len;
    corpus_stats.ref_len += st.ref_len;
    score.segment_values.push_back(bleu_from_stats(
        st, params, /*force_smoothing=*/true, /*effective_order=*/true));
  }
  score.corpus_value = bleu_from_stats(corpus_stats, params,
                                       /*force_smoothing=*/false,
                                       /*effective_order=*/false);
  return score;
}

}  // namespace damsa::metrics
